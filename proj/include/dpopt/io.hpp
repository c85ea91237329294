// Copyright 2026 The dpopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include "dpopt/objectives.hpp"

namespace dpopt {

// Sparse text loader: one example per line, `label idx:val idx:val ...`,
// 1-based indices, labels in {-1, 0, +1} mapped to {0, 1}. dim == 0 infers
// the dimension from the largest index seen; otherwise an index above dim is
// a parse error. Malformed tokens raise ParseError with line and column.
Dataset load_libsvm(const std::string& path, Index dim = 0);

// Inverse of load_libsvm: zeros are dropped, values keep full precision, and
// labels are written as +1/-1. Reloading yields an identical Dataset.
void save_libsvm(const Dataset& data, const std::string& path);

}  // namespace dpopt
