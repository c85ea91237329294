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

#include "dpopt/io.hpp"

#include <cassert>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

namespace dpopt {
namespace {

struct SparseRow {
  double label;
  std::vector<std::pair<Index, double>> entries;  // 0-based indices
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

double parse_label(const std::string& line, std::size_t line_no,
                   std::size_t begin, std::size_t end) {
  const std::string tok = line.substr(begin, end - begin);
  if (tok == "+1" || tok == "1") return 1.0;
  if (tok == "-1" || tok == "0") return 0.0;
  // Accept float spellings of the same values ("1.0", "-1.0", "0.0").
  errno = 0;
  char* rest = nullptr;
  const double v = std::strtod(tok.c_str(), &rest);
  if (errno == 0 && rest != nullptr && *rest == '\0') {
    if (v == 1.0) return 1.0;
    if (v == -1.0 || v == 0.0) return 0.0;
  }
  throw ParseError("label must be one of {-1, 0, +1}, got '" + tok + "'",
                   line_no, begin + 1);
}

}  // namespace

Dataset load_libsvm(const std::string& path, Index dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file " + path, 0, 0);

  std::vector<SparseRow> rows;
  Index max_index = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = 0;
    const std::size_t len = line.size();
    while (pos < len && is_space(line[pos])) ++pos;
    if (pos == len || line[pos] == '#') continue;

    std::size_t tok_end = pos;
    while (tok_end < len && !is_space(line[tok_end])) ++tok_end;
    SparseRow row;
    row.label = parse_label(line, line_no, pos, tok_end);
    pos = tok_end;

    while (pos < len) {
      while (pos < len && is_space(line[pos])) ++pos;
      if (pos == len) break;
      const std::size_t tok_begin = pos;
      while (pos < len && !is_space(line[pos])) ++pos;
      const std::string tok = line.substr(tok_begin, pos - tok_begin);
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError("expected index:value, got '" + tok + "'", line_no,
                         tok_begin + 1);

      errno = 0;
      char* rest = nullptr;
      const long long raw_index =
          std::strtoll(tok.c_str(), &rest, 10);
      if (errno != 0 || rest != tok.c_str() + colon || raw_index < 1)
        throw ParseError("bad feature index in '" + tok + "'", line_no,
                         tok_begin + 1);
      if (dim > 0 && raw_index > dim)
        throw ParseError("feature index " + std::to_string(raw_index) +
                             " exceeds dimension " + std::to_string(dim),
                         line_no, tok_begin + 1);

      errno = 0;
      const double value = std::strtod(tok.c_str() + colon + 1, &rest);
      if (errno != 0 || rest != tok.c_str() + tok.size())
        throw ParseError("bad feature value in '" + tok + "'", line_no,
                         tok_begin + colon + 2);

      const Index index = static_cast<Index>(raw_index) - 1;
      max_index = std::max(max_index, static_cast<Index>(raw_index));
      row.entries.emplace_back(index, value);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no examples in " + path, line_no, 1);

  const Index d = dim > 0 ? dim : max_index;
  if (d < 1) throw ParseError("no features in " + path, line_no, 1);
  Matrix features = Matrix::Zero(static_cast<Index>(rows.size()), d);
  Vector labels(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    labels[static_cast<Index>(i)] = rows[i].label;
    for (const auto& [j, v] : rows[i].entries)
      features(static_cast<Index>(i), j) = v;
  }
  return Dataset::create(std::move(features), std::move(labels));
}

void save_libsvm(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[64];
  for (Index i = 0; i < data.n(); ++i) {
    out << (data.labels()[i] == 1.0 ? "+1" : "-1");
    for (Index j = 0; j < data.dim(); ++j) {
      const double v = data.features()(i, j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << (j + 1) << ':' << buf;
    }
    out << '\n';
  }
}

}  // namespace dpopt
