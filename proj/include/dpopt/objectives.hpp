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

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dpopt/errors.hpp"

namespace dpopt {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Model parameters theta in R^d.
using ModelParams = Vector;

struct Example {
  Vector features;
  double label;  // exactly 0 or 1
};

// Binary classification data, one example per row, dense storage.
class Dataset {
 public:
  Dataset() = default;

  // Validates invariants: n >= 1, labels in {0,1}, finite features.
  static Dataset create(Matrix features, Vector labels);

  Index n() const { return features_.rows(); }
  Index dim() const { return features_.cols(); }
  const Matrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  const Vector& row_sq_norms() const { return row_sq_norms_; }
  double max_row_sq_norm() const { return row_sq_norms_.maxCoeff(); }

  Example example(Index i) const {
    return Example{features_.row(i).transpose(), labels_[i]};
  }

  // Subset by row indices (used to build per-party datasets).
  Dataset subset(std::span<const Index> rows) const;

  // Rescales every feature vector by 1/max_i ||x_i||_2 (opt-in flag in the
  // experiment harness; lowers the default smoothness bound).
  void scale_to_unit_max_norm();

 private:
  Matrix features_;
  Vector labels_;
  Vector row_sq_norms_;
};

// Loss/clipping configuration. Under per-example clipping the Lipschitz
// constant used for noise calibration is the clip threshold itself.
struct Objective {
  double lambda = 0.0;          // nonconvex regularizer weight, >= 0
  double clip_threshold = 1.0;  // C > 0 (may be +inf for the unclipped paths)
  double lipschitz_G = 1.0;     // == clip_threshold under clipping
  double smoothness_L = 1.0;    // gradient-Lipschitz constant, > 0

  static Objective with_clip(double clip, double lambda, double smoothness) {
    if (!(clip > 0.0)) throw InvalidInputError("clip threshold must be > 0");
    if (lambda < 0.0) throw InvalidInputError("lambda must be >= 0");
    if (!(smoothness > 0.0)) throw InvalidInputError("smoothness must be > 0");
    return Objective{lambda, clip, clip, smoothness};
  }
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Mean negative log-likelihood of the logistic model plus the bounded
// nonconvex regularizer lambda * sum_j theta_j^2 / (1 + theta_j^2).
// Probabilities are clamped to [1e-12, 1 - 1e-12] before the logs.
double loss_value(const ModelParams& theta, const Dataset& data, double lambda);

// Gradient of the per-example loss: (sigmoid(x.theta) - y) x
//  + lambda * 2 theta_j / (1 + theta_j^2)^2.
Vector example_grad(const ModelParams& theta, const Vector& x, double y,
                    double lambda);
inline Vector example_grad(const ModelParams& theta, const Example& ex,
                           double lambda) {
  return example_grad(theta, ex.features, ex.label, lambda);
}

// L2 projection onto the ball of radius clip_threshold; identity inside it.
template <typename Derived>
Vector clip(const Eigen::MatrixBase<Derived>& g, double clip_threshold) {
  if (!(clip_threshold > 0.0))
    throw InvalidInputError("clip threshold must be > 0");
  const double norm = g.norm();
  if (norm <= clip_threshold) return g;
  return g * (clip_threshold / norm);
}

// Mean of per-example clipped gradients over the index set:
// (1/|B|) sum_{i in B} clip(grad f_i(theta), C). Output norm <= C.
// Indices must be nonempty and in [0, n).
Vector batch_clipped_grad(const ModelParams& theta, const Dataset& data,
                          std::span<const Index> indices, const Objective& obj);

// Unclipped analytic gradient of loss_value; diagnostics only.
Vector full_gradient(const ModelParams& theta, const Dataset& data,
                     double lambda);

// Default smoothness bound for the built-in objective:
// 0.25 * max_i ||x_i||^2 + 2 lambda.
double smoothness_bound(const Dataset& data, double lambda);

}  // namespace dpopt
