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

#include "dpopt/objectives.hpp"

namespace dpopt {
namespace {

constexpr double kProbFloor = 1e-12;

// Gradient of the nonconvex regularizer sum_j theta_j^2/(1+theta_j^2),
// componentwise 2 theta_j / (1 + theta_j^2)^2.
Vector regularizer_grad(const ModelParams& theta) {
  const auto one_plus_sq = (1.0 + theta.array().square());
  return (2.0 * theta.array() / (one_plus_sq * one_plus_sq)).matrix();
}

}  // namespace

Dataset Dataset::create(Matrix features, Vector labels) {
  if (features.rows() < 1) throw InvalidInputError("dataset must be nonempty");
  if (features.rows() != labels.size())
    throw InvalidInputError("feature/label count mismatch");
  if (!features.allFinite())
    throw InvalidInputError("features must be finite");
  for (Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      throw InvalidInputError("labels must be exactly 0 or 1");
  }
  Dataset d;
  d.features_ = std::move(features);
  d.labels_ = std::move(labels);
  d.row_sq_norms_ = d.features_.rowwise().squaredNorm();
  return d;
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Matrix f(static_cast<Index>(rows.size()), dim());
  Vector l(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= n())
      throw InvalidInputError("subset index out of range");
    f.row(static_cast<Index>(k)) = features_.row(rows[k]);
    l[static_cast<Index>(k)] = labels_[rows[k]];
  }
  return create(std::move(f), std::move(l));
}

void Dataset::scale_to_unit_max_norm() {
  const double max_norm = std::sqrt(max_row_sq_norm());
  if (max_norm > 0.0) {
    features_ /= max_norm;
    row_sq_norms_ = features_.rowwise().squaredNorm();
  }
}

double loss_value(const ModelParams& theta, const Dataset& data,
                  double lambda) {
  if (theta.size() != data.dim())
    throw InvalidInputError("loss_value: dimension mismatch");
  if (lambda < 0.0) throw InvalidInputError("loss_value: lambda must be >= 0");
  const Vector z = data.features() * theta;
  const auto p = z.array().unaryExpr([](double v) {
    return std::clamp(sigmoid(v), kProbFloor, 1.0 - kProbFloor);
  });
  const auto y = data.labels().array();
  const double nll =
      -(y * p.log() + (1.0 - y) * (1.0 - p).log()).mean();
  const double reg =
      (theta.array().square() / (1.0 + theta.array().square())).sum();
  return nll + lambda * reg;
}

Vector example_grad(const ModelParams& theta, const Vector& x, double y,
                    double lambda) {
  if (theta.size() != x.size())
    throw InvalidInputError("example_grad: dimension mismatch");
  const double a = sigmoid(x.dot(theta)) - y;
  return a * x + lambda * regularizer_grad(theta);
}

Vector batch_clipped_grad(const ModelParams& theta, const Dataset& data,
                          std::span<const Index> indices,
                          const Objective& obj) {
  if (theta.size() != data.dim())
    throw InvalidInputError("batch_clipped_grad: dimension mismatch");
  if (indices.empty())
    throw InvalidInputError("batch_clipped_grad: empty index set");
  const Index m = static_cast<Index>(indices.size());

  Matrix xb(m, data.dim());
  Vector yb(m), rowsq(m);
  for (Index k = 0; k < m; ++k) {
    const Index i = indices[static_cast<std::size_t>(k)];
    if (i < 0 || i >= data.n())
      throw InvalidInputError("batch_clipped_grad: index out of range");
    xb.row(k) = data.features().row(i);
    yb[k] = data.labels()[i];
    rowsq[k] = data.row_sq_norms()[i];
  }

  const Vector r = obj.lambda * regularizer_grad(theta);
  const double r_sq = r.squaredNorm();
  const Vector a =
      (xb * theta).array().unaryExpr([](double z) { return sigmoid(z); }) -
      yb.array();
  // ||g_i||^2 = a_i^2 ||x_i||^2 + 2 a_i (x_i . r) + ||r||^2
  const Vector xr = xb * r;
  const auto grad_sq = (a.array().square() * rowsq.array() +
                        2.0 * a.array() * xr.array() + r_sq)
                           .max(0.0);
  Vector scale(m);
  const double c = obj.clip_threshold;
  for (Index k = 0; k < m; ++k) {
    const double norm = std::sqrt(grad_sq[k]);
    scale[k] = (norm > c) ? c / norm : 1.0;
  }
  Vector out = xb.transpose() * (scale.array() * a.array()).matrix();
  out += scale.sum() * r;
  return out / static_cast<double>(m);
}

Vector full_gradient(const ModelParams& theta, const Dataset& data,
                     double lambda) {
  if (theta.size() != data.dim())
    throw InvalidInputError("full_gradient: dimension mismatch");
  const Vector a =
      (data.features() * theta)
          .array()
          .unaryExpr([](double z) { return sigmoid(z); }) -
      data.labels().array();
  return data.features().transpose() * a / static_cast<double>(data.n()) +
         lambda * regularizer_grad(theta);
}

double smoothness_bound(const Dataset& data, double lambda) {
  return 0.25 * data.max_row_sq_norm() + 2.0 * lambda;
}

}  // namespace dpopt
