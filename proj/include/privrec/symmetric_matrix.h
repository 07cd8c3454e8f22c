// Copyright 2026 The privrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVREC_SYMMETRIC_MATRIX_H_
#define PRIVREC_SYMMETRIC_MATRIX_H_

#include <utility>

#include <Eigen/Dense>

#include "absl/status/statusor.h"

namespace privrec {

// Dense real symmetric matrix. Every mutator writes both (i, j) and (j, i),
// so exact symmetry holds by construction.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(Eigen::Index n) : data_(Eigen::MatrixXd::Zero(n, n)) {}

  // Fails unless `m` is square, finite and exactly symmetric.
  static absl::StatusOr<SymmetricMatrix> FromDense(const Eigen::MatrixXd& m);

  // (m + m^T) / 2.
  static SymmetricMatrix Symmetrized(const Eigen::MatrixXd& m);

  static SymmetricMatrix Identity(Eigen::Index n);

  Eigen::Index dim() const { return data_.rows(); }

  double operator()(Eigen::Index i, Eigen::Index j) const {
    return data_(i, j);
  }

  void Set(Eigen::Index i, Eigen::Index j, double value) {
    data_(i, j) = value;
    data_(j, i) = value;
  }

  void Add(Eigen::Index i, Eigen::Index j, double value) {
    data_(i, j) += value;
    if (i != j) data_(j, i) += value;
  }

  const Eigen::MatrixXd& dense() const { return data_; }

  double FrobeniusNorm() const { return data_.norm(); }

  SymmetricMatrix operator+(const SymmetricMatrix& other) const {
    return SymmetricMatrix(data_ + other.data_, kTrusted);
  }
  SymmetricMatrix operator-(const SymmetricMatrix& other) const {
    return SymmetricMatrix(data_ - other.data_, kTrusted);
  }
  SymmetricMatrix operator*(double scale) const {
    return SymmetricMatrix(data_ * scale, kTrusted);
  }

 private:
  enum TrustedTag { kTrusted };
  SymmetricMatrix(Eigen::MatrixXd data, TrustedTag) : data_(std::move(data)) {}

  Eigen::MatrixXd data_;
};

}  // namespace privrec

#endif  // PRIVREC_SYMMETRIC_MATRIX_H_
