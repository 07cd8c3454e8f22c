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

#include "privrec/symmetric_matrix.h"

#include "absl/status/status.h"

namespace privrec {

absl::StatusOr<SymmetricMatrix> SymmetricMatrix::FromDense(
    const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    return absl::InvalidArgumentError("matrix is not square");
  }
  if (!m.allFinite()) {
    return absl::InvalidArgumentError("matrix has non-finite entries");
  }
  if (m != m.transpose()) {
    return absl::InvalidArgumentError("matrix is not exactly symmetric");
  }
  return SymmetricMatrix(m, kTrusted);
}

SymmetricMatrix SymmetricMatrix::Symmetrized(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd s = 0.5 * (m + m.transpose());
  return SymmetricMatrix(std::move(s), kTrusted);
}

SymmetricMatrix SymmetricMatrix::Identity(Eigen::Index n) {
  return SymmetricMatrix(Eigen::MatrixXd::Identity(n, n), kTrusted);
}

}  // namespace privrec
