// Copyright 2026 The seqbound Authors.
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

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "seqbound/distributions.hpp"

namespace seqbound {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-8;

/// Induced matrix norm sup_{v != 0} |Mv|_p / |v|_p for p in {1, 2}.
inline double induced_norm(const Eigen::MatrixXd& m, int p) {
  SEQBOUND_CHECK(p == 1 || p == 2, ErrorKind::kInvalidArgument, "induced norm supports p = 1, 2");
  if (m.size() == 0) return 0.0;
  if (p == 1) return m.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// The N x |C| matrix of position unigram probabilities pr_n(c), its SVD
/// derived left-inverse and norms.
///
/// Rank deficiency is reported, not rejected: the null-space constructions
/// need rank-deficient instances. For those, `pinv` is the truncated
/// Moore-Penrose pseudo-inverse and is not a left-inverse.
struct LmMatrix {
  Eigen::MatrixXd matrix;           // N x C
  Eigen::VectorXd singular_values;  // C entries, descending, zero padded when N < C
  Eigen::MatrixXd pinv;             // C x N
  Eigen::MatrixXd null_space;       // C x (C - rank), orthonormal columns
  double sigma_min = 0.0;
  double induced_l1 = 0.0;
  double induced_l2 = 0.0;
  int rank = 0;
  bool full_rank = false;

  std::size_t seq_len() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t c_size() const { return static_cast<std::size_t>(matrix.cols()); }
};

inline LmMatrix build_lm_matrix(const Eigen::MatrixXd& matrix) {
  SEQBOUND_CHECK(matrix.rows() > 0 && matrix.cols() > 0, ErrorKind::kShapeMismatch,
                 "LM matrix must be non-empty");
  LmMatrix lm;
  lm.matrix = matrix;
  const Eigen::Index cols = matrix.cols();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  lm.singular_values = Eigen::VectorXd::Zero(cols);
  lm.singular_values.head(sv.size()) = sv;

  const double largest = sv.size() > 0 ? sv(0) : 0.0;
  const double cutoff = kRankTolerance * largest;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) ++lm.rank;
  }
  lm.full_rank = lm.rank == cols;
  lm.sigma_min = lm.singular_values(cols - 1);

  const Eigen::MatrixXd& u = svd.matrixU();
  const Eigen::MatrixXd& v = svd.matrixV();
  lm.pinv = Eigen::MatrixXd::Zero(cols, matrix.rows());
  for (int i = 0; i < lm.rank; ++i) lm.pinv += (v.col(i) / sv(i)) * u.col(i).transpose();
  lm.null_space = v.rightCols(cols - lm.rank);

  lm.induced_l1 = induced_norm(lm.pinv, 1);
  lm.induced_l2 = lm.rank > 0 ? 1.0 / sv(lm.rank - 1) : 0.0;
  return lm;
}

inline LmMatrix build_lm_matrix(const LabelPrior& prior) { return build_lm_matrix(prior.position_marginals()); }

}  // namespace seqbound
