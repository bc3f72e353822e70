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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

#include "seqbound/decision.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/lm_matrix.hpp"
#include "seqbound/marginals.hpp"

namespace seqbound {

inline constexpr double kBoundTolerance = 1e-9;

/// (1/N) sum_n sum_x sum_c |pr_n(c, x) - q_n(c, x)|, exact by enumeration.
inline double d_bar(const JointDist& true_dist, const JointDist& model_dist,
                    std::size_t cap = kDefaultEnumerationCap) {
  require_same_alphabet(true_dist, model_dist);
  const std::size_t x_count = capped_pow(true_dist.x_size(), true_dist.seq_len(), cap);
  const PositionJointEvaluator truth(true_dist);
  const PositionJointEvaluator model(model_dist);
  Sequence x_seq(true_dist.seq_len());
  double total = 0.0;
  for (std::size_t xi = 0; xi < x_count; ++xi) {
    decode_sequence(xi, true_dist.x_size(), x_seq);
    total += (truth(x_seq).joint - model(x_seq).joint).cwiseAbs().sum();
  }
  return total / static_cast<double>(true_dist.seq_len());
}

inline void require_same_support(const SequenceDist& p, const SequenceDist& q) {
  SEQBOUND_CHECK(p.base() == q.base() && p.seq_len() == q.seq_len() && p.size() == q.size(),
                 ErrorKind::kAlphabetMismatch, "sequence distributions on different alphabets");
}

inline double l1_marginal_distance(const SequenceDist& p, const SequenceDist& q) {
  require_same_support(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return total;
}

/// KL(p || q) with 0 log 0 = 0; +infinity where p > 0 = q. No smoothing.
inline double kl_marginal(const SequenceDist& p, const SequenceDist& q) {
  require_same_support(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    total += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative sum for near-identical inputs.
  return std::max(total, 0.0);
}

/// N^2 * |P_C^+|_1 * l1_marginal.
inline double chain_bound_rhs(const LmMatrix& lm, double l1_marg, std::size_t n_len) {
  SEQBOUND_CHECK(lm.full_rank, ErrorKind::kRankDeficientInput, "LM matrix is not full column rank");
  const auto n = static_cast<double>(n_len);
  return n * n * lm.induced_l1 * l1_marg;
}

/// beta = 2 N^4 |P_C^+|_1^2, the Pinsker factor in Delta^2 <= beta * KL.
inline double pinsker_beta(const LmMatrix& lm, std::size_t n_len) {
  SEQBOUND_CHECK(lm.full_rank, ErrorKind::kRankDeficientInput, "LM matrix is not full column rank");
  const auto n = static_cast<double>(n_len);
  return 2.0 * n * n * n * n * lm.induced_l1 * lm.induced_l1;
}

inline double lp_sum(const Eigen::MatrixXd& diff, int p) {
  if (p == 1) return diff.cwiseAbs().sum();
  return std::sqrt(diff.squaredNorm());
}

/// (d_cond_p, d_pos_p): the l_p distance between conditional tables and
/// between position marginals. Callers check d_cond <= |P^+|_p * d_pos.
inline std::pair<double, double> table_position_distances(const ConditionalTable& true_cond,
                                                  const ConditionalTable& model_cond,
                                                  const SequenceDist& true_posdist,
                                                  const SequenceDist& model_posdist, int p) {
  SEQBOUND_CHECK(p == 1 || p == 2, ErrorKind::kInvalidArgument, "only p = 1, 2 are supported");
  SEQBOUND_CHECK(true_cond.x_size() == model_cond.x_size() && true_cond.c_size() == model_cond.c_size(),
                 ErrorKind::kAlphabetMismatch, "conditional tables of different shape");
  require_same_support(true_posdist, model_posdist);
  SEQBOUND_CHECK(true_posdist.base() == true_cond.x_size(), ErrorKind::kAlphabetMismatch,
                 "position distribution base differs from |X|");
  return {lp_sum(true_cond.matrix() - model_cond.matrix(), p),
          lp_sum(true_posdist.position_marginals() - model_posdist.position_marginals(), p)};
}

/// (lhs, rhs) of the telescoping bound on one (c, x) pair:
/// |prod pr - prod q| <= sum_j prod_{n<j} pr * prod_{k>j} q * |pr_j - q_j|.
inline std::pair<double, double> telescoping_gap(const ConditionalTable& true_cond,
                                            const ConditionalTable& model_cond,
                                            std::span<const int> c_seq, std::span<const int> x_seq) {
  SEQBOUND_CHECK(c_seq.size() == x_seq.size() && !c_seq.empty(), ErrorKind::kLengthMismatch,
                 "label and observation sequences differ in length");
  const std::size_t n_len = c_seq.size();
  std::vector<double> pr(n_len), q(n_len);
  for (std::size_t n = 0; n < n_len; ++n) {
    pr[n] = true_cond(x_seq[n], c_seq[n]);
    q[n] = model_cond(x_seq[n], c_seq[n]);
  }
  double prod_pr = 1.0, prod_q = 1.0;
  for (std::size_t n = 0; n < n_len; ++n) {
    prod_pr *= pr[n];
    prod_q *= q[n];
  }
  // suffix[j] = prod_{k >= j} q_k
  std::vector<double> suffix(n_len + 1, 1.0);
  for (std::size_t k = n_len; k-- > 0;) suffix[k] = suffix[k + 1] * q[k];
  double rhs = 0.0, prefix = 1.0;
  for (std::size_t j = 0; j < n_len; ++j) {
    rhs += prefix * suffix[j + 1] * std::abs(pr[j] - q[j]);
    prefix *= pr[j];
  }
  return {std::abs(prod_pr - prod_q), rhs};
}

/// One row of the bound chain for a (true, model) pair.
struct BoundReport {
  std::uint64_t seed = 0;
  std::size_t x_size = 0;
  std::size_t c_size = 0;
  std::size_t seq_len = 0;
  double sigma_min = 0.0;
  double pinv_l1 = 0.0;
  double l1_marginal = 0.0;
  double d_bar = 0.0;
  double delta_bar = 0.0;
  double chain_bound = std::numeric_limits<double>::infinity();
  double kl_marginal = 0.0;
  double pinsker_beta = std::numeric_limits<double>::infinity();
  double d_cond[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double d_pos[2] = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  bool structured = false;
  bool full_rank = false;

  // Individual links; a link whose hypotheses fail is vacuously true.
  bool mismatch_bound_ok() const { return delta_bar <= d_bar + kBoundTolerance; }
  bool chain_bound_ok() const {
    return !(structured && full_rank) || d_bar <= chain_bound + kBoundTolerance;
  }
  bool pinsker_ok() const {
    return !(structured && full_rank) || !std::isfinite(kl_marginal) ||
           delta_bar * delta_bar <= pinsker_beta * kl_marginal + kBoundTolerance;
  }
  bool chain_ok() const { return mismatch_bound_ok() && chain_bound_ok() && pinsker_ok(); }
};

/// Evaluates every bound quantity for a true distribution and a model that
/// shares its label prior.
inline BoundReport evaluate_bounds(const JointDist& true_dist, const JointDist& model_dist,
                                   std::size_t cap = kDefaultEnumerationCap) {
  require_same_alphabet(true_dist, model_dist);
  const std::size_t x_count = capped_pow(true_dist.x_size(), true_dist.seq_len(), cap);
  const std::size_t n_len = true_dist.seq_len();
  const PositionJointEvaluator truth(true_dist);
  const PositionJointEvaluator model(model_dist);

  BoundReport report;
  report.x_size = true_dist.x_size();
  report.c_size = true_dist.c_size();
  report.seq_len = n_len;
  report.structured = true_dist.is_structured() && model_dist.is_structured();

  // One enumeration pass yields both marginals, D-bar and Delta-bar.
  std::vector<double> pr_x(x_count), q_x(x_count);
  std::vector<double> local(n_len, 0.0);
  double abs_total = 0.0;
  Sequence x_seq(n_len);
  for (std::size_t xi = 0; xi < x_count; ++xi) {
    decode_sequence(xi, true_dist.x_size(), x_seq);
    const PositionJoints pr = truth(x_seq);
    const PositionJoints q = model(x_seq);
    pr_x[xi] = pr.total;
    q_x[xi] = q.total;
    abs_total += (pr.joint - q.joint).cwiseAbs().sum();
    for (std::size_t n = 0; n < n_len; ++n) {
      const auto row = static_cast<Eigen::Index>(n);
      const int bayes = argmax_label(pr.joint.row(row));
      const int chosen = argmax_label(q.joint.row(row));
      local[n] += pr.joint(row, bayes) - pr.joint(row, chosen);
    }
  }
  double delta_total = 0.0;
  for (double d : local) delta_total += d;
  report.delta_bar = delta_total / static_cast<double>(n_len);
  report.d_bar = abs_total / static_cast<double>(n_len);

  const auto pr_marg = SequenceDist::from_probs(true_dist.x_size(), n_len, std::move(pr_x));
  const auto q_marg = SequenceDist::from_probs(true_dist.x_size(), n_len, std::move(q_x));
  report.l1_marginal = l1_marginal_distance(pr_marg, q_marg);
  report.kl_marginal = kl_marginal(pr_marg, q_marg);

  const LmMatrix lm = build_lm_matrix(true_dist.prior());
  report.sigma_min = lm.sigma_min;
  report.pinv_l1 = lm.induced_l1;
  report.full_rank = lm.full_rank;
  if (lm.full_rank) {
    report.chain_bound = chain_bound_rhs(lm, report.l1_marginal, n_len);
    report.pinsker_beta = pinsker_beta(lm, n_len);
  }
  if (report.structured) {
    for (int p : {1, 2}) {
      const auto [cond, pos] = table_position_distances(true_dist.cond(), model_dist.cond(), pr_marg, q_marg, p);
      report.d_cond[p - 1] = cond;
      report.d_pos[p - 1] = pos;
    }
  }
  return report;
}

}  // namespace seqbound
