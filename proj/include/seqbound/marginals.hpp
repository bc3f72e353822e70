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

#include <span>
#include <vector>

#include "seqbound/alphabet.hpp"
#include "seqbound/distributions.hpp"

namespace seqbound {

/// Position joints pr_n(c, x_1^N) for one observation sequence, as an N x C
/// matrix, together with pr(x_1^N) itself.
struct PositionJoints {
  Eigen::MatrixXd joint;
  double total = 0.0;
};

namespace detail {

// Forward-backward over the prior's chain form with emissions
// cond_n(x_n | c). Probability domain: fine for the short sequences every
// evaluator here enumerates.
inline PositionJoints chain_position_joints(const ChainForm& chain, const JointDist& dist,
                                            std::span<const int> x_seq) {
  const std::size_t n_len = x_seq.size();
  const auto c_len = chain.initial.size();
  Eigen::MatrixXd alpha(n_len, c_len), beta(n_len, c_len);

  auto emission = [&](std::size_t n) {
    Eigen::VectorXd e(c_len);
    for (Eigen::Index c = 0; c < c_len; ++c) e(c) = dist.cond(n)(x_seq[n], static_cast<int>(c));
    return e;
  };

  alpha.row(0) = chain.initial.cwiseProduct(emission(0)).transpose();
  for (std::size_t n = 1; n < n_len; ++n) {
    alpha.row(n) = (alpha.row(n - 1) * chain.transitions[n - 1]).cwiseProduct(emission(n).transpose());
  }
  beta.row(n_len - 1).setOnes();
  for (std::size_t n = n_len - 1; n-- > 0;) {
    const Eigen::VectorXd next = emission(n + 1).cwiseProduct(beta.row(n + 1).transpose());
    beta.row(n) = (chain.transitions[n] * next).transpose();
  }

  PositionJoints out;
  out.joint = alpha.cwiseProduct(beta);
  out.total = alpha.row(n_len - 1).sum();
  return out;
}

inline PositionJoints enumerate_position_joints(const std::vector<double>& prior_probs,
                                                const JointDist& dist, std::span<const int> x_seq) {
  const std::size_t n_len = dist.seq_len();
  const std::size_t c_size = dist.c_size();
  PositionJoints out;
  out.joint = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_len), static_cast<Eigen::Index>(c_size));
  Sequence c_seq(n_len);
  for (std::size_t ci = 0; ci < prior_probs.size(); ++ci) {
    if (prior_probs[ci] == 0.0) continue;
    decode_sequence(ci, c_size, c_seq);
    double p = prior_probs[ci];
    for (std::size_t n = 0; n < n_len; ++n) p *= dist.cond(n)(x_seq[n], c_seq[n]);
    for (std::size_t n = 0; n < n_len; ++n) out.joint(n, c_seq[n]) += p;
    out.total += p;
  }
  return out;
}

}  // namespace detail

/// Computes position joints for many observation sequences against one
/// distribution. Caches the chain form (factorized priors) or the dense
/// prior table (Dense priors) so repeated queries stay cheap.
class PositionJointEvaluator {
 public:
  explicit PositionJointEvaluator(const JointDist& dist) : dist_(&dist) {
    if (auto chain = dist.prior().chain()) {
      chain_ = std::move(*chain);
      factorized_ = true;
    } else {
      prior_probs_ = dist.prior().to_dense(dist.alphabet().enumeration_cap);
    }
  }

  PositionJoints operator()(std::span<const int> x_seq) const {
    if (factorized_) return detail::chain_position_joints(chain_, *dist_, x_seq);
    return detail::enumerate_position_joints(prior_probs_, *dist_, x_seq);
  }

 private:
  const JointDist* dist_;
  bool factorized_ = false;
  ChainForm chain_;
  std::vector<double> prior_probs_;
};

inline PositionJoints position_joints(const JointDist& dist, std::span<const int> x_seq) {
  SEQBOUND_CHECK(x_seq.size() == dist.seq_len(), ErrorKind::kIndexOutOfRange, "observation length");
  for (int x : x_seq) {
    SEQBOUND_CHECK(x >= 0 && static_cast<std::size_t>(x) < dist.x_size(), ErrorKind::kIndexOutOfRange,
                   "observation id out of range");
  }
  return PositionJointEvaluator(dist)(x_seq);
}

/// pr_n(c, x_1^N) at 0-based position n.
inline double position_joint(const JointDist& dist, std::size_t n, int c, std::span<const int> x_seq) {
  SEQBOUND_CHECK(n < dist.seq_len(), ErrorKind::kIndexOutOfRange,
                 "position " + std::to_string(n + 1) + " outside 1.." + std::to_string(dist.seq_len()));
  SEQBOUND_CHECK(c >= 0 && static_cast<std::size_t>(c) < dist.c_size(), ErrorKind::kIndexOutOfRange,
                 "label id out of range");
  return position_joints(dist, x_seq).joint(static_cast<Eigen::Index>(n), c);
}

inline double position_joint(const LabelPrior& prior, const ConditionalTable& cond, std::size_t n, int c,
                             std::span<const int> x_seq) {
  return position_joint(JointDist::structured(prior, cond), n, c, x_seq);
}

/// The observation marginal pr(x_1^N) = sum_c pr(c_1^N, x_1^N), dense over X^N.
inline SequenceDist marginal_x(const JointDist& dist, std::size_t cap = kDefaultEnumerationCap) {
  const std::size_t x_count = capped_pow(dist.x_size(), dist.seq_len(), cap);
  const PositionJointEvaluator evaluator(dist);
  std::vector<double> probs(x_count);
  const bool factorized = dist.prior().factorized();
  Sequence x_seq(dist.seq_len());
  std::vector<double> prior_probs;
  if (!factorized) prior_probs = dist.prior().to_dense(cap);
  for (std::size_t xi = 0; xi < x_count; ++xi) {
    decode_sequence(xi, dist.x_size(), x_seq);
    if (factorized) {
      probs[xi] = evaluator(x_seq).total;
    } else {
      double total = 0.0;
      Sequence c_seq(dist.seq_len());
      for (std::size_t ci = 0; ci < prior_probs.size(); ++ci) {
        if (prior_probs[ci] == 0.0) continue;
        decode_sequence(ci, dist.c_size(), c_seq);
        double p = prior_probs[ci];
        for (std::size_t n = 0; n < dist.seq_len(); ++n) p *= dist.cond(n)(x_seq[n], c_seq[n]);
        total += p;
      }
      probs[xi] = total;
    }
  }
  return SequenceDist::from_probs(dist.x_size(), dist.seq_len(), std::move(probs));
}

inline SequenceDist marginal_x(const LabelPrior& prior, const ConditionalTable& cond,
                               std::size_t cap = kDefaultEnumerationCap) {
  return marginal_x(JointDist::structured(prior, cond), cap);
}

}  // namespace seqbound
