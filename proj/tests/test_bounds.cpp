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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oracle.hpp"
#include "seqbound/seqbound.hpp"
#include "test_util.hpp"

namespace seqbound {
namespace {

using testing::kAllKinds;
using testing::random_joint;

const Alphabet kSmall = Alphabet::make(4, 3, 3);

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kIo;
}

// Full-rank prior with the given family, redrawn until sigma_min > 1e-3.
LabelPrior full_rank_prior(const Alphabet& a, PriorKind kind, std::uint64_t seed) {
  for (std::uint64_t s = seed;; s += 7919) {
    auto prior = sample_prior(a, PriorSpec{kind, 0.3}, s);
    const auto lm = build_lm_matrix(prior);
    if (lm.full_rank && lm.sigma_min > 1e-3) return prior;
  }
}

TEST(LmMatrix, IdenticalRowsHaveRankOne) {
  Eigen::MatrixXd rows(4, 3);
  rows.rowwise() = Eigen::RowVector3d(0.2, 0.5, 0.3);
  const auto lm = build_lm_matrix(LabelPrior::position_unigram(rows));
  EXPECT_EQ(lm.rank, 1);
  EXPECT_FALSE(lm.full_rank);
  EXPECT_EQ(lm.null_space.cols(), 2);
  EXPECT_LT((lm.matrix * lm.null_space).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LmMatrix, IdentityMatrix) {
  const auto lm = build_lm_matrix(LabelPrior::position_unigram(Eigen::MatrixXd::Identity(3, 3)));
  EXPECT_TRUE(lm.full_rank);
  EXPECT_LT((lm.pinv - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(lm.induced_l1, 1.0, 1e-14);
  EXPECT_NEAR(lm.sigma_min, 1.0, 1e-14);
  EXPECT_NEAR(lm.induced_l2, 1.0, 1e-14);
}

TEST(LmMatrix, LeftInverseOnRandomFullRankInstances) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (auto kind : kAllKinds) {
      const auto lm = build_lm_matrix(full_rank_prior(Alphabet::make(5, 3, 4), kind, seed));
      ASSERT_TRUE(lm.full_rank);
      EXPECT_LT((lm.pinv * lm.matrix - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT((lm.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
      // Agrees with the normal-equation form on well-conditioned inputs.
      const Eigen::MatrixXd normal = (lm.matrix.transpose() * lm.matrix).inverse() * lm.matrix.transpose();
      EXPECT_LT((lm.pinv - normal).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(LmMatrix, FewerPositionsThanLabelsIsRankDeficient) {
  const auto lm = build_lm_matrix(testing::random_prior(Alphabet::make(5, 3, 2), PriorKind::kBigram, 1));
  EXPECT_FALSE(lm.full_rank);
  EXPECT_EQ(lm.sigma_min, 0.0);
  EXPECT_EQ(lm.singular_values.size(), 3);
}

TEST(LmMatrix, InducedL1EqualsSupremum) {
  Rng rng(42);
  std::normal_distribution<double> normal;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto lm = build_lm_matrix(full_rank_prior(kSmall, PriorKind::kDense, seed));
    double best = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd v(3);
      for (int k = 0; k < 3; ++k) v(k) = normal(rng);
      const double ratio = (lm.pinv * v).lpNorm<1>() / v.lpNorm<1>();
      EXPECT_LE(ratio, lm.induced_l1 + 1e-12);
      best = std::max(best, ratio);
    }
    double basis = 0.0;
    for (int k = 0; k < 3; ++k) basis = std::max(basis, (lm.pinv * Eigen::VectorXd::Unit(3, k)).lpNorm<1>());
    EXPECT_DOUBLE_EQ(basis, lm.induced_l1);
    EXPECT_GT(best, 0.5 * lm.induced_l1);
  }
}

TEST(DBar, ZeroForIdenticalDistributions) {
  const auto joint = random_joint(kSmall, PriorKind::kBigram, 3);
  EXPECT_EQ(d_bar(joint, joint), 0.0);
}

TEST(DBar, DisjointSingleEventSupportsGiveTwo) {
  const Alphabet one = Alphabet::make(4, 3, 1);
  const auto prior = LabelPrior::position_unigram(Eigen::RowVector3d(1.0, 0.0, 0.0));
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(4, 3, 0.25), b = a;
  a.col(0) << 1, 0, 0, 0;
  b.col(0) << 0, 0, 0, 1;
  EXPECT_DOUBLE_EQ(d_bar(JointDist::structured(prior, make_conditional(one, a)),
                         JointDist::structured(prior, make_conditional(one, b))),
                   2.0);
}

TEST(DBar, MatchesIndependentEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (auto kind : kAllKinds) {
      const auto truth = random_joint(kSmall, kind, seed);
      const auto model = random_joint(kSmall, kind, seed + 300);
      EXPECT_NEAR(d_bar(truth, model), oracle::d_bar(truth, model), 1e-12);
    }
  }
}

TEST(L1Marginal, BasicProperties) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto p_joint = random_joint(kSmall, PriorKind::kDense, seed);
    const auto q_joint = random_joint(kSmall, PriorKind::kBigram, seed + 1);
    const auto p = marginal_x(p_joint);
    const auto q = marginal_x(q_joint);
    EXPECT_EQ(l1_marginal_distance(p, p), 0.0);
    const double d = l1_marginal_distance(p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
    const auto pb = oracle::marginal(p_joint);
    const auto qb = oracle::marginal(q_joint);
    double direct = 0.0;
    for (std::size_t i = 0; i < pb.size(); ++i) direct += std::abs(pb[i] - qb[i]);
    EXPECT_NEAR(d, direct, 1e-12);
  }
  EXPECT_EQ(kind_of([] {
              l1_marginal_distance(marginal_x(random_joint(kSmall, PriorKind::kDense, 1)),
                                   marginal_x(random_joint(Alphabet::make(5, 3, 3), PriorKind::kDense, 1)));
            }),
            ErrorKind::kAlphabetMismatch);
}

TEST(ChainBoundRhs, Arithmetic) {
  LmMatrix lm;
  lm.full_rank = true;
  lm.induced_l1 = 2.0;
  EXPECT_EQ(chain_bound_rhs(lm, 0.0, 3), 0.0);
  EXPECT_NEAR(chain_bound_rhs(lm, 0.1, 3), 1.8, 1e-15);
  lm.full_rank = false;
  EXPECT_EQ(kind_of([&] { chain_bound_rhs(lm, 0.1, 3); }), ErrorKind::kRankDeficientInput);
}

TEST(PinskerBeta, Arithmetic) {
  LmMatrix lm;
  lm.full_rank = true;
  lm.induced_l1 = 1.0;
  EXPECT_EQ(pinsker_beta(lm, 1), 2.0);
  lm.induced_l1 = 2.0;
  EXPECT_EQ(pinsker_beta(lm, 3), 648.0);
  lm.full_rank = false;
  EXPECT_EQ(kind_of([&] { pinsker_beta(lm, 3); }), ErrorKind::kRankDeficientInput);
}

TEST(TablePositionDistances, IdenticalConditionalsGiveZero) {
  const auto joint = random_joint(kSmall, PriorKind::kDense, 2);
  const auto marg = marginal_x(joint);
  for (int p : {1, 2}) {
    const auto [dc, dp] = table_position_distances(joint.cond(), joint.cond(), marg, marg, p);
    EXPECT_EQ(dc, 0.0);
    EXPECT_EQ(dp, 0.0);
  }
}

TEST(TablePositionDistances, IdentityLmMatrixGivesEquality) {
  // Position n always carries label n, so pr_n(x) = pr(x | c = n).
  const auto prior = LabelPrior::position_unigram(Eigen::MatrixXd::Identity(3, 3));
  const auto a = sample_conditional(kSmall, 1u, 1.0);
  const auto b = sample_conditional(kSmall, 2u, 1.0);
  const auto pa = marginal_x(prior, a);
  const auto pb = marginal_x(prior, b);
  for (int p : {1, 2}) {
    const auto [dc, dp] = table_position_distances(a, b, pa, pb, p);
    EXPECT_NEAR(dc, dp, 1e-14);
  }
}

TEST(TablePositionDistances, HoldsOnRandomFullRankInstances) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto prior = full_rank_prior(kSmall, kAllKinds[seed % 3], seed);
    const auto lm = build_lm_matrix(prior);
    const auto a = sample_conditional(kSmall, 2 * seed, 1.0);
    const auto b = sample_conditional(kSmall, 2 * seed + 1, 1.0);
    const auto pa = marginal_x(prior, a);
    const auto pb = marginal_x(prior, b);
    const auto [d1c, d1p] = table_position_distances(a, b, pa, pb, 1);
    const auto [d2c, d2p] = table_position_distances(a, b, pa, pb, 2);
    EXPECT_LE(d1c, lm.induced_l1 * d1p + 1e-9);
    EXPECT_LE(d2c, lm.induced_l2 * d2p + 1e-9);
    EXPECT_NEAR(lm.induced_l2, induced_norm(lm.pinv, 2), 1e-9 * lm.induced_l2);
  }
}

TEST(TelescopingGap, SingleFactorIsExact) {
  const Alphabet one = Alphabet::make(4, 3, 1);
  const auto a = sample_conditional(one, 5u, 1.0);
  const auto b = sample_conditional(one, 6u, 1.0);
  for (int x = 0; x < 4; ++x) {
    for (int c = 0; c < 3; ++c) {
      const auto [lhs, rhs] = telescoping_gap(a, b, Sequence{c}, Sequence{x});
      EXPECT_EQ(lhs, rhs);
    }
  }
}

TEST(TelescopingGap, IdenticalTablesGiveZero) {
  const auto a = sample_conditional(kSmall, 5u, 1.0);
  const auto [lhs, rhs] = telescoping_gap(a, a, Sequence{0, 1, 2}, Sequence{3, 1, 0});
  EXPECT_EQ(lhs, 0.0);
  EXPECT_EQ(rhs, 0.0);
}

TEST(TelescopingGap, HoldsExhaustively) {
  const auto a = sample_conditional(kSmall, 8u, 0.5);
  const auto b = sample_conditional(kSmall, 9u, 0.5);
  for (std::size_t ci = 0; ci < 27; ++ci) {
    for (std::size_t xi = 0; xi < 64; ++xi) {
      const auto [lhs, rhs] = telescoping_gap(a, b, decode_sequence(ci, 3, 3), decode_sequence(xi, 4, 3));
      EXPECT_LE(lhs, rhs + 1e-12);
    }
  }
}

TEST(KlMarginal, ZeroForIdenticalAndInfiniteOffSupport) {
  const auto p = marginal_x(random_joint(kSmall, PriorKind::kBigram, 4));
  EXPECT_EQ(kl_marginal(p, p), 0.0);
  std::vector<double> point(64, 0.0), other(64, 0.0);
  point[5] = 1.0;
  other[6] = 1.0;
  const auto pp = SequenceDist::from_probs(4, 3, point);
  const auto qq = SequenceDist::from_probs(4, 3, other);
  EXPECT_EQ(kl_marginal(pp, qq), std::numeric_limits<double>::infinity());
  EXPECT_EQ(kl_marginal(pp, pp), 0.0);
}

TEST(KlMarginal, PinskerAtMarginalLevel) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = marginal_x(random_joint(kSmall, kAllKinds[seed % 3], seed));
    const auto q = marginal_x(random_joint(kSmall, kAllKinds[(seed + 2) % 3], seed + 1));
    const double l1 = l1_marginal_distance(p, q);
    const double kl = kl_marginal(p, q);
    EXPECT_GT(kl, 0.0);
    EXPECT_LE(0.5 * l1 * l1, kl + 1e-9);
  }
}

TEST(BoundChain, HoldsOnRandomStructuredFullRankInstances) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto prior = full_rank_prior(kSmall, kAllKinds[seed % 3], seed);
    const auto truth = JointDist::structured(prior, sample_conditional(kSmall, 3 * seed, 1.0));
    const auto model = JointDist::structured(prior, sample_conditional(kSmall, 3 * seed + 1, 1.0));
    const auto r = evaluate_bounds(truth, model);
    EXPECT_TRUE(r.structured && r.full_rank);
    EXPECT_LE(r.delta_bar, r.d_bar + 1e-9);
    EXPECT_LE(r.d_bar, r.chain_bound + 1e-9);
    EXPECT_LE(r.delta_bar * r.delta_bar, r.pinsker_beta * r.kl_marginal + 1e-9);
    EXPECT_TRUE(r.chain_ok());
    EXPECT_NEAR(r.delta_bar, mismatch(truth, model).averaged, 1e-15);
    EXPECT_NEAR(r.d_bar, d_bar(truth, model), 1e-15);
  }
}

// Relabels C in the prior and conditional simultaneously.
JointDist permute_labels(const JointDist& d, const std::vector<int>& perm) {
  const auto dense = d.prior().to_dense();
  std::vector<double> permuted(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    auto c = decode_sequence(i, d.c_size(), d.seq_len());
    for (int& v : c) v = perm[v];
    permuted[encode_sequence(c, d.c_size())] = dense[i];
  }
  Eigen::MatrixXd cond(d.x_size(), d.c_size());
  for (std::size_t c = 0; c < d.c_size(); ++c) cond.col(perm[c]) = d.cond().matrix().col(c);
  return JointDist::structured(LabelPrior::dense(d.c_size(), d.seq_len(), permuted, kDefaultEnumerationCap, true),
                               ConditionalTable::make(cond, true));
}

JointDist permute_observations(const JointDist& d, const std::vector<int>& perm) {
  Eigen::MatrixXd cond(d.x_size(), d.c_size());
  for (std::size_t x = 0; x < d.x_size(); ++x) cond.row(perm[x]) = d.cond().matrix().row(x);
  return JointDist::structured(d.prior(), ConditionalTable::make(cond, true));
}

void expect_same_report(const BoundReport& a, const BoundReport& b) {
  EXPECT_NEAR(a.sigma_min, b.sigma_min, 1e-9);
  EXPECT_NEAR(a.pinv_l1, b.pinv_l1, 1e-9);
  EXPECT_NEAR(a.l1_marginal, b.l1_marginal, 1e-9);
  EXPECT_NEAR(a.d_bar, b.d_bar, 1e-9);
  EXPECT_NEAR(a.delta_bar, b.delta_bar, 1e-9);
  EXPECT_NEAR(a.kl_marginal, b.kl_marginal, 1e-9);
}

TEST(BoundChain, InvariantUnderRelabeling) {
  const std::vector<int> label_perm = {2, 0, 1};
  const std::vector<int> obs_perm = {3, 1, 0, 2};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto prior = full_rank_prior(kSmall, PriorKind::kDense, seed);
    const auto truth = JointDist::structured(prior, sample_conditional(kSmall, 5 * seed, 1.0));
    const auto model = JointDist::structured(prior, sample_conditional(kSmall, 5 * seed + 1, 1.0));
    const auto base = evaluate_bounds(truth, model);
    expect_same_report(base, evaluate_bounds(permute_labels(truth, label_perm), permute_labels(model, label_perm)));
    expect_same_report(base,
                       evaluate_bounds(permute_observations(truth, obs_perm), permute_observations(model, obs_perm)));
  }
}

}  // namespace
}  // namespace seqbound
