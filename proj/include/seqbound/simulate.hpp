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

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqbound/bounds.hpp"
#include "seqbound/decision.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/lm_matrix.hpp"
#include "seqbound/marginals.hpp"
#include "seqbound/random.hpp"

namespace seqbound {

/// How the model conditional of each simulated pair is drawn.
enum class ModelMode {
  kMixed,       // interpolation with probability interpolation_fraction, else independent
  kEqualTrue,   // q = pr, every record is an exact match
};

struct SimConfig {
  Alphabet alphabet = Alphabet::make(4, 3, 3);
  std::size_t samples = 10'000;
  double sigma_min_floor = 0.01;
  double pinv_l1_cap = 2.0;
  std::uint64_t master_seed = 0;
  double interpolation_fraction = 0.5;
  double prior_concentration = 0.1;
  double cond_concentration = 1.0;
  ModelMode model_mode = ModelMode::kMixed;
  // A slot that draws this many priors without one passing the filters
  // means the acceptance rate is far below 1e-4.
  std::size_t starvation_window = 100'000;

  void validate() const {
    SEQBOUND_CHECK(samples > 0, ErrorKind::kInvalidArgument, "samples must be positive");
    SEQBOUND_CHECK(sigma_min_floor >= 0.0, ErrorKind::kInvalidArgument, "sigma_min_floor must be >= 0");
    SEQBOUND_CHECK(pinv_l1_cap > 0.0, ErrorKind::kInvalidArgument, "pinv_l1_cap must be positive");
    SEQBOUND_CHECK(interpolation_fraction >= 0.0 && interpolation_fraction <= 1.0,
                   ErrorKind::kInvalidArgument, "interpolation_fraction must lie in [0, 1]");
    SEQBOUND_CHECK(prior_concentration > 0.0 && cond_concentration > 0.0, ErrorKind::kInvalidArgument,
                   "Dirichlet concentrations must be positive");
    SEQBOUND_CHECK(starvation_window > 0, ErrorKind::kInvalidArgument, "starvation window must be positive");
  }
};

struct SimRecord {
  BoundReport report;
  std::uint64_t seed = 0;          // per-instance seed derived from master seed
  std::size_t iterations = 0;      // priors drawn before one passed the filters
  double interpolation = -1.0;     // lambda of the interpolated model, -1 if independent
};

/// Everything needed to rebuild one accepted instance.
struct SimInstance {
  JointDist true_dist;
  JointDist model_dist;
  SimRecord record;
};

/// Draws the index-th accepted instance. Depends only on (config, index), so
/// any partition of indices across workers reproduces the same stream.
inline SimInstance draw_sim_instance(const SimConfig& config, std::size_t index) {
  const std::uint64_t seed = derive_seed(config.master_seed, index);
  Rng rng(seed);
  const Alphabet& alphabet = config.alphabet;

  std::size_t iterations = 0;
  LabelPrior prior;
  for (;;) {
    SEQBOUND_CHECK(iterations < config.starvation_window, ErrorKind::kFilterStarvation,
                   "no prior passed the filters in " + std::to_string(config.starvation_window) +
                       " draws (sigma_min > " + std::to_string(config.sigma_min_floor) +
                       ", |P+|_1 <= " + std::to_string(config.pinv_l1_cap) + ")");
    ++iterations;
    prior = sample_prior(alphabet, PriorSpec{PriorKind::kDense, config.prior_concentration}, rng);
    const LmMatrix lm = build_lm_matrix(prior);
    if (lm.full_rank && lm.sigma_min > config.sigma_min_floor && lm.induced_l1 <= config.pinv_l1_cap) break;
  }

  ConditionalTable true_cond = sample_conditional(alphabet, rng, config.cond_concentration);
  ConditionalTable model_cond = true_cond;
  double lambda = -1.0;
  if (config.model_mode == ModelMode::kMixed) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool interpolate = u(rng) < config.interpolation_fraction;
    ConditionalTable other = sample_conditional(alphabet, rng, config.cond_concentration);
    if (interpolate) {
      lambda = sample_log_uniform(rng, 1e-3, 1.0);
      model_cond = mix_conditionals(true_cond, other, lambda);
    } else {
      model_cond = std::move(other);
    }
  }

  SimInstance instance{JointDist::structured(prior, std::move(true_cond)),
                       JointDist::structured(prior, std::move(model_cond)), {}};
  instance.record.report = evaluate_bounds(instance.true_dist, instance.model_dist, alphabet.enumeration_cap);
  instance.record.report.seed = seed;
  instance.record.seed = seed;
  instance.record.iterations = iterations;
  instance.record.interpolation = lambda;
  return instance;
}

/// Streams `samples` accepted records to `sink` in index order.
inline void run_bound_simulation(const SimConfig& config, const std::function<void(const SimRecord&)>& sink) {
  config.validate();
  for (std::size_t i = 0; i < config.samples; ++i) sink(draw_sim_instance(config, i).record);
}

inline std::vector<SimRecord> run_bound_simulation(const SimConfig& config) {
  std::vector<SimRecord> records;
  records.reserve(config.samples);
  run_bound_simulation(config, [&](const SimRecord& r) { records.push_back(r); });
  return records;
}

enum class ViolatedCondition { kRankDeficient, kStructureBroken };

inline std::string to_string(ViolatedCondition v) {
  return v == ViolatedCondition::kRankDeficient ? "RankDeficient" : "StructureBroken";
}

/// An exact-match pair (identical observation marginals) whose decision rules
/// still disagree.
struct Counterexample {
  JointDist true_dist;
  JointDist model_dist;
  double l1_marginal = 0.0;
  double delta_bar = 0.0;
  ViolatedCondition violated_condition = ViolatedCondition::kRankDeficient;
  double sigma_min = 0.0;
  int rank = 0;
  bool full_rank = false;
  bool true_structured = false;
  double epsilon = 0.0;
  std::size_t tries = 0;
};

struct CounterexampleOptions {
  std::size_t max_tries = 200;
  double min_delta_bar = 0.01;
};

namespace detail {

// Largest eps >= 0 keeping base + eps * direction entrywise nonnegative.
inline double max_valid_step(const Eigen::MatrixXd& base, const Eigen::MatrixXd& direction) {
  double limit = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    const double d = direction.data()[i];
    if (d < 0.0) limit = std::min(limit, base.data()[i] / -d);
  }
  return limit;
}

// 0.1 * 2^k for k in [-8, 8], clipped to the validity limit, plus the limit.
inline std::vector<double> epsilon_grid(double limit) {
  std::vector<double> grid;
  for (int k = -8; k <= 8; ++k) {
    const double eps = 0.1 * std::ldexp(1.0, k);
    if (eps < limit) grid.push_back(eps);
  }
  if (std::isfinite(limit) && limit > 0.0) grid.push_back(limit);
  return grid;
}

inline Eigen::MatrixXd clamp_nonnegative(Eigen::MatrixXd m) { return m.cwiseMax(0.0); }

}  // namespace detail

/// Exhibits Delta-bar > 0 under an exact marginal match when P_C is rank
/// deficient: a position-unigram prior with repeated rows, and a model that
/// moves mass between two observations along a null-space direction of P_C.
inline Counterexample find_rank_counterexample(const Alphabet& alphabet, std::uint64_t seed,
                                               const CounterexampleOptions& options = {}) {
  SEQBOUND_CHECK(alphabet.c_size >= 2 && alphabet.x_size > alphabet.c_size, ErrorKind::kInvalidArgument,
                 "rank counterexample needs |X| > |C| >= 2");
  const auto c_len = static_cast<Eigen::Index>(alphabet.c_size);
  const std::size_t max_rank = std::min(alphabet.seq_len, alphabet.c_size - 1);

  Counterexample best;
  bool found = false;
  for (std::size_t attempt = 0; attempt < options.max_tries; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    const std::size_t rank = std::uniform_int_distribution<std::size_t>(1, max_rank)(rng);
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < rank; ++r) rows.push_back(sample_dirichlet(rng, alphabet.c_size, 1.0));
    Eigen::MatrixXd tables(alphabet.seq_len, c_len);
    for (std::size_t n = 0; n < alphabet.seq_len; ++n) {
      for (Eigen::Index c = 0; c < c_len; ++c) tables(n, c) = rows[n % rank][c];
    }
    const LabelPrior prior = LabelPrior::position_unigram(tables, true);
    const LmMatrix lm = build_lm_matrix(prior);
    if (lm.full_rank || lm.null_space.cols() == 0) continue;

    std::normal_distribution<double> normal;
    Eigen::VectorXd weights(lm.null_space.cols());
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = normal(rng);
    Eigen::VectorXd v = lm.null_space * weights;
    v /= v.cwiseAbs().maxCoeff();

    const ConditionalTable pr_cond = sample_conditional(alphabet, rng, 1.0);
    const JointDist truth = JointDist::structured(prior, pr_cond);

    for (std::size_t a = 0; a < alphabet.x_size; ++a) {
      for (std::size_t b = 0; b < alphabet.x_size; ++b) {
        if (a == b) continue;
        // +v on row a, -v on row b keeps column sums and P_C (pr_x - q_x) = 0.
        Eigen::MatrixXd direction = Eigen::MatrixXd::Zero(alphabet.x_size, c_len);
        direction.row(a) = v.transpose();
        direction.row(b) = -v.transpose();
        const double limit = detail::max_valid_step(pr_cond.matrix(), direction);
        for (double eps : detail::epsilon_grid(limit)) {
          const auto q_cond = ConditionalTable::make(
              detail::clamp_nonnegative(pr_cond.matrix() + eps * direction), true);
          const JointDist model = JointDist::structured(prior, q_cond);
          const double delta = mismatch(truth, model, alphabet.enumeration_cap).averaged;
          if (delta > best.delta_bar) {
            best.true_dist = truth;
            best.model_dist = model;
            best.delta_bar = delta;
            best.epsilon = eps;
            best.tries = attempt + 1;
            found = true;
          }
        }
      }
    }
    if (found && best.delta_bar > options.min_delta_bar) break;
  }
  SEQBOUND_CHECK(found && best.delta_bar > options.min_delta_bar, ErrorKind::kNotFound,
                 "no rank counterexample with delta_bar > " + std::to_string(options.min_delta_bar) +
                     " in " + std::to_string(options.max_tries) + " tries");

  const LmMatrix lm = build_lm_matrix(best.true_dist.prior());
  best.l1_marginal = l1_marginal_distance(marginal_x(best.true_dist), marginal_x(best.model_dist));
  best.violated_condition = ViolatedCondition::kRankDeficient;
  best.sigma_min = lm.sigma_min;
  best.rank = lm.rank;
  best.full_rank = lm.full_rank;
  best.true_structured = best.true_dist.is_structured();
  return best;
}

/// Exhibits Delta-bar > 0 under an exact marginal match when the true
/// conditional depends on the position. P_C stays full rank; each position's
/// true table is the model table plus a perturbation that is invisible in
/// pr_n(x) and preserves column sums.
inline Counterexample find_structure_counterexample(const Alphabet& alphabet, std::uint64_t seed,
                                                    const CounterexampleOptions& options = {}) {
  SEQBOUND_CHECK(alphabet.c_size >= 2 && alphabet.x_size > alphabet.c_size && alphabet.seq_len >= 2,
                 ErrorKind::kInvalidArgument, "structure counterexample needs |X| > |C| >= 2 and N >= 2");
  SEQBOUND_CHECK(alphabet.seq_len >= alphabet.c_size, ErrorKind::kInvalidArgument,
                 "P_C cannot have full column rank when N < |C|");
  const auto c_len = static_cast<Eigen::Index>(alphabet.c_size);
  const auto x_len = static_cast<Eigen::Index>(alphabet.x_size);

  Counterexample best;
  bool found = false;
  for (std::size_t attempt = 0; attempt < options.max_tries; ++attempt) {
    Rng rng(derive_seed(seed, attempt));
    const LabelPrior prior = sample_prior(alphabet, PriorSpec{PriorKind::kPositionUnigram, 0.5}, rng);
    const LmMatrix lm = build_lm_matrix(prior);
    if (!lm.full_rank || lm.sigma_min < 1e-3) continue;
    const ConditionalTable q_hat = sample_conditional(alphabet, rng, 1.0);
    const Eigen::MatrixXd unigrams = prior.position_marginals();

    std::normal_distribution<double> normal;
    std::uniform_int_distribution<Eigen::Index> pick(0, x_len - 1);
    std::vector<Eigen::MatrixXd> directions;
    for (std::size_t n = 0; n < alphabet.seq_len; ++n) {
      // w orthogonal to pr_n(.) so that sum_c pr_n(c) w_c = 0.
      const Eigen::VectorXd p = unigrams.row(n).transpose();
      Eigen::VectorXd w(c_len);
      for (Eigen::Index c = 0; c < c_len; ++c) w(c) = normal(rng);
      w -= (w.dot(p) / p.squaredNorm()) * p;
      w /= w.cwiseAbs().maxCoeff();
      const Eigen::Index a = pick(rng);
      Eigen::Index b = pick(rng);
      while (b == a) b = pick(rng);
      Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(x_len, c_len);
      eta.row(a) = w.transpose();
      eta.row(b) = -w.transpose();
      directions.push_back(std::move(eta));
    }
    double limit = std::numeric_limits<double>::infinity();
    for (const auto& eta : directions) limit = std::min(limit, detail::max_valid_step(q_hat.matrix(), eta));

    const JointDist model = JointDist::structured(prior, q_hat);
    for (double eps : detail::epsilon_grid(limit)) {
      std::vector<ConditionalTable> conds;
      for (const auto& eta : directions) {
        conds.push_back(ConditionalTable::make(detail::clamp_nonnegative(q_hat.matrix() + eps * eta), true));
      }
      const JointDist truth = JointDist::position_dependent(prior, std::move(conds));
      if (truth.is_structured()) continue;
      const double delta = mismatch(truth, model, alphabet.enumeration_cap).averaged;
      if (delta > best.delta_bar) {
        best.true_dist = truth;
        best.model_dist = model;
        best.delta_bar = delta;
        best.epsilon = eps;
        best.tries = attempt + 1;
        found = true;
      }
    }
    if (found && best.delta_bar > options.min_delta_bar) break;
  }
  SEQBOUND_CHECK(found && best.delta_bar > options.min_delta_bar, ErrorKind::kNotFound,
                 "no structure counterexample with delta_bar > " + std::to_string(options.min_delta_bar) +
                     " in " + std::to_string(options.max_tries) + " tries");

  const LmMatrix lm = build_lm_matrix(best.true_dist.prior());
  best.l1_marginal = l1_marginal_distance(marginal_x(best.true_dist), marginal_x(best.model_dist));
  best.violated_condition = ViolatedCondition::kStructureBroken;
  best.sigma_min = lm.sigma_min;
  best.rank = lm.rank;
  best.full_rank = lm.full_rank;
  best.true_structured = best.true_dist.is_structured();
  return best;
}

}  // namespace seqbound
