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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "seqbound/bounds.hpp"
#include "seqbound/decision.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/marginals.hpp"
#include "seqbound/random.hpp"

namespace seqbound {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// Column-softmax parametrization q(x|c) = exp(theta[x,c]) / sum_x' exp(theta[x',c]).
struct ModelParams {
  Eigen::MatrixXd logits;  // |X| x |C|

  std::size_t x_size() const { return static_cast<std::size_t>(logits.rows()); }
  std::size_t c_size() const { return static_cast<std::size_t>(logits.cols()); }

  /// log q(x|c), computed stably per column.
  Eigen::MatrixXd log_conditional() const {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double hi = logits.col(c).maxCoeff();
      const double lse = hi + std::log((logits.col(c).array() - hi).exp().sum());
      out.col(c) = logits.col(c).array() - lse;
    }
    return out;
  }

  ConditionalTable conditional() const {
    return ConditionalTable::make(log_conditional().array().exp().matrix(), true);
  }

  bool finite() const { return logits.allFinite(); }

  /// Logits reproducing a given table. Zero entries map to a large negative
  /// logit so the softmax stays finite.
  static ModelParams from_conditional(const ConditionalTable& cond) {
    ModelParams params;
    params.logits = cond.matrix().unaryExpr([](double p) { return p > 0.0 ? std::log(p) : -700.0; });
    return params;
  }

  static ModelParams random(std::size_t x_size, std::size_t c_size, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    ModelParams params;
    params.logits.resize(static_cast<Eigen::Index>(x_size), static_cast<Eigen::Index>(c_size));
    for (Eigen::Index c = 0; c < params.logits.cols(); ++c) {
      for (Eigen::Index x = 0; x < params.logits.rows(); ++x) params.logits(x, c) = normal(rng);
    }
    return params;
  }
};

/// log p(x_1^N) and the label posteriors gamma_n(c) = p(c_n = c | x_1^N).
struct SequencePosterior {
  double log_prob = kNegInf;
  Eigen::MatrixXd gamma;  // N x C
};

/// Log-space posterior machinery for one (lm, log q) pair. Factorized priors
/// run the forward-backward recursion in O(N |C|^2); Dense priors enumerate
/// C^N under the cap.
class SequenceScorer {
 public:
  SequenceScorer(const LabelPrior& lm, Eigen::MatrixXd log_cond, std::size_t cap = kDefaultEnumerationCap)
      : lm_(&lm), log_cond_(std::move(log_cond)) {
    SEQBOUND_CHECK(static_cast<std::size_t>(log_cond_.cols()) == lm.c_size(), ErrorKind::kShapeMismatch,
                   "model and LM disagree on |C|");
    if (auto chain = lm.chain()) {
      log_initial_ = chain->initial.unaryExpr(&safe_log);
      for (const auto& t : chain->transitions) log_transitions_.push_back(t.unaryExpr(&safe_log));
      factorized_ = true;
    } else {
      log_dense_ = lm.to_dense(cap);
      for (double& p : log_dense_) p = safe_log(p);
    }
  }

  double log_prob(std::span<const int> x_seq) const { return run(x_seq, false).log_prob; }
  SequencePosterior posterior(std::span<const int> x_seq) const { return run(x_seq, true); }

 private:
  SequencePosterior run(std::span<const int> x_seq, bool want_gamma) const {
    const std::size_t n_len = lm_->seq_len();
    SEQBOUND_CHECK(x_seq.size() == n_len, ErrorKind::kLengthMismatch, "observation length differs from LM");
    for (int x : x_seq) {
      SEQBOUND_CHECK(x >= 0 && x < log_cond_.rows(), ErrorKind::kIndexOutOfRange, "observation id out of range");
    }
    return factorized_ ? forward_backward(x_seq, want_gamma) : enumerate(x_seq, want_gamma);
  }

  SequencePosterior forward_backward(std::span<const int> x_seq, bool want_gamma) const {
    const std::size_t n_len = x_seq.size();
    const Eigen::Index c_len = log_cond_.cols();
    Eigen::MatrixXd alpha(n_len, c_len);
    for (Eigen::Index c = 0; c < c_len; ++c) alpha(0, c) = log_initial_(c) + log_cond_(x_seq[0], c);
    for (std::size_t n = 1; n < n_len; ++n) {
      const Eigen::MatrixXd& t = log_transitions_[n - 1];
      for (Eigen::Index c = 0; c < c_len; ++c) {
        double acc = kNegInf;
        for (Eigen::Index prev = 0; prev < c_len; ++prev) acc = log_add(acc, alpha(n - 1, prev) + t(prev, c));
        alpha(n, c) = acc + log_cond_(x_seq[n], c);
      }
    }
    SequencePosterior out;
    for (Eigen::Index c = 0; c < c_len; ++c) out.log_prob = log_add(out.log_prob, alpha(n_len - 1, c));
    if (!want_gamma) return out;

    Eigen::MatrixXd beta(n_len, c_len);
    beta.row(n_len - 1).setZero();
    for (std::size_t n = n_len - 1; n-- > 0;) {
      const Eigen::MatrixXd& t = log_transitions_[n];
      for (Eigen::Index c = 0; c < c_len; ++c) {
        double acc = kNegInf;
        for (Eigen::Index next = 0; next < c_len; ++next) {
          acc = log_add(acc, t(c, next) + log_cond_(x_seq[n + 1], next) + beta(n + 1, next));
        }
        beta(n, c) = acc;
      }
    }
    out.gamma = Eigen::MatrixXd::Zero(n_len, c_len);
    if (out.log_prob == kNegInf) return out;
    for (std::size_t n = 0; n < n_len; ++n) {
      for (Eigen::Index c = 0; c < c_len; ++c) {
        const double s = alpha(n, c) + beta(n, c);
        out.gamma(n, c) = s == kNegInf ? 0.0 : std::exp(s - out.log_prob);
      }
    }
    return out;
  }

  SequencePosterior enumerate(std::span<const int> x_seq, bool want_gamma) const {
    const std::size_t n_len = x_seq.size();
    const std::size_t c_size = lm_->c_size();
    std::vector<double> scores(log_dense_.size(), kNegInf);
    SequencePosterior out;
    Sequence c_seq(n_len);
    for (std::size_t ci = 0; ci < log_dense_.size(); ++ci) {
      if (log_dense_[ci] == kNegInf) continue;
      decode_sequence(ci, c_size, c_seq);
      double s = log_dense_[ci];
      for (std::size_t n = 0; n < n_len; ++n) s += log_cond_(x_seq[n], c_seq[n]);
      scores[ci] = s;
      out.log_prob = log_add(out.log_prob, s);
    }
    if (!want_gamma) return out;
    out.gamma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_len), static_cast<Eigen::Index>(c_size));
    if (out.log_prob == kNegInf) return out;
    for (std::size_t ci = 0; ci < scores.size(); ++ci) {
      if (scores[ci] == kNegInf) continue;
      decode_sequence(ci, c_size, c_seq);
      const double w = std::exp(scores[ci] - out.log_prob);
      for (std::size_t n = 0; n < n_len; ++n) out.gamma(n, c_seq[n]) += w;
    }
    return out;
  }

  const LabelPrior* lm_;
  Eigen::MatrixXd log_cond_;
  bool factorized_ = false;
  Eigen::VectorXd log_initial_;
  std::vector<Eigen::MatrixXd> log_transitions_;
  std::vector<double> log_dense_;
};

/// log sum_c p_LM(c_1^N) prod_n q_theta(x_n | c_n).
inline double forward_logprob(const ModelParams& params, const LabelPrior& lm, std::span<const int> x_seq) {
  return SequenceScorer(lm, params.log_conditional()).log_prob(x_seq);
}

struct TrainConfig {
  LabelPrior lm;
  std::size_t x_size = 0;
  std::vector<Sequence> dataset;
  // Optional nonnegative per-sequence weights; empty means each sequence
  // counts 1/S. Weights let a dataset carry an exact population marginal.
  std::vector<double> weights;
  double step_size = 1.0;
  std::size_t max_iters = 5000;
  double smoothing_epsilon = 1e-12;
  double grad_tolerance = 1e-7;
  std::uint64_t seed = 0;
  std::optional<JointDist> eval_reference;

  void validate() const {
    SEQBOUND_CHECK(!dataset.empty(), ErrorKind::kInvalidArgument, "training dataset is empty");
    SEQBOUND_CHECK(x_size > 0, ErrorKind::kInvalidArgument, "x_size must be positive");
    SEQBOUND_CHECK(step_size > 0.0, ErrorKind::kInvalidArgument, "step_size must be positive");
    SEQBOUND_CHECK(smoothing_epsilon >= 0.0, ErrorKind::kInvalidArgument, "smoothing_epsilon must be >= 0");
    if (!weights.empty()) {
      SEQBOUND_CHECK(weights.size() == dataset.size(), ErrorKind::kShapeMismatch,
                     "need one weight per training sequence");
      double total = 0.0;
      for (double w : weights) {
        SEQBOUND_CHECK(std::isfinite(w) && w >= 0.0, ErrorKind::kNegativeEntry, "training weights must be >= 0");
        total += w;
      }
      SEQBOUND_CHECK(total > 0.0, ErrorKind::kInvalidArgument, "training weights sum to zero");
    }
    for (const auto& seq : dataset) {
      SEQBOUND_CHECK(seq.size() == lm.seq_len(), ErrorKind::kLengthMismatch,
                     "training sequence length differs from LM length");
      for (int x : seq) {
        SEQBOUND_CHECK(x >= 0 && static_cast<std::size_t>(x) < x_size, ErrorKind::kIndexOutOfRange,
                       "training observation id out of range");
      }
    }
    if (eval_reference) {
      SEQBOUND_CHECK(eval_reference->x_size() == x_size && eval_reference->c_size() == lm.c_size() &&
                         eval_reference->seq_len() == lm.seq_len(),
                     ErrorKind::kAlphabetMismatch, "evaluation reference does not match the model");
    }
  }
};

/// The empirical distribution of the training data: distinct sequences with
/// their probability, in lexicographic order.
inline std::vector<std::pair<Sequence, double>> empirical_distribution(const std::vector<Sequence>& dataset,
                                                                      const std::vector<double>& weights = {}) {
  std::map<Sequence, double> mass;
  double total = 0.0;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const double w = weights.empty() ? 1.0 : weights[s];
    mass[dataset[s]] += w;
    total += w;
  }
  std::vector<std::pair<Sequence, double>> out;
  out.reserve(mass.size());
  for (auto& [seq, w] : mass) {
    if (w > 0.0) out.emplace_back(seq, w / total);
  }
  return out;
}

/// Entropy of the empirical distribution, the floor of the cross-entropy.
inline double empirical_entropy(const std::vector<std::pair<Sequence, double>>& empirical) {
  double h = 0.0;
  for (const auto& [seq, p] : empirical) h -= p * std::log(p);
  return h;
}

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;
};

namespace detail {

// Smoothed loss -(1/S) sum_s log(p_s + eps); the gradient is exact for it.
inline LossAndGradient ce_evaluate(const ModelParams& params, const TrainConfig& config,
                                   const std::vector<std::pair<Sequence, double>>& empirical,
                                   bool want_gradient) {
  const Eigen::MatrixXd log_q = params.log_conditional();
  const SequenceScorer scorer(config.lm, log_q);
  const double log_eps = safe_log(config.smoothing_epsilon);

  LossAndGradient out;
  Eigen::MatrixXd q;
  if (want_gradient) {
    out.gradient = Eigen::MatrixXd::Zero(log_q.rows(), log_q.cols());
    q = log_q.array().exp().matrix();
  }
  for (const auto& [seq, weight] : empirical) {
    if (!want_gradient) {
      out.loss -= weight * log_add(scorer.log_prob(seq), log_eps);
      continue;
    }
    const SequencePosterior post = scorer.posterior(seq);
    const double smoothed = log_add(post.log_prob, log_eps);
    out.loss -= weight * smoothed;
    // d/dtheta log(p + eps) = p / (p + eps) * d/dtheta log p
    const double scale = weight * std::exp(post.log_prob - smoothed);
    for (std::size_t n = 0; n < seq.size(); ++n) {
      for (Eigen::Index c = 0; c < log_q.cols(); ++c) {
        const double g = post.gamma(static_cast<Eigen::Index>(n), c);
        if (g == 0.0) continue;
        out.gradient.col(c) += scale * g * q.col(c);
        out.gradient(seq[n], c) -= scale * g;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Sequence-level cross-entropy -(1/S) sum_s log q_theta(x_s), smoothed;
/// with weights, -sum_s w_s log q_theta(x_s) / sum_s w_s.
inline double ce_loss(const ModelParams& params, const TrainConfig& config) {
  config.validate();
  return detail::ce_evaluate(params, config, empirical_distribution(config.dataset, config.weights), false).loss;
}

/// Exact gradient of ce_loss via posterior expected label counts.
inline Eigen::MatrixXd ce_gradient(const ModelParams& params, const TrainConfig& config) {
  config.validate();
  return detail::ce_evaluate(params, config, empirical_distribution(config.dataset, config.weights), true).gradient;
}

struct TrainRecord {
  std::size_t iter = 0;
  double loss = 0.0;
  double grad_inf_norm = 0.0;
  std::optional<double> kl;
  std::optional<double> delta_bar;
  double step = 0.0;  // step size accepted to reach this iterate (0 for iter 0)
};

struct TrainTrajectory {
  std::vector<TrainRecord> records;
  bool converged = false;
};

struct TrainResult {
  ModelParams params;
  TrainTrajectory trajectory;
};

using TrainInit = std::variant<ModelParams, std::uint64_t>;

/// Gradient descent with backtracking: a step that raises the loss is halved
/// and retried; after an accepted step the step size resets to step_size.
/// Stops at max_iters, at gradient l_inf < grad_tolerance, or when no step
/// down to 2^-60 * step_size decreases the loss.
inline TrainResult train(const TrainConfig& config, const TrainInit& init) {
  config.validate();
  ModelParams params = std::holds_alternative<ModelParams>(init)
                           ? std::get<ModelParams>(init)
                           : ModelParams::random(config.x_size, config.lm.c_size(), std::get<std::uint64_t>(init));
  SEQBOUND_CHECK(params.x_size() == config.x_size && params.c_size() == config.lm.c_size(),
                 ErrorKind::kShapeMismatch, "initial parameters have the wrong shape");
  SEQBOUND_CHECK(params.finite(), ErrorKind::kDivergenceDetected, "initial parameters are not finite");

  const auto empirical = empirical_distribution(config.dataset, config.weights);
  std::optional<SequenceDist> reference_marginal;
  if (config.eval_reference) reference_marginal = marginal_x(*config.eval_reference);

  auto record_for = [&](std::size_t iter, const LossAndGradient& lg, double step) {
    TrainRecord rec;
    rec.iter = iter;
    rec.loss = lg.loss;
    rec.grad_inf_norm = lg.gradient.cwiseAbs().maxCoeff();
    rec.step = step;
    if (config.eval_reference) {
      const JointDist model = JointDist::structured(config.lm, params.conditional());
      rec.kl = kl_marginal(*reference_marginal, marginal_x(model));
      rec.delta_bar = mismatch(*config.eval_reference, model).averaged;
    }
    return rec;
  };

  TrainResult result;
  LossAndGradient current = detail::ce_evaluate(params, config, empirical, true);
  SEQBOUND_CHECK(std::isfinite(current.loss) && current.gradient.allFinite(), ErrorKind::kDivergenceDetected,
                 "initial loss is not finite");
  result.trajectory.records.push_back(record_for(0, current, 0.0));

  for (std::size_t iter = 1; iter <= config.max_iters; ++iter) {
    if (current.gradient.cwiseAbs().maxCoeff() < config.grad_tolerance) {
      result.trajectory.converged = true;
      break;
    }
    double step = config.step_size;
    bool accepted = false;
    ModelParams candidate;
    double candidate_loss = 0.0;
    for (int halvings = 0; halvings <= 60; ++halvings, step *= 0.5) {
      candidate.logits = params.logits - step * current.gradient;
      if (!candidate.finite()) continue;
      candidate_loss = detail::ce_evaluate(candidate, config, empirical, false).loss;
      if (std::isfinite(candidate_loss) && candidate_loss <= current.loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.trajectory.converged = true;
      break;
    }
    params = std::move(candidate);
    current = detail::ce_evaluate(params, config, empirical, true);
    SEQBOUND_CHECK(std::isfinite(current.loss) && current.gradient.allFinite(), ErrorKind::kDivergenceDetected,
                   "loss became non-finite at iteration " + std::to_string(iter));
    result.trajectory.records.push_back(record_for(iter, current, step));
  }
  result.params = std::move(params);
  return result;
}

/// S i.i.d. sequences: labels by ancestral sampling from the prior, then
/// x_n ~ cond_n(. | c_n).
inline std::vector<Sequence> generate_dataset(const JointDist& true_dist, std::size_t s_count, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_len = true_dist.seq_len();
  const std::size_t c_size = true_dist.c_size();
  const std::size_t x_size = true_dist.x_size();
  const auto chain = true_dist.prior().chain();
  std::vector<double> dense;
  if (!chain) dense = true_dist.prior().to_dense();

  std::vector<Eigen::MatrixXd> conds_t;  // column-major access to cond(.|c)
  for (std::size_t n = 0; n < n_len; ++n) conds_t.push_back(true_dist.cond(n).matrix());

  std::vector<Sequence> out;
  out.reserve(s_count);
  Sequence c_seq(n_len);
  for (std::size_t s = 0; s < s_count; ++s) {
    if (chain) {
      c_seq[0] = sample_categorical(rng, chain->initial.data(), c_size);
      for (std::size_t n = 1; n < n_len; ++n) {
        const Eigen::VectorXd row = chain->transitions[n - 1].row(c_seq[n - 1]).transpose();
        c_seq[n] = sample_categorical(rng, row.data(), c_size);
      }
    } else {
      decode_sequence(static_cast<std::size_t>(sample_categorical(rng, dense.data(), dense.size())), c_size, c_seq);
    }
    Sequence x_seq(n_len);
    for (std::size_t n = 0; n < n_len; ++n) {
      x_seq[n] = sample_categorical(rng, conds_t[n].col(c_seq[n]).data(), x_size);
    }
    out.push_back(std::move(x_seq));
  }
  return out;
}

enum class DataMode { kSampled, kExact };

inline std::string to_string(DataMode mode) { return mode == DataMode::kSampled ? "sampled" : "exact"; }

/// A realizable training problem: a structured ground truth and unlabeled
/// data drawn from (or, in exact mode, weighted by) its observation marginal.
struct SyntheticTask {
  JointDist truth;
  std::vector<Sequence> dataset;
  std::vector<double> weights;  // empty for sampled data
};

inline SyntheticTask make_synthetic_task(JointDist truth, std::size_t samples, std::uint64_t seed, DataMode mode) {
  SyntheticTask task{std::move(truth), {}, {}};
  if (mode == DataMode::kSampled) {
    SEQBOUND_CHECK(samples > 0, ErrorKind::kInvalidArgument, "need at least one training sample");
    task.dataset = generate_dataset(task.truth, samples, seed);
    return task;
  }
  const SequenceDist marginal = marginal_x(task.truth);
  for (std::size_t xi = 0; xi < marginal.size(); ++xi) {
    if (marginal[xi] <= 0.0) continue;
    task.dataset.push_back(decode_sequence(xi, marginal.base(), marginal.seq_len()));
    task.weights.push_back(marginal[xi]);
  }
  return task;
}

}  // namespace seqbound
