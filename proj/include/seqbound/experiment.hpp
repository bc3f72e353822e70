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

#include <cstdint>
#include <fstream>
#include <string>

#include "seqbound/serialize.hpp"
#include "seqbound/train.hpp"

namespace seqbound {

enum class InitMode { kRandom, kGroundTruth };

inline std::string to_string(InitMode mode) { return mode == InitMode::kRandom ? "random" : "ground_truth"; }

/// A fully resolved synthetic training run: ground truth, data and optimizer
/// settings. `resolved` echoes every setting, defaults included.
struct TrainExperiment {
  JointDist truth;
  DataMode data_mode = DataMode::kSampled;
  std::size_t samples = 0;
  std::uint64_t data_seed = 0;
  TrainConfig config;
  InitMode init = InitMode::kRandom;
  std::uint64_t init_seed = 0;
  double init_scale = 1.0;
  Json resolved;
};

namespace detail {

inline PriorKind parse_prior_kind(const std::string& name) {
  for (auto kind : {PriorKind::kDense, PriorKind::kPositionUnigram, PriorKind::kBigram}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown prior type '" + name + "'");
}

inline DataMode parse_data_mode(const std::string& name) {
  if (name == "sampled") return DataMode::kSampled;
  if (name == "exact") return DataMode::kExact;
  throw Error(ErrorKind::kInvalidArgument, "unknown data mode '" + name + "'");
}

inline InitMode parse_init_mode(const std::string& name) {
  if (name == "random") return InitMode::kRandom;
  if (name == "ground_truth") return InitMode::kGroundTruth;
  throw Error(ErrorKind::kInvalidArgument, "unknown init mode '" + name + "'");
}

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace detail

/// Builds a run from its JSON description. See docs/formats.md for the schema.
inline TrainExperiment load_train_experiment(const Json& j) {
  try {
    TrainExperiment e;
    const Json& gt = j.at("ground_truth");
    const Alphabet alphabet = Alphabet::make(gt.at("x_size").get<std::size_t>(), gt.at("c_size").get<std::size_t>(),
                                             gt.at("seq_len").get<std::size_t>());
    const Json& lm = gt.at("lm");
    LabelPrior prior;
    if (lm.contains("sample")) {
      const Json& s = lm.at("sample");
      const PriorSpec spec{detail::parse_prior_kind(s.at("type").get<std::string>()),
                           detail::field(s, "concentration", 1.0)};
      prior = sample_prior(alphabet, spec, detail::field<std::uint64_t>(s, "seed", 0));
    } else {
      prior = prior_from_json(lm);
    }
    SEQBOUND_CHECK(prior.c_size() == alphabet.c_size && prior.seq_len() == alphabet.seq_len,
                   ErrorKind::kAlphabetMismatch, "lm does not match the alphabet");
    ConditionalTable cond = gt.contains("cond")
                                ? make_conditional(alphabet, matrix_from_json(gt.at("cond")))
                                : sample_conditional(alphabet, detail::field<std::uint64_t>(gt, "cond_seed", 0),
                                                     detail::field(gt, "cond_concentration", 1.0));
    e.truth = JointDist::structured(prior, cond);

    const Json data = j.value("data", Json::object());
    e.data_mode = detail::parse_data_mode(detail::field<std::string>(data, "mode", "sampled"));
    e.samples = detail::field<std::size_t>(data, "samples", 5000);
    e.data_seed = detail::field<std::uint64_t>(data, "seed", 0);

    const Json opt = j.value("train", Json::object());
    TrainConfig& c = e.config;
    c.lm = prior;
    c.x_size = alphabet.x_size;
    c.step_size = detail::field(opt, "step_size", c.step_size);
    c.max_iters = detail::field(opt, "max_iters", c.max_iters);
    c.smoothing_epsilon = detail::field(opt, "smoothing_epsilon", c.smoothing_epsilon);
    c.grad_tolerance = detail::field(opt, "grad_tolerance", c.grad_tolerance);
    e.init = detail::parse_init_mode(detail::field<std::string>(opt, "init", "random"));
    e.init_seed = detail::field<std::uint64_t>(opt, "init_seed", 0);
    e.init_scale = detail::field(opt, "init_scale", 1.0);
    c.seed = e.init_seed;
    SEQBOUND_CHECK(e.init_scale >= 0.0, ErrorKind::kInvalidArgument, "init_scale must be >= 0");

    e.resolved = Json{
        {"ground_truth", Json{{"x_size", alphabet.x_size},
                              {"c_size", alphabet.c_size},
                              {"seq_len", alphabet.seq_len},
                              {"lm", to_json(prior)},
                              {"cond", matrix_to_json(cond.matrix())}}},
        {"data", Json{{"mode", to_string(e.data_mode)}, {"samples", e.samples}, {"seed", e.data_seed}}},
        {"train", Json{{"step_size", c.step_size},
                       {"max_iters", c.max_iters},
                       {"smoothing_epsilon", c.smoothing_epsilon},
                       {"grad_tolerance", c.grad_tolerance},
                       {"init", to_string(e.init)},
                       {"init_seed", e.init_seed},
                       {"init_scale", e.init_scale}}}};
    return e;
  } catch (const Json::exception& ex) {
    throw Error(ErrorKind::kInvalidArgument, std::string("bad train config: ") + ex.what());
  }
}

inline TrainExperiment load_train_experiment(const std::string& path) {
  std::ifstream in(path);
  SEQBOUND_CHECK(in.good(), ErrorKind::kIo, "cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& ex) {
    throw Error(ErrorKind::kInvalidArgument, "config '" + path + "' is not valid JSON: " + ex.what());
  }
  return load_train_experiment(j);
}

struct ExperimentResult {
  SyntheticTask task;
  TrainResult train;
  BoundReport final_report;
};

/// Generates the data, trains, and evaluates the final model against the
/// ground truth.
inline ExperimentResult run_train_experiment(const TrainExperiment& e) {
  ExperimentResult out{make_synthetic_task(e.truth, e.samples, e.data_seed, e.data_mode), {}, {}};
  TrainConfig config = e.config;
  config.dataset = out.task.dataset;
  config.weights = out.task.weights;
  config.eval_reference = e.truth;
  const TrainInit init = e.init == InitMode::kGroundTruth
                             ? TrainInit{ModelParams::from_conditional(e.truth.cond())}
                             : TrainInit{ModelParams::random(config.x_size, config.lm.c_size(), e.init_seed, e.init_scale)};
  out.train = train(config, init);
  out.final_report = evaluate_bounds(e.truth, JointDist::structured(e.truth.prior(), out.train.params.conditional()));
  out.final_report.seed = e.data_seed;
  return out;
}

}  // namespace seqbound
