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

// seqbound: command-line front end.
//
//   seqbound simulate        bound checks on random instances -> bounds.csv
//   seqbound counterexample  witness that a condition is necessary
//   seqbound check-rank      P_C conditioning of a label corpus
//   seqbound train           synthetic unsupervised training run
//   seqbound report          bounds for a given (true, model) pair
//
// Exit codes: 0 success, 1 domain failure, 2 usage error (including invalid
// argument combinations detected after parsing).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "seqbound/seqbound.hpp"

namespace fs = std::filesystem;
using seqbound::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr const char* kVersion = "0.1.0";

// Errors raised while turning flags into a configuration are usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto as_usage(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const seqbound::Error& e) {
    throw UsageError(e.what());
  }
}

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    SEQBOUND_CHECK(!ec, seqbound::ErrorKind::kIo, "cannot create '" + dir_.string() + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    std::ofstream out(dir_ / name, std::ios::binary);
    SEQBOUND_CHECK(out.good(), seqbound::ErrorKind::kIo, "cannot write '" + (dir_ / name).string() + "'");
    files_.push_back(name);
    return out;
  }

  void write_json(const std::string& name, const Json& j) { open(name) << j.dump(2) << '\n'; }

  // Paths are relative to the output directory so that manifests from two
  // reruns compare byte for byte.
  void write_manifest(const std::string& subcommand, std::uint64_t seed, Json config) {
    Json m{{"subcommand", subcommand},
           {"version", kVersion},
           {"master_seed", seed},
           {"config", std::move(config)},
           {"outputs", files_}};
    std::ofstream(dir_ / "manifest.json", std::ios::binary) << m.dump(2) << '\n';
  }

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

struct SimulateArgs {
  std::size_t x_size = 4, c_size = 3, seq_len = 3, samples = 10'000;
  double sigma_min_floor = 0.01, pinv_l1_cap = 2.0, prior_concentration = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto config = as_usage([&] {
    seqbound::SimConfig c;
    c.alphabet = seqbound::Alphabet::make(a.x_size, a.c_size, a.seq_len);
    c.samples = a.samples;
    c.sigma_min_floor = a.sigma_min_floor;
    c.pinv_l1_cap = a.pinv_l1_cap;
    c.prior_concentration = a.prior_concentration;
    c.master_seed = a.seed;
    c.validate();
    return c;
  });

  OutputDir out(a.out);
  auto csv = out.open("bounds.csv");
  csv << seqbound::kBoundCsvHeader << '\n';
  std::vector<std::size_t> violations;
  double worst_ratio = 0.0;
  std::size_t index = 0;
  seqbound::run_bound_simulation(config, [&](const seqbound::SimRecord& r) {
    csv << seqbound::bound_csv_row(r.report) << '\n';
    if (!r.report.chain_ok()) violations.push_back(index);
    if (r.report.chain_bound > 0.0) worst_ratio = std::max(worst_ratio, r.report.d_bar / r.report.chain_bound);
    ++index;
  });
  csv.close();

  for (std::size_t v : violations) {
    const auto instance = seqbound::draw_sim_instance(config, v);
    Json dump{{"index", v},
              {"true", seqbound::to_json(instance.true_dist)},
              {"model", seqbound::to_json(instance.model_dist)},
              {"report", seqbound::to_json(instance.record.report)}};
    out.write_json("violation_" + std::to_string(v) + ".json", dump);
  }

  out.write_manifest("simulate", a.seed,
                     Json{{"x_size", a.x_size},
                          {"c_size", a.c_size},
                          {"seq_len", a.seq_len},
                          {"samples", a.samples},
                          {"sigma_min_floor", a.sigma_min_floor},
                          {"pinv_l1_cap", a.pinv_l1_cap},
                          {"prior_type", "dense"},
                          {"prior_concentration", config.prior_concentration},
                          {"cond_concentration", config.cond_concentration},
                          {"interpolation_fraction", config.interpolation_fraction},
                          {"starvation_window", config.starvation_window}});
  std::cout << "instances: " << config.samples << "\nviolations: " << violations.size()
            << "\nmax d_bar / chain bound: " << seqbound::format_double(worst_ratio) << '\n';
  return violations.empty() ? kExitOk : kExitDomain;
}

struct CounterexampleArgs {
  std::string condition;
  std::size_t x_size = 4, c_size = 3, seq_len = 3, max_tries = 200;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_counterexample(const CounterexampleArgs& a) {
  const auto alphabet = as_usage([&] { return seqbound::Alphabet::make(a.x_size, a.c_size, a.seq_len); });
  seqbound::CounterexampleOptions options;
  options.max_tries = a.max_tries;
  const auto cx = a.condition == "rank" ? seqbound::find_rank_counterexample(alphabet, a.seed, options)
                                        : seqbound::find_structure_counterexample(alphabet, a.seed, options);
  OutputDir out(a.out);
  out.write_json("counterexample.json", seqbound::to_json(cx));
  out.write_manifest("counterexample", a.seed,
                     Json{{"condition", a.condition},
                          {"x_size", a.x_size},
                          {"c_size", a.c_size},
                          {"seq_len", a.seq_len},
                          {"max_tries", a.max_tries},
                          {"min_delta_bar", options.min_delta_bar}});
  std::cout << "violated: " << seqbound::to_string(cx.violated_condition)
            << "\nl1_marginal: " << seqbound::format_double(cx.l1_marginal)
            << "\ndelta_bar: " << seqbound::format_double(cx.delta_bar) << '\n';
  return kExitOk;
}

struct CheckRankArgs {
  std::string corpus, policy = "truncate", out;
  std::size_t seq_len = 0, vocab_cap = 1000;
};

int cmd_check_rank(const CheckRankArgs& a) {
  const auto options = as_usage([&] {
    seqbound::CorpusOptions o;
    o.seq_len = a.seq_len;
    o.policy = seqbound::parse_length_policy(a.policy);
    o.vocab_cap = a.vocab_cap;
    return o;
  });
  const auto stats = seqbound::ingest(a.corpus, options);
  OutputDir out(a.out);
  out.write_json("report.json", seqbound::to_json(stats));
  out.write_manifest("check-rank", 0,
                     Json{{"corpus", a.corpus}, {"seq_len", a.seq_len}, {"policy", a.policy}, {"vocab_cap", a.vocab_cap}});
  std::cout << "sequences: " << stats.sequence_count << "\nvocab: " << stats.vocab.size()
            << "\nsigma_min: " << seqbound::format_double(stats.lm_matrix.sigma_min)
            << "\nfull_rank: " << (stats.lm_matrix.full_rank ? "yes" : "no") << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string config, out;
};

int cmd_train(const TrainArgs& a) {
  const auto experiment = as_usage([&] { return seqbound::load_train_experiment(a.config); });
  const auto result = seqbound::run_train_experiment(experiment);
  OutputDir out(a.out);
  {
    auto csv = out.open("trajectory.csv");
    seqbound::write_trajectory_csv(csv, result.train.trajectory);
  }
  {
    auto data = out.open("dataset.txt");
    for (std::size_t i = 0; i < result.task.dataset.size(); ++i) {
      const auto& x = result.task.dataset[i];
      for (std::size_t n = 0; n < x.size(); ++n) data << (n ? " " : "") << x[n];
      if (!result.task.weights.empty()) data << '\t' << seqbound::format_double(result.task.weights[i]);
      data << '\n';
    }
  }
  out.write_json("model.json", seqbound::to_json(result.train.params));
  out.write_json("truth.json", seqbound::to_json(experiment.truth));
  Json final_report = seqbound::to_json(result.final_report);
  final_report["converged"] = result.train.trajectory.converged;
  final_report["iterations"] = result.train.trajectory.records.back().iter;
  out.write_json("final_report.json", final_report);
  out.write_manifest("train", experiment.data_seed, experiment.resolved);
  const auto& last = result.train.trajectory.records.back();
  std::cout << "iterations: " << last.iter << "\nloss: " << seqbound::format_double(last.loss)
            << "\ndelta_bar: " << seqbound::format_double(result.final_report.delta_bar) << '\n';
  return kExitOk;
}

struct ReportArgs {
  std::string true_path, model_path, out;
};

seqbound::JointDist read_instance(const std::string& path) {
  std::ifstream in(path);
  SEQBOUND_CHECK(in.good(), seqbound::ErrorKind::kIo, "cannot open '" + path + "'");
  try {
    return seqbound::joint_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw seqbound::Error(seqbound::ErrorKind::kInvalidArgument, "'" + path + "': " + e.what());
  }
}

int cmd_report(const ReportArgs& a) {
  const auto [truth, model] = as_usage([&] { return std::pair{read_instance(a.true_path), read_instance(a.model_path)}; });
  const auto report = seqbound::evaluate_bounds(truth, model);
  Json j = seqbound::to_json(report);
  j["mismatch"] = seqbound::to_json(seqbound::mismatch(truth, model));
  OutputDir out(a.out);
  out.write_json("report.json", j);
  out.write_manifest("report", 0, Json{{"true", a.true_path}, {"model", a.model_path}});
  std::cout << "delta_bar: " << seqbound::format_double(report.delta_bar)
            << "\nchain_ok: " << (report.chain_ok() ? "yes" : "no") << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classification-error bounds for unsupervised sequence labeling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Check the bound chain on random instances");
  simulate->add_option("--x-size", sim.x_size, "Observation alphabet size")->capture_default_str();
  simulate->add_option("--c-size", sim.c_size, "Label alphabet size")->capture_default_str();
  simulate->add_option("--seq-len", sim.seq_len, "Sequence length N")->capture_default_str();
  simulate->add_option("--samples", sim.samples, "Accepted instances")->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--sigma-min-floor", sim.sigma_min_floor, "Keep priors with sigma_min above this")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  simulate->add_option("--pinv-l1-cap", sim.pinv_l1_cap, "Keep priors with |P+|_1 at most this")
      ->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--prior-concentration", sim.prior_concentration, "Dirichlet concentration of label priors")
      ->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();

  CounterexampleArgs cxa;
  auto* counterexample = app.add_subcommand("counterexample", "Build an instance violating one condition");
  counterexample->add_option("--condition", cxa.condition, "rank or structure")
      ->required()->check(CLI::IsMember({"rank", "structure"}));
  counterexample->add_option("--x-size", cxa.x_size)->capture_default_str();
  counterexample->add_option("--c-size", cxa.c_size)->capture_default_str();
  counterexample->add_option("--seq-len", cxa.seq_len)->capture_default_str();
  counterexample->add_option("--max-tries", cxa.max_tries)->capture_default_str()->check(CLI::PositiveNumber);
  counterexample->add_option("--seed", cxa.seed)->capture_default_str();
  counterexample->add_option("--out", cxa.out, "Output directory")->required();

  CheckRankArgs cra;
  auto* check_rank = app.add_subcommand("check-rank", "Report P_C conditioning of a label corpus");
  check_rank->add_option("--corpus", cra.corpus, "One whitespace-tokenized sequence per line")->required();
  check_rank->add_option("--seq-len", cra.seq_len, "Fixed length N")->required()->check(CLI::PositiveNumber);
  check_rank->add_option("--policy", cra.policy, "Longer lines: truncate or discard")
      ->capture_default_str()->check(CLI::IsMember({"truncate", "discard"}));
  check_rank->add_option("--vocab-cap", cra.vocab_cap)->capture_default_str()->check(CLI::PositiveNumber);
  check_rank->add_option("--out", cra.out, "Output directory")->required();

  TrainArgs tra;
  auto* train = app.add_subcommand("train", "Train on synthetic data from a JSON config");
  train->add_option("--config", tra.config, "Run description (see docs/formats.md)")->required();
  train->add_option("--out", tra.out, "Output directory")->required();

  ReportArgs rpa;
  auto* report = app.add_subcommand("report", "Evaluate bounds for a given true/model pair");
  report->add_option("--true", rpa.true_path, "True instance JSON")->required();
  report->add_option("--model", rpa.model_path, "Model instance JSON")->required();
  report->add_option("--out", rpa.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*counterexample) return cmd_counterexample(cxa);
    if (*check_rank) return cmd_check_rank(cra);
    if (*train) return cmd_train(tra);
    if (*report) return cmd_report(rpa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const seqbound::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == seqbound::ErrorKind::kInvalidArgument ? kExitUsage : kExitDomain;
  }
  return kExitUsage;
}
