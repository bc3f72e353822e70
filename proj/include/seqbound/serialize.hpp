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
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "seqbound/bounds.hpp"
#include "seqbound/corpus.hpp"
#include "seqbound/decision.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/simulate.hpp"
#include "seqbound/train.hpp"

namespace seqbound {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips; "inf"/"-inf"/"nan" for non-finite.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
  SEQBOUND_CHECK(j.is_array() && !j.empty() && j.front().is_array(), ErrorKind::kInvalidArgument,
                 "expected a non-empty array of arrays");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    SEQBOUND_CHECK(static_cast<Eigen::Index>(j[r].size()) == cols, ErrorKind::kShapeMismatch, "ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
  SEQBOUND_CHECK(j.is_array(), ErrorKind::kInvalidArgument, "expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Json to_json(const LabelPrior& prior) {
  Json j;
  j["type"] = to_string(prior.kind());
  j["c_size"] = prior.c_size();
  j["seq_len"] = prior.seq_len();
  if (const auto* d = prior.as_dense()) {
    j["probs"] = d->probs;
  } else if (const auto* u = prior.as_position_unigram()) {
    j["tables"] = matrix_to_json(u->tables);
  } else {
    const auto& b = *prior.as_bigram();
    j["initial"] = vector_to_json(b.initial);
    j["transition"] = matrix_to_json(b.transition);
  }
  return j;
}

/// Accepts {"type": "dense"|"position_unigram"|"bigram", ...}; "normalize"
/// (default false) allows unnormalized tables.
inline LabelPrior prior_from_json(const Json& j, std::size_t cap = kDefaultEnumerationCap) {
  const std::string type = j.at("type").get<std::string>();
  const bool normalize = j.value("normalize", false);
  if (type == "dense") {
    return LabelPrior::dense(j.at("c_size").get<std::size_t>(), j.at("seq_len").get<std::size_t>(),
                             j.at("probs").get<std::vector<double>>(), cap, normalize);
  }
  if (type == "position_unigram") return LabelPrior::position_unigram(matrix_from_json(j.at("tables")), normalize);
  if (type == "bigram") {
    return LabelPrior::bigram(vector_from_json(j.at("initial")), matrix_from_json(j.at("transition")),
                              j.at("seq_len").get<std::size_t>(), normalize);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown prior type '" + type + "'");
}

inline Json alphabet_to_json(std::size_t x_size, std::size_t c_size, std::size_t seq_len) {
  return Json{{"x_size", x_size}, {"c_size", c_size}, {"seq_len", seq_len}};
}

/// {"alphabet": {...}, "prior": {...}, "cond": [[...]]} plus
/// "position_conds" when the conditional depends on the position.
inline Json to_json(const JointDist& dist) {
  Json j;
  j["alphabet"] = alphabet_to_json(dist.x_size(), dist.c_size(), dist.seq_len());
  j["prior"] = to_json(dist.prior());
  j["cond"] = matrix_to_json(dist.cond(0).matrix());
  if (!dist.is_structured()) {
    Json conds = Json::array();
    for (const auto& cond : dist.conds()) conds.push_back(matrix_to_json(cond.matrix()));
    j["position_conds"] = std::move(conds);
  }
  return j;
}

inline JointDist joint_from_json(const Json& j, std::size_t cap = kDefaultEnumerationCap) {
  const auto& a = j.at("alphabet");
  const Alphabet alphabet = Alphabet::make(a.at("x_size").get<std::size_t>(), a.at("c_size").get<std::size_t>(),
                                           a.at("seq_len").get<std::size_t>(), cap);
  LabelPrior prior = prior_from_json(j.at("prior"), cap);
  SEQBOUND_CHECK(prior.c_size() == alphabet.c_size && prior.seq_len() == alphabet.seq_len,
                 ErrorKind::kAlphabetMismatch, "prior does not match the alphabet");
  if (j.contains("position_conds")) {
    std::vector<ConditionalTable> conds;
    for (const auto& c : j.at("position_conds")) conds.push_back(make_conditional(alphabet, matrix_from_json(c)));
    return JointDist::position_dependent(std::move(prior), std::move(conds));
  }
  return JointDist::structured(std::move(prior), make_conditional(alphabet, matrix_from_json(j.at("cond"))));
}

inline Json to_json(const MismatchReport& report) {
  return Json{{"local", report.local}, {"averaged", report.averaged}};
}

inline Json to_json(const Counterexample& cx) {
  Json j = to_json(cx.true_dist);
  j["model"] = Json{{"cond", matrix_to_json(cx.model_dist.cond().matrix())}};
  j["certificate"] = Json{{"l1_marginal", cx.l1_marginal},
                          {"delta_bar", cx.delta_bar},
                          {"violated_condition", to_string(cx.violated_condition)},
                          {"sigma_min", cx.sigma_min},
                          {"rank", cx.rank},
                          {"full_rank", cx.full_rank},
                          {"structure_constraint_holds", cx.true_structured},
                          {"epsilon", cx.epsilon},
                          {"tries", cx.tries}};
  return j;
}

inline constexpr const char* kBoundCsvHeader =
    "seed,x_size,c_size,seq_len,sigma_min,pinv_l1,l1_marginal,d_bar,delta_bar,theorem1_rhs,kl,beta,chain_ok";

inline std::string bound_csv_row(const BoundReport& r) {
  std::string row;
  row += std::to_string(r.seed) + ',' + std::to_string(r.x_size) + ',' + std::to_string(r.c_size) + ',' +
         std::to_string(r.seq_len);
  for (double v : {r.sigma_min, r.pinv_l1, r.l1_marginal, r.d_bar, r.delta_bar, r.chain_bound, r.kl_marginal,
                   r.pinsker_beta}) {
    row += ',' + format_double(v);
  }
  row += r.chain_ok() ? ",1" : ",0";
  return row;
}

inline Json to_json(const BoundReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); };
  return Json{{"x_size", r.x_size},       {"c_size", r.c_size},
              {"seq_len", r.seq_len},     {"sigma_min", num(r.sigma_min)},
              {"pinv_l1", num(r.pinv_l1)}, {"l1_marginal", num(r.l1_marginal)},
              {"d_bar", num(r.d_bar)},     {"delta_bar", num(r.delta_bar)},
              {"theorem1_rhs", num(r.chain_bound)}, {"kl", num(r.kl_marginal)},
              {"beta", num(r.pinsker_beta)},
              {"d_cond_1", num(r.d_cond[0])}, {"d_cond_2", num(r.d_cond[1])},
              {"d_pos_1", num(r.d_pos[0])},   {"d_pos_2", num(r.d_pos[1])},
              {"structured", r.structured},   {"full_rank", r.full_rank},
              {"chain_ok", r.chain_ok()}};
}

inline constexpr const char* kTrajectoryCsvHeader = "iter,loss,grad_inf_norm,kl,delta_bar";

inline std::string trajectory_csv_row(const TrainRecord& r) {
  return std::to_string(r.iter) + ',' + format_double(r.loss) + ',' + format_double(r.grad_inf_norm) + ',' +
         (r.kl ? format_double(*r.kl) : std::string()) + ',' +
         (r.delta_bar ? format_double(*r.delta_bar) : std::string());
}

inline void write_trajectory_csv(std::ostream& out, const TrainTrajectory& trajectory) {
  out << kTrajectoryCsvHeader << '\n';
  for (const auto& r : trajectory.records) out << trajectory_csv_row(r) << '\n';
}

inline Json to_json(const ModelParams& params) {
  return Json{{"logits", matrix_to_json(params.logits)}, {"cond", matrix_to_json(params.conditional().matrix())}};
}

inline Json to_json(const CorpusStats& stats) {
  Json growth = Json::array();
  for (const auto& g : stats.sigma_min_by_prefix) growth.push_back(Json::array({g.fraction, g.sigma_min}));
  Json growth_detail = Json::array();
  for (const auto& g : stats.sigma_min_by_prefix) {
    growth_detail.push_back(Json{{"fraction", g.fraction},
                                 {"sequence_count", g.sequence_count},
                                 {"vocab_size", g.vocab_size},
                                 {"sigma_min", g.sigma_min}});
  }
  return Json{{"vocab_size", stats.vocab.size()},
              {"seq_len", stats.seq_len},
              {"policy", to_string(stats.policy)},
              {"lines_read", stats.lines_read},
              {"sequence_count", stats.sequence_count},
              {"sigma_min", stats.lm_matrix.sigma_min},
              {"pinv_l1", stats.lm_matrix.induced_l1},
              {"rank", stats.lm_matrix.rank},
              {"full_rank", stats.lm_matrix.full_rank},
              {"growth_curve", std::move(growth)},
              {"growth_detail", std::move(growth_detail)},
              {"vocab", stats.vocab}};
}

}  // namespace seqbound
