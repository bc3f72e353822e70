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

#include <span>
#include <vector>

#include "seqbound/alphabet.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/marginals.hpp"

namespace seqbound {

/// argmax over one row of position joints; the lowest label id wins ties.
template <typename Row>
int argmax_label(const Row& row) {
  int best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row(c) > row(best)) best = static_cast<int>(c);
  }
  return best;
}

/// Per-position argmax rule over a source distribution's position joints.
/// With the true distribution this is the Bayes rule; with a model it is the
/// model-based rule.
class DecisionRule {
 public:
  explicit DecisionRule(const JointDist& source) : source_(&source), evaluator_(source) {}

  Sequence decide(std::span<const int> x_seq) const {
    require_x(source_->alphabet(), x_seq);
    return decide_from(evaluator_(x_seq));
  }

  static Sequence decide_from(const PositionJoints& joints) {
    Sequence out(static_cast<std::size_t>(joints.joint.rows()));
    for (Eigen::Index n = 0; n < joints.joint.rows(); ++n) out[n] = argmax_label(joints.joint.row(n));
    return out;
  }

  const JointDist& source() const { return *source_; }

 private:
  const JointDist* source_;
  PositionJointEvaluator evaluator_;
};

inline Sequence decide(const DecisionRule& rule, std::span<const int> x_seq) { return rule.decide(x_seq); }

/// Averaged Hamming distance (1/N) * #{n : a_n != b_n}.
inline double hamming_error(std::span<const int> c_seq, std::span<const int> c_ref) {
  SEQBOUND_CHECK(c_seq.size() == c_ref.size(), ErrorKind::kLengthMismatch,
                 "sequences of different length");
  SEQBOUND_CHECK(!c_seq.empty(), ErrorKind::kLengthMismatch, "empty sequences");
  std::size_t differ = 0;
  for (std::size_t n = 0; n < c_seq.size(); ++n) differ += c_seq[n] != c_ref[n] ? 1 : 0;
  return static_cast<double>(differ) / static_cast<double>(c_seq.size());
}

struct MismatchReport {
  std::vector<double> local;  // Delta_q^n, one per position
  double averaged = 0.0;      // mean of local
};

/// Exact classification-error mismatch between the Bayes rule of `true_dist`
/// and the model rule of `model_dist`, both scored under the true position
/// joints, by enumeration of X^N.
inline MismatchReport mismatch(const JointDist& true_dist, const JointDist& model_dist,
                               std::size_t cap = kDefaultEnumerationCap) {
  require_same_alphabet(true_dist, model_dist);
  const std::size_t x_count = capped_pow(true_dist.x_size(), true_dist.seq_len(), cap);
  const std::size_t n_len = true_dist.seq_len();
  const PositionJointEvaluator truth(true_dist);
  const PositionJointEvaluator model(model_dist);

  MismatchReport report;
  report.local.assign(n_len, 0.0);
  Sequence x_seq(n_len);
  for (std::size_t xi = 0; xi < x_count; ++xi) {
    decode_sequence(xi, true_dist.x_size(), x_seq);
    const PositionJoints pr = truth(x_seq);
    const PositionJoints q = model(x_seq);
    for (std::size_t n = 0; n < n_len; ++n) {
      const auto row = static_cast<Eigen::Index>(n);
      const int bayes = argmax_label(pr.joint.row(row));
      const int chosen = argmax_label(q.joint.row(row));
      report.local[n] += pr.joint(row, bayes) - pr.joint(row, chosen);
    }
  }
  double total = 0.0;
  for (double d : report.local) total += d;
  report.averaged = total / static_cast<double>(n_len);
  return report;
}

}  // namespace seqbound
