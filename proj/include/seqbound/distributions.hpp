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
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "seqbound/alphabet.hpp"
#include "seqbound/error.hpp"
#include "seqbound/random.hpp"

namespace seqbound {

inline constexpr double kConstructionTolerance = 1e-10;
inline constexpr double kDerivedTolerance = 1e-9;
// Sums within this of 1 are renormalized; anything further off is rejected.
inline constexpr double kRenormalizeSlack = 1e-6;

namespace detail {

inline void check_entries(const double* data, std::size_t n, const char* what) {
  for (std::size_t i = 0; i < n; ++i) {
    SEQBOUND_CHECK(std::isfinite(data[i]), ErrorKind::kInvalidArgument,
                   std::string(what) + " has a non-finite entry");
    SEQBOUND_CHECK(data[i] >= 0.0, ErrorKind::kNegativeEntry,
                   std::string(what) + " has a negative entry");
  }
}

// Scales v to unit sum. Sums off by more than the slack are an error unless
// `normalize` is set. Sums already at 1 up to rounding are left untouched so
// that tables read back from text are bit-identical.
inline void normalize_in_place(double* data, std::size_t n, bool normalize, const char* what) {
  check_entries(data, n, what);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += data[i];
  SEQBOUND_CHECK(total > 0.0, ErrorKind::kZeroColumn, std::string(what) + " sums to zero");
  SEQBOUND_CHECK(normalize || std::abs(total - 1.0) <= kRenormalizeSlack, ErrorKind::kNotNormalized,
                 std::string(what) + " sums to " + std::to_string(total));
  if (std::abs(total - 1.0) <= 1e-14) return;
  for (std::size_t i = 0; i < n; ++i) data[i] /= total;
}

}  // namespace detail

/// Column-stochastic |X| x |C| table holding pr(x|c) or q(x|c).
class ConditionalTable {
 public:
  ConditionalTable() = default;

  /// Validates and, within a 1e-6 slack (or always, with normalize), rescales
  /// each column to sum to one.
  static ConditionalTable make(Eigen::MatrixXd raw, bool normalize = false) {
    SEQBOUND_CHECK(raw.rows() > 0 && raw.cols() > 0, ErrorKind::kShapeMismatch,
                   "conditional table must be non-empty");
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      detail::check_entries(raw.col(c).data(), static_cast<std::size_t>(raw.rows()),
                            "conditional column");
      SEQBOUND_CHECK(raw.col(c).sum() > 0.0, ErrorKind::kZeroColumn,
                     "conditional column " + std::to_string(c) + " is all zero");
      detail::normalize_in_place(raw.col(c).data(), static_cast<std::size_t>(raw.rows()),
                                 normalize, "conditional column");
    }
    ConditionalTable table;
    table.probs_ = std::move(raw);
    return table;
  }

  std::size_t x_size() const { return static_cast<std::size_t>(probs_.rows()); }
  std::size_t c_size() const { return static_cast<std::size_t>(probs_.cols()); }

  double operator()(int x, int c) const { return probs_(x, c); }
  const Eigen::MatrixXd& matrix() const { return probs_; }

  friend bool operator==(const ConditionalTable& a, const ConditionalTable& b) {
    return a.probs_.rows() == b.probs_.rows() && a.probs_.cols() == b.probs_.cols() &&
           a.probs_ == b.probs_;
  }

 private:
  Eigen::MatrixXd probs_;
};

/// make_conditional with an explicit alphabet shape check.
inline ConditionalTable make_conditional(const Alphabet& alphabet, Eigen::MatrixXd raw,
                                         bool normalize = false) {
  SEQBOUND_CHECK(static_cast<std::size_t>(raw.rows()) == alphabet.x_size &&
                     static_cast<std::size_t>(raw.cols()) == alphabet.c_size,
                 ErrorKind::kShapeMismatch, "conditional table shape does not match alphabet");
  return ConditionalTable::make(std::move(raw), normalize);
}

/// Each column an independent symmetric Dirichlet draw.
inline ConditionalTable sample_conditional(const Alphabet& alphabet, Rng& rng, double concentration) {
  Eigen::MatrixXd raw(alphabet.x_size, alphabet.c_size);
  for (std::size_t c = 0; c < alphabet.c_size; ++c) {
    const auto column = sample_dirichlet(rng, alphabet.x_size, concentration);
    for (std::size_t x = 0; x < alphabet.x_size; ++x) raw(x, c) = column[x];
  }
  return ConditionalTable::make(std::move(raw), true);
}

inline ConditionalTable sample_conditional(const Alphabet& alphabet, std::uint64_t seed,
                                           double concentration) {
  Rng rng(seed);
  return sample_conditional(alphabet, rng, concentration);
}

/// (1 - weight) * a + weight * b, column-stochastic whenever a and b are.
inline ConditionalTable mix_conditionals(const ConditionalTable& a, const ConditionalTable& b,
                                         double weight) {
  SEQBOUND_CHECK(a.x_size() == b.x_size() && a.c_size() == b.c_size(), ErrorKind::kShapeMismatch,
                 "mixing tables of different shapes");
  return ConditionalTable::make((1.0 - weight) * a.matrix() + weight * b.matrix(), true);
}

enum class PriorKind { kDense, kPositionUnigram, kBigram };

inline std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::kDense: return "dense";
    case PriorKind::kPositionUnigram: return "position_unigram";
    case PriorKind::kBigram: return "bigram";
  }
  return "unknown";
}

/// A label prior written as a (possibly position-dependent) Markov chain:
/// p(c_1..c_N) = initial(c_1) * prod_n transitions[n-1](c_{n-1}, c_n).
struct ChainForm {
  Eigen::VectorXd initial;
  std::vector<Eigen::MatrixXd> transitions;  // N-1 row-stochastic C x C matrices
};

/// Distribution over label sequences pr(c_1^N). Immutable after construction.
class LabelPrior {
 public:
  struct Dense {
    std::vector<double> probs;  // indexed by encode_sequence(c, c_size)
  };
  struct PositionUnigram {
    Eigen::MatrixXd tables;  // N x C, row n is pr_n(c)
  };
  struct Bigram {
    Eigen::VectorXd initial;     // C
    Eigen::MatrixXd transition;  // C x C, (prev, next)
  };

  LabelPrior() = default;

  static LabelPrior dense(std::size_t c_size, std::size_t seq_len, std::vector<double> probs,
                          std::size_t cap = kDefaultEnumerationCap, bool normalize = false) {
    const std::size_t count = capped_pow(c_size, seq_len, cap);
    SEQBOUND_CHECK(probs.size() == count, ErrorKind::kShapeMismatch,
                   "dense prior needs " + std::to_string(count) + " entries");
    detail::normalize_in_place(probs.data(), probs.size(), normalize, "dense prior");
    return LabelPrior(c_size, seq_len, Dense{std::move(probs)});
  }

  static LabelPrior position_unigram(Eigen::MatrixXd tables, bool normalize = false) {
    SEQBOUND_CHECK(tables.rows() > 0 && tables.cols() > 0, ErrorKind::kShapeMismatch,
                   "position unigram prior must be non-empty");
    Eigen::MatrixXd rows_major = tables;
    for (Eigen::Index n = 0; n < rows_major.rows(); ++n) {
      Eigen::VectorXd row = rows_major.row(n).transpose();
      detail::normalize_in_place(row.data(), static_cast<std::size_t>(row.size()), normalize,
                                 "position unigram row");
      rows_major.row(n) = row.transpose();
    }
    const auto c_size = static_cast<std::size_t>(tables.cols());
    const auto seq_len = static_cast<std::size_t>(tables.rows());
    return LabelPrior(c_size, seq_len, PositionUnigram{std::move(rows_major)});
  }

  static LabelPrior bigram(Eigen::VectorXd initial, Eigen::MatrixXd transition, std::size_t seq_len,
                           bool normalize = false) {
    SEQBOUND_CHECK(initial.size() > 0 && transition.rows() == initial.size() &&
                       transition.cols() == initial.size() && seq_len > 0,
                   ErrorKind::kShapeMismatch, "bigram prior shapes disagree");
    detail::normalize_in_place(initial.data(), static_cast<std::size_t>(initial.size()), normalize,
                               "bigram initial");
    for (Eigen::Index r = 0; r < transition.rows(); ++r) {
      Eigen::VectorXd row = transition.row(r).transpose();
      detail::normalize_in_place(row.data(), static_cast<std::size_t>(row.size()), normalize,
                                 "bigram transition row");
      transition.row(r) = row.transpose();
    }
    const auto c_size = static_cast<std::size_t>(initial.size());
    return LabelPrior(c_size, seq_len, Bigram{std::move(initial), std::move(transition)});
  }

  std::size_t c_size() const { return c_size_; }
  std::size_t seq_len() const { return seq_len_; }

  PriorKind kind() const { return static_cast<PriorKind>(variant_.index()); }
  bool factorized() const { return kind() != PriorKind::kDense; }

  const Dense* as_dense() const { return std::get_if<Dense>(&variant_); }
  const PositionUnigram* as_position_unigram() const { return std::get_if<PositionUnigram>(&variant_); }
  const Bigram* as_bigram() const { return std::get_if<Bigram>(&variant_); }

  /// pr(c_1^N) straight from the stored tables.
  double probability(std::span<const int> c_seq) const {
    SEQBOUND_CHECK(c_seq.size() == seq_len_, ErrorKind::kLengthMismatch, "label sequence length");
    for (int c : c_seq) {
      SEQBOUND_CHECK(c >= 0 && static_cast<std::size_t>(c) < c_size_, ErrorKind::kIndexOutOfRange,
                     "label id out of range");
    }
    if (const auto* d = as_dense()) return d->probs[encode_sequence(c_seq, c_size_)];
    if (const auto* u = as_position_unigram()) {
      double p = 1.0;
      for (std::size_t n = 0; n < seq_len_; ++n) p *= u->tables(n, c_seq[n]);
      return p;
    }
    const auto& b = *as_bigram();
    double p = b.initial(c_seq[0]);
    for (std::size_t n = 1; n < seq_len_; ++n) p *= b.transition(c_seq[n - 1], c_seq[n]);
    return p;
  }

  /// Markov-chain view for factorized priors; empty for Dense.
  std::optional<ChainForm> chain() const {
    if (const auto* u = as_position_unigram()) {
      ChainForm chain;
      chain.initial = u->tables.row(0).transpose();
      for (std::size_t n = 1; n < seq_len_; ++n) {
        // Every row of the transition is the next position's unigram.
        chain.transitions.push_back(
            Eigen::VectorXd::Ones(static_cast<Eigen::Index>(c_size_)) * u->tables.row(n));
      }
      return chain;
    }
    if (const auto* b = as_bigram()) {
      ChainForm chain;
      chain.initial = b->initial;
      chain.transitions.assign(seq_len_ > 0 ? seq_len_ - 1 : 0, b->transition);
      return chain;
    }
    return std::nullopt;
  }

  /// N x C matrix of position marginals pr_n(c).
  Eigen::MatrixXd position_marginals() const {
    const auto n_len = static_cast<Eigen::Index>(seq_len_);
    const auto c_len = static_cast<Eigen::Index>(c_size_);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_len, c_len);
    if (const auto* d = as_dense()) {
      Sequence c_seq(seq_len_);
      for (std::size_t i = 0; i < d->probs.size(); ++i) {
        decode_sequence(i, c_size_, c_seq);
        for (std::size_t n = 0; n < seq_len_; ++n) out(n, c_seq[n]) += d->probs[i];
      }
      return out;
    }
    const auto chain_form = *chain();
    Eigen::RowVectorXd marginal = chain_form.initial.transpose();
    out.row(0) = marginal;
    for (std::size_t n = 1; n < seq_len_; ++n) {
      marginal = marginal * chain_form.transitions[n - 1];
      out.row(n) = marginal;
    }
    return out;
  }

  /// Dense table over C^N (index = encode_sequence).
  std::vector<double> to_dense(std::size_t cap = kDefaultEnumerationCap) const {
    if (const auto* d = as_dense()) return d->probs;
    const std::size_t count = capped_pow(c_size_, seq_len_, cap);
    std::vector<double> probs(count);
    Sequence c_seq(seq_len_);
    for (std::size_t i = 0; i < count; ++i) {
      decode_sequence(i, c_size_, c_seq);
      probs[i] = probability(c_seq);
    }
    return probs;
  }

 private:
  LabelPrior(std::size_t c_size, std::size_t seq_len, std::variant<Dense, PositionUnigram, Bigram> v)
      : c_size_(c_size), seq_len_(seq_len), variant_(std::move(v)) {}

  std::size_t c_size_ = 0;
  std::size_t seq_len_ = 0;
  std::variant<Dense, PositionUnigram, Bigram> variant_;
};

/// Requested prior family for sample_prior. Concentration applies to every
/// Dirichlet draw the family needs.
struct PriorSpec {
  PriorKind kind = PriorKind::kDense;
  double concentration = 1.0;
};

inline LabelPrior sample_prior(const Alphabet& alphabet, const PriorSpec& spec, Rng& rng) {
  const std::size_t c_size = alphabet.c_size;
  switch (spec.kind) {
    case PriorKind::kDense: {
      const std::size_t count = capped_pow(c_size, alphabet.seq_len, alphabet.enumeration_cap);
      return LabelPrior::dense(c_size, alphabet.seq_len,
                               sample_dirichlet(rng, count, spec.concentration),
                               alphabet.enumeration_cap, true);
    }
    case PriorKind::kPositionUnigram: {
      Eigen::MatrixXd tables(alphabet.seq_len, c_size);
      for (std::size_t n = 0; n < alphabet.seq_len; ++n) {
        const auto row = sample_dirichlet(rng, c_size, spec.concentration);
        for (std::size_t c = 0; c < c_size; ++c) tables(n, c) = row[c];
      }
      return LabelPrior::position_unigram(std::move(tables), true);
    }
    case PriorKind::kBigram: {
      const auto init = sample_dirichlet(rng, c_size, spec.concentration);
      Eigen::VectorXd initial = Eigen::Map<const Eigen::VectorXd>(init.data(), init.size());
      Eigen::MatrixXd transition(c_size, c_size);
      for (std::size_t r = 0; r < c_size; ++r) {
        const auto row = sample_dirichlet(rng, c_size, spec.concentration);
        for (std::size_t c = 0; c < c_size; ++c) transition(r, c) = row[c];
      }
      return LabelPrior::bigram(std::move(initial), std::move(transition), alphabet.seq_len, true);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown prior kind");
}

inline LabelPrior sample_prior(const Alphabet& alphabet, const PriorSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(alphabet, spec, rng);
}

/// A dense distribution over base^N sequences with its position marginals.
class SequenceDist {
 public:
  SequenceDist() = default;

  /// Takes ownership of probs (index = encode_sequence) and fills the
  /// position marginals by direct summation.
  static SequenceDist from_probs(std::size_t base, std::size_t seq_len, std::vector<double> probs) {
    SEQBOUND_CHECK(probs.size() == capped_pow(base, seq_len, probs.size()), ErrorKind::kShapeMismatch,
                   "sequence distribution size does not match base^N");
    SequenceDist dist;
    dist.base_ = base;
    dist.seq_len_ = seq_len;
    dist.marginals_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seq_len),
                                            static_cast<Eigen::Index>(base));
    Sequence seq(seq_len);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      decode_sequence(i, base, seq);
      for (std::size_t n = 0; n < seq_len; ++n) dist.marginals_(n, seq[n]) += probs[i];
    }
    dist.probs_ = std::move(probs);
    return dist;
  }

  std::size_t base() const { return base_; }
  std::size_t seq_len() const { return seq_len_; }
  std::size_t size() const { return probs_.size(); }

  double operator[](std::size_t index) const { return probs_[index]; }
  double at(std::span<const int> seq) const { return probs_[encode_sequence(seq, base_)]; }
  const std::vector<double>& probs() const { return probs_; }

  /// N x base matrix; row n is the position-n marginal.
  const Eigen::MatrixXd& position_marginals() const { return marginals_; }

  double total_mass() const {
    double total = 0.0;
    for (double p : probs_) total += p;
    return total;
  }

 private:
  std::size_t base_ = 0;
  std::size_t seq_len_ = 0;
  std::vector<double> probs_;
  Eigen::MatrixXd marginals_;
};

/// pr(c_1^N, x_1^N) = prior(c_1^N) * prod_n cond_n(x_n | c_n).
///
/// A structured joint uses one conditional for every position (the structure
/// constraint). A position-dependent joint carries one table per position and
/// is how constructions that break the constraint are expressed.
class JointDist {
 public:
  JointDist() = default;

  static JointDist structured(LabelPrior prior, ConditionalTable cond) {
    check_shapes(prior, cond);
    JointDist joint;
    joint.prior_ = std::move(prior);
    joint.conds_.push_back(std::move(cond));
    return joint;
  }

  static JointDist position_dependent(LabelPrior prior, std::vector<ConditionalTable> conds) {
    SEQBOUND_CHECK(conds.size() == prior.seq_len(), ErrorKind::kShapeMismatch,
                   "need one conditional table per position");
    for (const auto& cond : conds) check_shapes(prior, cond);
    bool all_equal = true;
    for (const auto& cond : conds) all_equal = all_equal && cond == conds.front();
    if (all_equal) return structured(std::move(prior), std::move(conds.front()));
    JointDist joint;
    joint.prior_ = std::move(prior);
    joint.conds_ = std::move(conds);
    return joint;
  }

  const LabelPrior& prior() const { return prior_; }
  bool is_structured() const { return conds_.size() == 1; }

  /// Conditional in effect at 0-based position n.
  const ConditionalTable& cond(std::size_t n = 0) const {
    return conds_.size() == 1 ? conds_.front() : conds_.at(n);
  }
  const std::vector<ConditionalTable>& conds() const { return conds_; }

  std::size_t x_size() const { return conds_.front().x_size(); }
  std::size_t c_size() const { return prior_.c_size(); }
  std::size_t seq_len() const { return prior_.seq_len(); }

  Alphabet alphabet(std::size_t cap = kDefaultEnumerationCap) const {
    return Alphabet::make(x_size(), c_size(), seq_len(), cap);
  }

  /// prior(c) * prod_n cond_n(x_n|c_n) for one explicit pair.
  double probability(std::span<const int> c_seq, std::span<const int> x_seq) const {
    SEQBOUND_CHECK(x_seq.size() == seq_len(), ErrorKind::kLengthMismatch, "observation length");
    double p = prior_.probability(c_seq);
    for (std::size_t n = 0; n < seq_len(); ++n) p *= cond(n)(x_seq[n], c_seq[n]);
    return p;
  }

  /// Dense table indexed [c_index * |X|^N + x_index].
  std::vector<double> materialize(std::size_t cap = kDefaultEnumerationCap) const {
    const std::size_t c_count = capped_pow(c_size(), seq_len(), cap);
    const std::size_t x_count = capped_pow(x_size(), seq_len(), cap);
    SEQBOUND_CHECK(c_count <= cap / x_count, ErrorKind::kEnumerationCapExceeded,
                   "joint table exceeds enumeration cap");
    const auto prior_probs = prior_.to_dense(cap);
    std::vector<double> table(c_count * x_count);
    Sequence c_seq(seq_len()), x_seq(seq_len());
    for (std::size_t ci = 0; ci < c_count; ++ci) {
      decode_sequence(ci, c_size(), c_seq);
      for (std::size_t xi = 0; xi < x_count; ++xi) {
        decode_sequence(xi, x_size(), x_seq);
        double p = prior_probs[ci];
        for (std::size_t n = 0; n < seq_len(); ++n) p *= cond(n)(x_seq[n], c_seq[n]);
        table[ci * x_count + xi] = p;
      }
    }
    return table;
  }

 private:
  static void check_shapes(const LabelPrior& prior, const ConditionalTable& cond) {
    SEQBOUND_CHECK(prior.c_size() == cond.c_size(), ErrorKind::kShapeMismatch,
                   "prior and conditional disagree on |C|");
  }

  LabelPrior prior_;
  std::vector<ConditionalTable> conds_;
};

inline void require_same_alphabet(const JointDist& a, const JointDist& b) {
  SEQBOUND_CHECK(a.x_size() == b.x_size() && a.c_size() == b.c_size() && a.seq_len() == b.seq_len(),
                 ErrorKind::kAlphabetMismatch, "distributions live on different alphabets");
}

}  // namespace seqbound
