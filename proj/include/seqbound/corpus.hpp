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
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "seqbound/error.hpp"
#include "seqbound/lm_matrix.hpp"

namespace seqbound {

/// What to do with a line longer than the analysis length N. Shorter lines
/// are always discarded.
enum class LengthPolicy { kTruncate, kDiscard };

inline std::string to_string(LengthPolicy policy) {
  return policy == LengthPolicy::kTruncate ? "truncate" : "discard";
}

inline LengthPolicy parse_length_policy(const std::string& name) {
  if (name == "truncate") return LengthPolicy::kTruncate;
  if (name == "discard") return LengthPolicy::kDiscard;
  throw Error(ErrorKind::kInvalidArgument, "unknown length policy '" + name + "'");
}

struct CorpusOptions {
  std::size_t seq_len = 0;
  LengthPolicy policy = LengthPolicy::kTruncate;
  std::size_t vocab_cap = 1000;
  std::vector<double> growth_fractions = {0.1, 0.25, 0.5, 1.0};
};

struct GrowthPoint {
  double fraction = 0.0;
  std::size_t sequence_count = 0;
  std::size_t vocab_size = 0;
  double sigma_min = 0.0;
};

struct CorpusStats {
  std::vector<std::string> vocab;  // label id -> token, first-appearance order
  std::unordered_map<std::string, int> vocab_index;
  std::size_t seq_len = 0;
  LengthPolicy policy = LengthPolicy::kTruncate;
  std::size_t lines_read = 0;
  std::size_t sequence_count = 0;
  LmMatrix lm_matrix;
  std::vector<GrowthPoint> sigma_min_by_prefix;
};

namespace detail {

// Empirical N x V position-unigram matrix over the first `count` sequences,
// with the vocabulary those sequences use (first-appearance order).
inline std::pair<Eigen::MatrixXd, std::vector<std::string>> position_unigram_counts(
    const std::vector<std::vector<std::string>>& sequences, std::size_t count, std::size_t seq_len) {
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> index;
  std::vector<std::vector<int>> ids(count);
  for (std::size_t s = 0; s < count; ++s) {
    for (const auto& token : sequences[s]) {
      auto [it, inserted] = index.emplace(token, static_cast<int>(vocab.size()));
      if (inserted) vocab.push_back(token);
      ids[s].push_back(it->second);
    }
  }
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(seq_len),
                                                 static_cast<Eigen::Index>(vocab.size()));
  for (const auto& seq : ids) {
    for (std::size_t n = 0; n < seq_len; ++n) counts(n, seq[n]) += 1.0;
  }
  counts /= static_cast<double>(count);
  return {std::move(counts), std::move(vocab)};
}

}  // namespace detail

/// Reads whitespace-tokenized sequences (one per line), maps them to a fixed
/// length N and reports the conditioning of the empirical P_C.
inline CorpusStats ingest(std::istream& in, const CorpusOptions& options) {
  SEQBOUND_CHECK(options.seq_len > 0, ErrorKind::kInvalidArgument, "seq_len must be positive");
  for (std::size_t i = 0; i < options.growth_fractions.size(); ++i) {
    const double f = options.growth_fractions[i];
    SEQBOUND_CHECK(f > 0.0 && f <= 1.0 && (i == 0 || f > options.growth_fractions[i - 1]),
                   ErrorKind::kInvalidArgument, "growth fractions must be strictly increasing in (0, 1]");
  }

  CorpusStats stats;
  stats.seq_len = options.seq_len;
  stats.policy = options.policy;
  std::vector<std::vector<std::string>> sequences;
  std::string line;
  while (std::getline(in, line)) {
    ++stats.lines_read;
    std::istringstream tokens(line);
    std::vector<std::string> seq;
    for (std::string token; tokens >> token;) seq.push_back(std::move(token));
    if (seq.size() < options.seq_len) continue;
    if (seq.size() > options.seq_len) {
      if (options.policy == LengthPolicy::kDiscard) continue;
      seq.resize(options.seq_len);
    }
    sequences.push_back(std::move(seq));
  }
  SEQBOUND_CHECK(!sequences.empty(), ErrorKind::kEmptyCorpus,
                 "no line has at least " + std::to_string(options.seq_len) + " tokens");
  stats.sequence_count = sequences.size();

  auto [matrix, vocab] = detail::position_unigram_counts(sequences, sequences.size(), options.seq_len);
  SEQBOUND_CHECK(vocab.size() <= options.vocab_cap, ErrorKind::kVocabTooLarge,
                 std::to_string(vocab.size()) + " labels exceed cap " + std::to_string(options.vocab_cap));
  stats.vocab = std::move(vocab);
  for (std::size_t i = 0; i < stats.vocab.size(); ++i) stats.vocab_index.emplace(stats.vocab[i], static_cast<int>(i));
  stats.lm_matrix = build_lm_matrix(matrix);

  for (double fraction : options.growth_fractions) {
    const auto count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(sequences.size()))));
    const auto prefix_count = std::min(count, sequences.size());
    const auto [prefix_matrix, prefix_vocab] =
        detail::position_unigram_counts(sequences, prefix_count, options.seq_len);
    stats.sigma_min_by_prefix.push_back(
        GrowthPoint{fraction, prefix_count, prefix_vocab.size(), build_lm_matrix(prefix_matrix).sigma_min});
  }
  return stats;
}

inline CorpusStats ingest(const std::string& path, const CorpusOptions& options) {
  std::ifstream in(path);
  SEQBOUND_CHECK(in.good(), ErrorKind::kIo, "cannot open corpus '" + path + "'");
  return ingest(in, options);
}

}  // namespace seqbound
