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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqbound/error.hpp"

namespace seqbound {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// A sequence of dense integer ids (observations or labels).
using Sequence = std::vector<int>;

/// base^exponent, or throws EnumerationCapExceeded once the value passes cap.
inline std::size_t capped_pow(std::size_t base, std::size_t exponent, std::size_t cap) {
  std::size_t value = 1;
  for (std::size_t i = 0; i < exponent; ++i) {
    if (base != 0 && value > cap / base) {
      throw Error(ErrorKind::kEnumerationCapExceeded,
                  std::to_string(base) + "^" + std::to_string(exponent) + " exceeds cap " +
                      std::to_string(cap));
    }
    value *= base;
  }
  SEQBOUND_CHECK(value <= cap, ErrorKind::kEnumerationCapExceeded,
                 std::to_string(value) + " exceeds cap " + std::to_string(cap));
  return value;
}

// Sequences are encoded as base-`base` integers with position 0 the most
// significant digit, so lexicographic order equals index order.
inline std::size_t encode_sequence(std::span<const int> seq, std::size_t base) {
  std::size_t index = 0;
  for (int symbol : seq) index = index * base + static_cast<std::size_t>(symbol);
  return index;
}

inline void decode_sequence(std::size_t index, std::size_t base, std::span<int> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<int>(index % base);
    index /= base;
  }
}

inline Sequence decode_sequence(std::size_t index, std::size_t base, std::size_t length) {
  Sequence seq(length);
  decode_sequence(index, base, seq);
  return seq;
}

/// The observation set, the label set and the common sequence length.
struct Alphabet {
  std::size_t x_size = 0;
  std::size_t c_size = 0;
  std::size_t seq_len = 0;
  std::size_t enumeration_cap = kDefaultEnumerationCap;

  /// Validating constructor. Requires x_size > c_size and both |X|^N and
  /// |C|^N within the enumeration cap.
  static Alphabet make(std::size_t x_size, std::size_t c_size, std::size_t seq_len,
                       std::size_t cap = kDefaultEnumerationCap) {
    SEQBOUND_CHECK(x_size > 0 && c_size > 0 && seq_len > 0, ErrorKind::kInvalidArgument,
                   "alphabet sizes and sequence length must be positive");
    SEQBOUND_CHECK(x_size > c_size, ErrorKind::kInvalidArgument,
                   "observation alphabet must be larger than label alphabet (" +
                       std::to_string(x_size) + " <= " + std::to_string(c_size) + ")");
    capped_pow(x_size, seq_len, cap);
    capped_pow(c_size, seq_len, cap);
    return Alphabet{x_size, c_size, seq_len, cap};
  }

  std::size_t x_count() const { return capped_pow(x_size, seq_len, enumeration_cap); }
  std::size_t c_count() const { return capped_pow(c_size, seq_len, enumeration_cap); }

  bool valid_x(std::span<const int> seq) const { return valid(seq, x_size); }
  bool valid_c(std::span<const int> seq) const { return valid(seq, c_size); }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.x_size == b.x_size && a.c_size == b.c_size && a.seq_len == b.seq_len;
  }

 private:
  bool valid(std::span<const int> seq, std::size_t base) const {
    if (seq.size() != seq_len) return false;
    for (int s : seq) {
      if (s < 0 || static_cast<std::size_t>(s) >= base) return false;
    }
    return true;
  }
};

inline void require_x(const Alphabet& alphabet, std::span<const int> x_seq) {
  SEQBOUND_CHECK(alphabet.valid_x(x_seq), ErrorKind::kIndexOutOfRange,
                 "observation sequence does not fit the alphabet");
}

inline void require_c(const Alphabet& alphabet, std::span<const int> c_seq) {
  SEQBOUND_CHECK(alphabet.valid_c(c_seq), ErrorKind::kIndexOutOfRange,
                 "label sequence does not fit the alphabet");
}

}  // namespace seqbound
