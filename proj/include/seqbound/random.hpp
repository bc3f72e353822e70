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

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "seqbound/error.hpp"

namespace seqbound {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-instance streams.
constexpr std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

/// One draw from a symmetric Dirichlet(concentration, ..., concentration).
inline std::vector<double> sample_dirichlet(Rng& rng, std::size_t dim, double concentration) {
  SEQBOUND_CHECK(concentration > 0.0 && std::isfinite(concentration), ErrorKind::kInvalidArgument,
                 "Dirichlet concentration must be positive");
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> draw(dim);
  double total = 0.0;
  // Tiny concentrations can round every gamma draw to zero; redraw then.
  for (int attempt = 0; attempt < 1000 && total <= 0.0; ++attempt) {
    total = 0.0;
    for (double& v : draw) {
      v = gamma(rng);
      total += v;
    }
  }
  SEQBOUND_CHECK(total > 0.0, ErrorKind::kInvalidArgument, "Dirichlet draw degenerated");
  for (double& v : draw) v /= total;
  return draw;
}

/// Log-uniform draw on [lo, hi].
inline double sample_log_uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

/// Inverse-CDF categorical draw; deterministic for a given engine state.
inline int sample_categorical(Rng& rng, const double* probs, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += probs[i];
    if (r < acc) return static_cast<int>(i);
  }
  // r landed in the rounding slack above the last cumulative sum.
  for (std::size_t i = n; i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return 0;
}

}  // namespace seqbound
