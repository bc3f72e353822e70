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

#include "seqbound/alphabet.hpp"
#include "seqbound/bounds.hpp"
#include "seqbound/corpus.hpp"
#include "seqbound/decision.hpp"
#include "seqbound/distributions.hpp"
#include "seqbound/error.hpp"
#include "seqbound/experiment.hpp"
#include "seqbound/lm_matrix.hpp"
#include "seqbound/marginals.hpp"
#include "seqbound/random.hpp"
#include "seqbound/serialize.hpp"
#include "seqbound/simulate.hpp"
#include "seqbound/train.hpp"
