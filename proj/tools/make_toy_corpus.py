#!/usr/bin/env python3
# Copyright 2026 The seqbound Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the bundled toy label corpus.

Lines are drawn from a five-label Markov chain that mostly steps to the next
label, so position unigrams stay distinct for the first few positions. Line
lengths vary between 3 and 12 tokens.
"""

import argparse
import random

LABELS = ["sil", "ah", "k", "t", "iy"]
START = [0.55, 0.2, 0.1, 0.1, 0.05]
ADVANCE = 0.7


def draw_line(rng: random.Random) -> list[str]:
    length = rng.randint(3, 12)
    state = rng.choices(range(len(LABELS)), weights=START)[0]
    out = [LABELS[state]]
    for _ in range(length - 1):
        if rng.random() < ADVANCE:
            state = (state + 1) % len(LABELS)
        else:
            state = rng.randrange(len(LABELS))
        out.append(LABELS[state])
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lines", type=int, default=12000)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--out", default="data/toy_corpus.txt")
    args = parser.parse_args()
    rng = random.Random(args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        for _ in range(args.lines):
            f.write(" ".join(draw_line(rng)) + "\n")


if __name__ == "__main__":
    main()
