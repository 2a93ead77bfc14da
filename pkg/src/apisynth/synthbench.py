"""Deterministic synthetic corpora for benchmarks and acceptance tests.

Cases draw 1-8 APIs with Zipf-shaped popularity (a few APIs appear
everywhere, a long tail rarely) and a log-normal code length. The code
field is a trivially valid program whose calls re-extract to exactly the
drawn api_set, padded with filler assignments toward the target length.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, SftExample, tokenize

MAX_APIS_PER_CASE = 8


@dataclass
class SynthSpec:
    n_cases: int
    n_apis: int
    api_popularity: float = 1.1  # Zipf exponent
    length_mu: float = 5.0  # log-normal params for target code length
    length_sigma: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_cases < 1 or self.n_apis < 1:
            raise ValueError("n_cases and n_apis must be >= 1")


def api_name(index: int) -> str:
    return f"pkg{index % 7}.fn{index:03d}"


def make_corpus(spec: SynthSpec) -> Corpus:
    rng = random.Random(spec.seed)
    names = [api_name(i) for i in range(spec.n_apis)]
    weights = [1.0 / (rank + 1) ** spec.api_popularity for rank in range(spec.n_apis)]

    examples = []
    for case in range(spec.n_cases):
        # skewed draw count (most cases use 1-3 APIs) and head-heavy
        # duplicate draws that collapse, the way common calls dominate
        # real corpora
        cap = min(MAX_APIS_PER_CASE, spec.n_apis)
        draw_count = rng.randint(1, rng.randint(1, cap))
        chosen: list[str] = []
        for pick in rng.choices(names, weights=weights, k=draw_count):
            if pick not in chosen:
                chosen.append(pick)

        target_len = max(8, int(rng.lognormvariate(spec.length_mu, spec.length_sigma)))
        lines = ["x0 = 1"]
        for i, name in enumerate(chosen):
            lines.append(f"x{i + 1} = {name}(x{i})")
        base_tokens = sum(len(tokenize(line)) for line in lines)
        pad = max(0, round((target_len - base_tokens) / 3))  # filler adds 3 tokens
        for j in range(pad):
            lines.append(f"y{j} = {j % 10}")
        code = "\n".join(lines) + "\n"

        examples.append(
            SftExample(
                id=f"synth:{case}",
                instruction=f"synthetic task {case}",
                code=code,
                api_set=set(chosen),
            )
        )
    return Corpus(examples=examples, source_name=f"synth-{spec.seed}")
