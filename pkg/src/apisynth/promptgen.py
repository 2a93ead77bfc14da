"""API-set sampling and instruction-prompt assembly.

BASIC prompts draw from the basic tier only; MIX prompts draw from the
whole catalog. When a skeleton is attached, the prompt additionally tells
the model to follow the code structure.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .apimodel import ApiCatalog, ApiRecord, TIER_BASIC

KIND_BASIC = "BASIC"
KIND_MIX = "MIX"
DEFAULT_APIS_PER_PROMPT = 5

SYSTEM_TEMPLATE = (
    "You are a teacher who is good at {library}. You are exceptionally skilled "
    "at crafting high-quality programming problems and offering precise solutions."
)

_USER_HEAD = (
    "Please take inspiration from the following list of application interfaces "
    "and their definitions to create a quality programming problem. "
    "Requirement: Use to all APIs in the list. Present your output in two "
    "distinct sections: [Problem Description] and [Solution].\n"
    "API list for inspiration:\n{api_lines}\n"
)

_USER_SKELETON = (
    "You will be given a Python code skeleton, and you need to follow the "
    "structure to complete your solution. Example Python code skeleton:\n{skeleton}\n"
)

_USER_TAIL = (
    "Guidelines for each section: 1. [Problem Description]: This should be "
    "**completely self-contained**, providing all the contextual information "
    "one needs to understand and solve the problem. Assume common programming "
    "knowledge, but ensure that any specific context, variables, or code "
    "snippets pertinent to this problem are explicitly included.\n"
    "2. [Solution]: Offer a comprehensive, **correct** solution that "
    "accurately addresses the [Problem Description] you provided."
)


@dataclass
class PromptSpec:
    library: str
    kind: str  # KIND_BASIC or KIND_MIX
    apis: list[ApiRecord]
    skeleton: str | None = None  # standardized skeleton text
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (KIND_BASIC, KIND_MIX):
            raise ValueError(f"unknown prompt kind {self.kind!r}")
        names = [r.qualified_name for r in self.apis]
        if len(names) != len(set(names)):
            raise ValueError("prompt APIs must be distinct")
        if self.kind == KIND_BASIC and any(r.tier != TIER_BASIC for r in self.apis):
            raise ValueError("BASIC prompts may only carry basic-tier APIs")

    def api_names(self) -> list[str]:
        return [r.qualified_name for r in self.apis]


def sample_api_set(
    catalog: ApiCatalog,
    kind: str,
    n_apis: int = DEFAULT_APIS_PER_PROMPT,
    seed: int = 0,
) -> list[ApiRecord]:
    """Seeded uniform sample without replacement from the eligible tier pool."""
    if kind == KIND_BASIC:
        pool = catalog.basic_records()
    elif kind == KIND_MIX:
        pool = list(catalog.records)
    else:
        raise ValueError(f"unknown prompt kind {kind!r}")
    if len(pool) < n_apis:
        raise ValueError(
            f"{kind} pool has {len(pool)} records; cannot sample {n_apis}"
        )
    rng = random.Random(seed)
    return rng.sample(pool, n_apis)


def assemble_prompt(spec: PromptSpec) -> tuple[str, str]:
    """Render (system, user) texts; the skeleton passage appears only when
    the spec carries one."""
    system = SYSTEM_TEMPLATE.format(library=spec.library)
    api_lines = "\n".join(record.render() for record in spec.apis)
    user = _USER_HEAD.format(api_lines=api_lines)
    if spec.skeleton is not None:
        user += _USER_SKELETON.format(skeleton=spec.skeleton)
    user += _USER_TAIL
    return system, user


def build_prompt_rows(specs: list[PromptSpec]) -> list[dict]:
    """JSONL-ready rows: {seed, library, kind, apis, skeleton?, system, user}."""
    rows = []
    for spec in specs:
        system, user = assemble_prompt(spec)
        row = {
            "seed": spec.seed,
            "library": spec.library,
            "kind": spec.kind,
            "apis": spec.api_names(),
            "system": system,
            "user": user,
        }
        if spec.skeleton is not None:
            row["skeleton"] = spec.skeleton
        rows.append(row)
    return rows


def save_prompts(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def load_prompts(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows
