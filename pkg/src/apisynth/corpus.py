"""Corpus ingestion, filtering, and persistence for SFT instruction/code pairs.

A corpus is an ordered list of examples, each holding an instruction, a
Python code string, the set of qualified API names used by that code
(populated by the extractor), and a deterministic token length.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(code: str) -> list[str]:
    """Split source text on whitespace and punctuation boundaries.

    Every run of word characters is one token; every other non-space
    character is its own token. Deterministic and model-free.
    """
    return _TOKEN_RE.findall(code)


@dataclass
class SftExample:
    """One instruction/code pair plus its extracted API stats."""

    id: str
    instruction: str
    code: str
    api_set: set[str] = field(default_factory=set)
    length_tokens: int = 0

    def __post_init__(self) -> None:
        if self.length_tokens == 0:
            self.length_tokens = len(tokenize(self.code))


@dataclass
class Corpus:
    examples: list[SftExample] = field(default_factory=list)
    source_name: str = ""

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]

    def lengths(self) -> list[int]:
        return [ex.length_tokens for ex in self.examples]


@dataclass
class RejectRecord:
    id: str
    reason: str


def ingest(path: str | Path, source_name: str = "") -> tuple[Corpus, list[RejectRecord]]:
    """Read a corpus from JSONL; one object per line with instruction and code.

    Records missing an id get ``<source>:<line-number>``. Malformed lines and
    records missing required fields are collected into the rejects list
    instead of aborting the whole ingestion. Blank lines are skipped.
    """
    path = Path(path)
    examples: list[SftExample] = []
    rejects: list[RejectRecord] = []
    seen_ids: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            fallback_id = f"{source_name}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                rejects.append(
                    RejectRecord(fallback_id, f"malformed JSON at line {lineno}: {exc.msg}")
                )
                continue
            if not isinstance(record, dict):
                rejects.append(RejectRecord(fallback_id, f"non-object record at line {lineno}"))
                continue
            missing = [k for k in ("instruction", "code") if k not in record]
            if missing:
                rejects.append(RejectRecord(fallback_id, f"missing field: {', '.join(missing)}"))
                continue
            ex_id = str(record.get("id") or fallback_id)
            if ex_id in seen_ids:
                rejects.append(RejectRecord(ex_id, "duplicate id"))
                continue
            seen_ids.add(ex_id)
            examples.append(SftExample(id=ex_id, instruction=record["instruction"], code=record["code"]))
    return Corpus(examples=examples, source_name=source_name), rejects


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write corpus JSONL with fields id, instruction, code."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(
                json.dumps(
                    {"id": ex.id, "instruction": ex.instruction, "code": ex.code},
                    sort_keys=True,
                )
                + "\n"
            )


def save_rejects(rejects: list[RejectRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rej in rejects:
            fh.write(json.dumps({"id": rej.id, "reason": rej.reason}, sort_keys=True) + "\n")


def filter_corpus(corpus: Corpus, max_tokens: int) -> tuple[Corpus, list[RejectRecord]]:
    """Drop examples that fail the syntax check or exceed the token bound.

    Each removal is reported with reason "syntax" or "length"; syntax is
    checked first. |kept| + |rejects| = |input| always holds.
    """
    from .extractor import syntax_check

    if max_tokens <= 0:
        raise ValueError(f"max_tokens must be positive, got {max_tokens}")
    kept: list[SftExample] = []
    rejects: list[RejectRecord] = []
    for ex in corpus:
        if not syntax_check(ex.code):
            rejects.append(RejectRecord(ex.id, "syntax"))
        elif ex.length_tokens > max_tokens:
            rejects.append(RejectRecord(ex.id, "length"))
        else:
            kept.append(ex)
    return Corpus(examples=kept, source_name=corpus.source_name), rejects
