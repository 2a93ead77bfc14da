"""Tiered API catalogs built from documentation dumps and tutorial corpora.

A doc dump is JSONL with records {name, signature, description, base_of?}.
After filtering, APIs seen in tutorial code become the basic tier (capped,
ranked by how many tutorial examples use them); the rest are advanced.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .extractor import extract_api_usages, syntax_check

TIER_BASIC = "basic"
TIER_ADVANCED = "advanced"
DEFAULT_BASIC_CAP = 50
MAX_NAME_SEGMENTS = 4


class CatalogError(ValueError):
    pass


@dataclass
class ApiRecord:
    qualified_name: str
    signature: str
    description: str
    tier: str

    def render(self) -> str:
        """One prompt line: ``name(signature): description``."""
        return f"{self.qualified_name}({self.signature}): {self.description}"


@dataclass
class ApiCatalog:
    library: str
    records: list[ApiRecord]
    basic_cap: int = DEFAULT_BASIC_CAP

    def __post_init__(self) -> None:
        names = [r.qualified_name for r in self.records]
        if len(names) != len(set(names)):
            raise CatalogError("duplicate qualified names in catalog")
        bad_tier = [r.qualified_name for r in self.records if r.tier not in (TIER_BASIC, TIER_ADVANCED)]
        if bad_tier:
            raise CatalogError(f"unknown tier on records: {bad_tier}")
        n_basic = len(self.basic_records())
        if n_basic > self.basic_cap:
            raise CatalogError(f"{n_basic} basic records exceed cap {self.basic_cap}")

    def names(self) -> set[str]:
        return {r.qualified_name for r in self.records}

    def basic_records(self) -> list[ApiRecord]:
        return [r for r in self.records if r.tier == TIER_BASIC]

    def advanced_records(self) -> list[ApiRecord]:
        return [r for r in self.records if r.tier == TIER_ADVANCED]


def _catalog_name_banned(name: str) -> bool:
    segments = name.split(".")
    return any(seg.startswith("__") or seg == "c" for seg in segments)


def _read_doc_dump(path: str | Path) -> list[dict]:
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def build_catalog(
    library: str,
    docs: str | Path,
    tutorials: Corpus,
    basic_cap: int = DEFAULT_BASIC_CAP,
) -> ApiCatalog:
    """Filter a doc dump and split APIs into basic/advanced tiers.

    Dropped: dunder/`c` names, derived-class duplicates (records carrying
    base_of), and names nested deeper than four dotted segments. Basic tier
    = APIs used by tutorial examples, most-used first (ties lexicographic),
    truncated to ``basic_cap``; everything else is advanced. The result is
    independent of doc record order.
    """
    raw = _read_doc_dump(docs)
    if not raw:
        raise CatalogError(f"doc dump {docs} is empty")

    filtered: dict[str, tuple[str, str]] = {}
    for row in raw:
        name = row["name"]
        if _catalog_name_banned(name):
            continue
        if row.get("base_of"):
            continue  # derived-class duplicate; keep the base path only
        if len(name.split(".")) > MAX_NAME_SEGMENTS:
            continue
        sig = row.get("signature", "")
        desc = row.get("description", "")
        current = filtered.get(name)
        # duplicate doc records: keep the lexicographically smallest payload
        if current is None or (sig, desc) < current:
            filtered[name] = (sig, desc)
    if not filtered:
        raise CatalogError("no APIs survived doc filtering")

    usage_counts: Counter[str] = Counter()
    for ex in tutorials:
        if not syntax_check(ex.code):
            continue
        used = extract_api_usages(ex.code) & set(filtered)
        usage_counts.update(used)
    if not usage_counts:
        raise CatalogError("tutorials use none of the documented APIs; cannot form a basic tier")

    ranked = sorted(usage_counts.items(), key=lambda item: (-item[1], item[0]))
    basic_names = [name for name, _ in ranked[:basic_cap]]

    records = [
        ApiRecord(name, *filtered[name], tier=TIER_BASIC) for name in basic_names
    ]
    advanced = sorted(set(filtered) - set(basic_names))
    records.extend(ApiRecord(name, *filtered[name], tier=TIER_ADVANCED) for name in advanced)
    return ApiCatalog(library=library, records=records, basic_cap=basic_cap)


def save_catalog(catalog: ApiCatalog, path: str | Path) -> None:
    payload = {
        "library": catalog.library,
        "basic_cap": catalog.basic_cap,
        "records": [
            {
                "qualified_name": r.qualified_name,
                "signature": r.signature,
                "description": r.description,
                "tier": r.tier,
            }
            for r in catalog.records
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_catalog(path: str | Path) -> ApiCatalog:
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        raise CatalogError(f"catalog file {path} is empty")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog file {path} is not valid JSON: {exc}") from exc
    try:
        records = [
            ApiRecord(
                qualified_name=r["qualified_name"],
                signature=r["signature"],
                description=r["description"],
                tier=r["tier"],
            )
            for r in payload["records"]
        ]
        return ApiCatalog(
            library=payload["library"],
            records=records,
            basic_cap=payload.get("basic_cap", DEFAULT_BASIC_CAP),
        )
    except KeyError as exc:
        raise CatalogError(f"catalog file {path} missing field {exc}") from exc
