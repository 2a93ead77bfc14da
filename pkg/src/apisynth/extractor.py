"""Static analysis of Python source: syntax checking, qualified API call
extraction with import-alias resolution and method-chain filtering, and a
module-level cyclomatic complexity score.

Only call expressions count as API usages; bare attribute reads do not.
No code is ever executed.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .apimodel import ApiCatalog
    from .corpus import Corpus

MAX_CHAIN_LENGTH = 3


@dataclass
class ApiUsage:
    """A single call-site usage of a qualified API name."""

    qualified_name: str
    chain_length: int
    span: tuple[int, int]


def syntax_check(code: str) -> bool:
    """True iff the text parses as a Python module."""
    try:
        ast.parse(code)
    except (SyntaxError, ValueError):
        return False
    return True


def name_is_banned(qualified_name: str) -> bool:
    """Internal/low-level names: any dunder segment, or a leading `c.`."""
    segments = qualified_name.split(".")
    if any(seg.startswith("__") for seg in segments):
        return True
    return qualified_name.startswith("c.")


def _import_aliases(tree: ast.Module) -> dict[str, str]:
    """Map local binding name -> fully qualified dotted prefix."""
    aliases: dict[str, str] = {}
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for alias in node.names:
                bound = alias.asname or alias.name.split(".")[0]
                target = alias.name if alias.asname else alias.name.split(".")[0]
                aliases[bound] = target
        elif isinstance(node, ast.ImportFrom):
            if node.module is None or node.level:
                continue  # relative imports stay unresolved
            for alias in node.names:
                if alias.name == "*":
                    continue
                bound = alias.asname or alias.name
                aliases[bound] = f"{node.module}.{alias.name}"
    return aliases


def _dotted_segments(node: ast.expr, aliases: dict[str, str]) -> list[str]:
    """Dotted path of a call target; parens in chains are dropped.

    Unresolvable bases (subscripts, literals, lambdas) contribute nothing,
    so only the trailing attribute path survives for them.
    """
    if isinstance(node, ast.Name):
        resolved = aliases.get(node.id, node.id)
        return resolved.split(".")
    if isinstance(node, ast.Attribute):
        return _dotted_segments(node.value, aliases) + [node.attr]
    if isinstance(node, ast.Call):
        return _dotted_segments(node.func, aliases)
    return []


def _direct_inner_call(call: ast.Call) -> ast.Call | None:
    """The next call down the method chain, if this call extends one."""
    node = call.func
    while isinstance(node, ast.Attribute):
        node = node.value
    return node if isinstance(node, ast.Call) else None


def _byte_offset_index(code: str) -> list[int]:
    """Byte offset of the start of each line (ast col_offset is in bytes)."""
    offsets = [0]
    for line in code.split("\n")[:-1]:
        offsets.append(offsets[-1] + len(line.encode("utf-8")) + 1)
    return offsets


def extract_usage_records(code: str) -> list[ApiUsage]:
    """All call usages with resolved names, chain lengths, and byte spans.

    Chain length is shared by every call in a dotted method chain:
    ``a.b().c()`` gives both calls chain length 2.
    """
    try:
        tree = ast.parse(code)
    except (SyntaxError, ValueError) as exc:
        raise ValueError(f"cannot extract from unparseable code: {exc}") from exc
    aliases = _import_aliases(tree)
    calls = [node for node in ast.walk(tree) if isinstance(node, ast.Call)]

    inner: dict[ast.Call, ast.Call] = {}
    for call in calls:
        nxt = _direct_inner_call(call)
        if nxt is not None:
            inner[nxt] = call

    chain_length: dict[ast.Call, int] = {}
    for root in calls:
        if root in inner:
            continue  # not the top of its chain
        members = [root]
        node = _direct_inner_call(root)
        while node is not None:
            members.append(node)
            node = _direct_inner_call(node)
        for member in members:
            chain_length[member] = len(members)

    line_offsets = _byte_offset_index(code)
    usages: list[ApiUsage] = []
    for call in calls:
        segments = _dotted_segments(call.func, aliases)
        if not segments:
            continue
        name = ".".join(segments)
        start = line_offsets[call.lineno - 1] + call.col_offset
        end = line_offsets[call.end_lineno - 1] + call.end_col_offset
        usages.append(ApiUsage(name, chain_length[call], (start, end)))
    return usages


def extract_api_usages(code: str, catalog: "ApiCatalog | None" = None) -> set[str]:
    """Deduplicated qualified names of the API calls in ``code``.

    Import aliases are resolved; unresolved receivers keep their surface
    spelling. Calls in method chains longer than three links are dropped,
    as are dunder and `c.`-prefixed names. With a catalog, only names the
    catalog knows are returned.
    """
    names = set()
    for usage in extract_usage_records(code):
        if usage.chain_length > MAX_CHAIN_LENGTH:
            continue
        if name_is_banned(usage.qualified_name):
            continue
        names.add(usage.qualified_name)
    if catalog is not None:
        names &= catalog.names()
    return names


_COUNTED_LOOPS = (ast.For, ast.AsyncFor, ast.While)


def cyclomatic_complexity(code: str) -> int:
    """Module-level count of linearly independent paths.

    1 + one per if/elif, conditional expression, loop, except handler,
    boolean operator occurrence, comprehension for clause, and
    comprehension if clause.
    """
    try:
        tree = ast.parse(code)
    except (SyntaxError, ValueError) as exc:
        raise ValueError(f"cannot score unparseable code: {exc}") from exc
    count = 1
    for node in ast.walk(tree):
        if isinstance(node, (ast.If, ast.IfExp)):
            count += 1
        elif isinstance(node, _COUNTED_LOOPS):
            count += 1
        elif isinstance(node, ast.ExceptHandler):
            count += 1
        elif isinstance(node, ast.BoolOp):
            count += len(node.values) - 1
        elif isinstance(node, ast.comprehension):
            count += 1 + len(node.ifs)
    return count


def annotate_corpus(corpus: "Corpus", catalog: "ApiCatalog | None" = None) -> None:
    """Populate api_set in place for every example that parses.

    Examples failing the syntax check get an empty api_set; filter first
    if that matters.
    """
    for ex in corpus:
        if syntax_check(ex.code):
            ex.api_set = extract_api_usages(ex.code, catalog)
        else:
            ex.api_set = set()


def export_api_stats(corpus: "Corpus", path: str | Path) -> None:
    """Write per-example API stats JSONL: {id, apis, length_tokens}."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for ex in corpus:
            fh.write(
                json.dumps(
                    {"id": ex.id, "apis": sorted(ex.api_set), "length_tokens": ex.length_tokens},
                    sort_keys=True,
                )
                + "\n"
            )


def load_api_stats(path: str | Path) -> list[dict]:
    """Read api stats JSONL rows back as dicts."""
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows
