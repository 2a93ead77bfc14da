"""Keyword-driven Python skeleton generation, validation, and
standardization.

A random keyword list is repaired so dependent keywords have their openers
(an `else` gets an `if`, an `except` gets a `try`, every `try` gets an
`except`, a `return` forces a leading `def`), then an indentation-stack
emitter turns it into concrete code with placeholder conditions and
injected assignments. Drafts failing the syntax check are discarded and
regenerated under a derived seed. Standardization rewrites every injected
statement to <Random Stmt> and every header condition to its
<Keyword Condition> placeholder.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .extractor import syntax_check

VOCABULARY = ("def", "if", "elif", "else", "for", "while", "try", "except", "return", "with")
OPENERS = frozenset({"def", "if", "for", "while", "try", "with"})
DEFAULT_MAX_KEYWORDS = 8
DEPTH_CAP = 4
RETRY_CAP = 100
INDENT = "    "

_COND_POOL = ("c0", "c1", "c2", "c3")
_EXC_POOL = ("e0", "e1", "e2", "e3")
_VAR_POOL = ("x0", "x1", "x2", "x3", "x4", "x5")
_LOOPVAR_POOL = ("i0", "i1", "i2", "i3")
_ITER_POOL = ("r0", "r1", "r2", "r3")
_ARG_POOL = ("a0", "a1", "a2", "a3")


class SkeletonError(RuntimeError):
    """Raised when the retry cap is exhausted; carries the last draft."""

    def __init__(self, message: str, last_draft: str = ""):
        super().__init__(message)
        self.last_draft = last_draft


class _EmitError(Exception):
    pass


@dataclass
class Skeleton:
    keywords: list[str]
    concrete: str
    standardized: str
    seed: int


def repair_keywords(items: list[str]) -> list[str]:
    """Insert the openers dependent keywords need.

    else/elif get a preceding if when no if-chain is open; except gets a
    try when none exists; every try is guaranteed a later except; a return
    anywhere forces def as the first item.
    """
    out: list[str] = []
    avail_if = 0  # if-chains opened and not yet consumed by an else
    open_try = 0
    unsat_try = 0  # trys still lacking an except
    for kw in items:
        if kw in ("elif", "else"):
            if avail_if == 0:
                out.append("if")
                avail_if += 1
            out.append(kw)
            if kw == "else":
                avail_if -= 1
        elif kw == "except":
            if open_try == 0:
                out.append("try")
                open_try += 1
                unsat_try += 1
            out.append(kw)
            if unsat_try > 0:
                unsat_try -= 1
        elif kw == "try":
            out.append(kw)
            open_try += 1
            unsat_try += 1
        elif kw == "if":
            out.append(kw)
            avail_if += 1
        else:
            out.append(kw)
    out.extend(["except"] * unsat_try)
    if "return" in out and out[0] != "def":
        out.insert(0, "def")
    return out


def keywords_are_valid(items: list[str]) -> bool:
    """True when the list is a fixpoint of the repair rules."""
    return (
        len(items) >= 1
        and all(kw in VOCABULARY for kw in items)
        and repair_keywords(items) == items
    )


def sample_keywords(seed: int, max_keywords: int = DEFAULT_MAX_KEYWORDS) -> list[str]:
    """Seeded uniform keyword draw, repaired to satisfy structural pairing.

    Repair can grow the list; over-long results shed trailing drawn
    keywords until the repaired form fits.
    """
    if max_keywords < 1:
        raise ValueError(f"max_keywords must be >= 1, got {max_keywords}")
    rng = random.Random(seed)
    k = rng.randint(1, max_keywords)
    drawn = [rng.choice(VOCABULARY) for _ in range(k)]
    repaired = repair_keywords(drawn)
    while len(repaired) > max_keywords and drawn:
        drawn.pop()
        repaired = repair_keywords(drawn)
    if not repaired:
        repaired = ["def"]
    return repaired


@dataclass
class _Block:
    kind: str  # statement kind: def/if/for/while/try/with
    clause: str  # current clause: kind itself, or elif/else/except
    indent: int
    body_count: int = 0
    has_else: bool = False
    has_except: bool = False


@dataclass
class _Emitter:
    rng: random.Random
    pending: list[str]
    lines: list[str] = field(default_factory=list)
    stack: list[_Block] = field(default_factory=list)
    def_count: int = 0

    # -- text helpers -------------------------------------------------

    def _header(self, kw: str) -> str:
        if kw == "def":
            name = f"f{self.def_count}"
            self.def_count += 1
            return f"def {name}({self.rng.choice(_ARG_POOL)}):"
        if kw in ("if", "elif", "while"):
            return f"{kw} {self.rng.choice(_COND_POOL)}:"
        if kw == "for":
            return f"for {self.rng.choice(_LOOPVAR_POOL)} in {self.rng.choice(_ITER_POOL)}:"
        if kw == "with":
            return f"with {self.rng.choice(_COND_POOL)}:"
        if kw == "except":
            return f"except {self.rng.choice(_EXC_POOL)}:"
        if kw in ("else", "try"):
            return f"{kw}:"
        raise _EmitError(f"no header form for keyword {kw!r}")

    def _write(self, text: str, indent: int) -> None:
        self.lines.append(INDENT * indent + text)

    def inject(self, count: int) -> None:
        indent = self.stack[-1].indent + 1 if self.stack else 0
        for _ in range(count):
            self._write(f"{self.rng.choice(_VAR_POOL)} = {self.rng.randint(0, 9)}", indent)
            if self.stack:
                self.stack[-1].body_count += 1

    def _ensure_body(self, block: _Block) -> None:
        if block.body_count == 0:
            self._write(f"{self.rng.choice(_VAR_POOL)} = {self.rng.randint(0, 9)}", block.indent + 1)
            block.body_count += 1

    def _take_pending(self, kinds: tuple[str, ...]) -> str | None:
        for i, kw in enumerate(self.pending):
            if kw in kinds:
                return self.pending.pop(i)
        return None

    def _take_pending_before(self, kinds: tuple[str, ...], barrier: str) -> str | None:
        """First pending keyword of the wanted kinds that occurs before any
        pending ``barrier`` opener; such a keyword cannot wait for a future
        opener and must attach now."""
        for i, kw in enumerate(self.pending):
            if kw == barrier:
                return None
            if kw in kinds:
                return self.pending.pop(i)
        return None

    # -- structure ----------------------------------------------------

    def _start_clause(self, block: _Block, kw: str) -> None:
        """Open a new elif/else/except clause on an existing block."""
        self._ensure_body(block)
        self._write(self._header(kw), block.indent)
        block.clause = kw
        block.body_count = 0
        if kw == "else":
            block.has_else = True
        if kw == "except":
            block.has_except = True

    def force_pop(self) -> None:
        """Close the top block, first discharging anything that would be
        left with no attachment point: an unsatisfied try consumes a
        pending except; the last try absorbs pending excepts not served by
        a later try; a popped if-chain absorbs pending elif/else not served
        by a later if; a popped def absorbs pending returns."""
        top = self.stack[-1]
        if top.kind == "try":
            if not top.has_except:
                kw = self._take_pending(("except",))
                if kw is None:
                    raise _EmitError("try block has no except to close it")
                self._start_clause(top, kw)
            if not any(b.kind == "try" for b in self.stack[:-1]):
                while self._take_pending_before(("except",), barrier="try"):
                    self._start_clause(top, "except")
        if top.kind == "if":
            while not top.has_else:
                kw = self._take_pending_before(("elif", "else"), barrier="if")
                if kw is None:
                    break
                self._start_clause(top, kw)
        if top.kind == "def":
            while self._take_pending(("return",)):
                self.emit_return()
        self._ensure_body(top)
        self.stack.pop()

    def _pop_to(self, depth: int) -> None:
        while len(self.stack) > depth + 1:
            self.force_pop()

    def _sibling_safe(self) -> bool:
        top = self.stack[-1]
        if top.kind == "try" and (not top.has_except or "except" in self.pending):
            return False
        if top.kind == "if" and not top.has_else and any(
            kw in ("elif", "else") for kw in self.pending
        ):
            return False
        if top.kind == "def" and "return" in self.pending:
            return False
        return True

    def place_opener(self, kw: str) -> None:
        if self.stack:
            can_nest = len(self.stack) < DEPTH_CAP
            can_sibling = self._sibling_safe()
            if can_nest and can_sibling:
                nest = self.rng.random() < 0.5
            elif can_sibling:
                nest = False
            else:
                nest = True  # validity beats the depth cap
            if not nest:
                self.force_pop()
        indent = len(self.stack)
        self._write(self._header(kw), indent)
        if self.stack:
            self.stack[-1].body_count += 1
        self.stack.append(_Block(kind=kw, clause=kw, indent=indent))

    def attach_chain_clause(self, kw: str) -> None:
        for idx in range(len(self.stack) - 1, -1, -1):
            block = self.stack[idx]
            if block.kind == "if" and not block.has_else:
                self._pop_to(idx)
                self._start_clause(block, kw)
                return
        raise _EmitError(f"no open if-chain for {kw!r}")

    def attach_except(self) -> None:
        trys = [i for i, b in enumerate(self.stack) if b.kind == "try"]
        if not trys:
            raise _EmitError("no try block for except")
        unsat = [i for i in trys if not self.stack[i].has_except]
        idx = max(unsat) if unsat else max(trys)
        self._pop_to(idx)
        self._start_clause(self.stack[idx], "except")

    def emit_return(self) -> None:
        if not any(b.kind == "def" for b in self.stack):
            raise _EmitError("return outside any def")
        top = self.stack[-1]
        self._write(f"return {self.rng.randint(0, 9)}", top.indent + 1)
        top.body_count += 1

    def handle(self, kw: str) -> None:
        if kw in OPENERS:
            self.place_opener(kw)
        elif kw in ("elif", "else"):
            self.attach_chain_clause(kw)
        elif kw == "except":
            self.attach_except()
        elif kw == "return":
            self.emit_return()
        else:
            raise _EmitError(f"unknown keyword {kw!r}")

    def run(self) -> str:
        while self.pending:
            kw = self.pending.pop(0)
            self.handle(kw)
            self.inject(self.rng.randint(0, 2))
        while self.stack:
            self.force_pop()
        return "\n".join(self.lines) + "\n"


def _emit(keywords: list[str], rng: random.Random) -> str:
    return _Emitter(rng=rng, pending=list(keywords)).run()


def generate(keywords: list[str], seed: int, max_retries: int = RETRY_CAP) -> Skeleton:
    """Turn a keyword list into a syntactically valid skeleton.

    Invalid drafts are discarded and regenerated under the next derived
    seed; the keyword multiset of the result always equals the input.
    """
    if not keywords_are_valid(keywords):
        raise ValueError(f"keyword list violates pairing constraints: {keywords}")
    last_draft = ""
    for attempt in range(max_retries):
        rng = random.Random(f"{seed}:{attempt}")
        try:
            code = _emit(keywords, rng)
        except _EmitError:
            continue
        if syntax_check(code):
            return Skeleton(
                keywords=list(keywords),
                concrete=code,
                standardized=standardize_text(code),
                seed=seed,
            )
        last_draft = code
    raise SkeletonError(
        f"no valid skeleton for {keywords} after {max_retries} attempts", last_draft
    )


_LINE_RULES: list[tuple[re.Pattern[str], str]] = [
    (re.compile(r"^(\s*)def\s+\w+\s*\(.*\)\s*:\s*$"), r"\1def <Func>(<Args>):"),
    (re.compile(r"^(\s*)elif\b.*:\s*$"), r"\1elif <Elif Condition>:"),
    (re.compile(r"^(\s*)if\b.*:\s*$"), r"\1if <If Condition>:"),
    (re.compile(r"^(\s*)while\b.*:\s*$"), r"\1while <While Condition>:"),
    (re.compile(r"^(\s*)for\b.*:\s*$"), r"\1for <For Condition>:"),
    (re.compile(r"^(\s*)except\b.*:\s*$"), r"\1except <Except Condition>:"),
    (re.compile(r"^(\s*)with\b.*:\s*$"), r"\1with <With Condition>:"),
    (re.compile(r"^(\s*)return\b.*$"), r"\1return <Return Value>"),
    (re.compile(r"^(\s*)[A-Za-z_]\w*\s*=\s*.+$"), r"\1<Random Stmt>"),
]


def standardize_text(concrete: str) -> str:
    """Replace injected statements and header conditions with placeholders.

    Idempotent: already-standardized text maps to itself.
    """
    out_lines = []
    for line in concrete.split("\n"):
        for pattern, replacement in _LINE_RULES:
            new_line, hits = pattern.subn(replacement, line)
            if hits:
                line = new_line
                break
        out_lines.append(line)
    return "\n".join(out_lines)


def standardize(skeleton: Skeleton | str) -> str:
    """Standardized placeholder form of a skeleton (or raw skeleton text)."""
    if isinstance(skeleton, Skeleton):
        return standardize_text(skeleton.concrete)
    return standardize_text(skeleton)


_KEYWORD_RE = re.compile(r"\b(" + "|".join(VOCABULARY) + r")\b")


def keyword_multiset(code: str) -> dict[str, int]:
    """Occurrences of vocabulary keywords in code; identifiers never collide
    with keywords in emitted skeletons."""
    counts: dict[str, int] = {}
    for match in _KEYWORD_RE.finditer(code):
        counts[match.group(1)] = counts.get(match.group(1), 0) + 1
    return counts


def save_skeletons(skeletons: list[Skeleton], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for sk in skeletons:
            fh.write(
                json.dumps(
                    {
                        "seed": sk.seed,
                        "keywords": sk.keywords,
                        "concrete": sk.concrete,
                        "standardized": sk.standardized,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_skeletons(path: str | Path) -> list[Skeleton]:
    skeletons = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            skeletons.append(
                Skeleton(
                    keywords=row["keywords"],
                    concrete=row["concrete"],
                    standardized=row["standardized"],
                    seed=row["seed"],
                )
            )
    return skeletons
