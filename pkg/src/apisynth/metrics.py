"""Evaluation formulas: Pass@k, CodeBLEU, Silhouette, Calinski-Harabasz.

Pass@k here is the literal product form: a problem scores 1 only when all
k of its solutions pass, which differs from the common unbiased
combinatorial estimator.

CodeBLEU combines four equally weighted components: plain and
keyword-weighted 4-gram BLEU over toolkit tokens, an AST subtree match
with identifiers and literals normalized away, and a def-use dataflow
match with variables renamed by first occurrence.
"""

from __future__ import annotations

import ast
import keyword
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import tokenize

KEYWORD_WEIGHT = 5.0
_NGRAM_MAX = 4


# ---------------------------------------------------------------------------
# Pass@k
# ---------------------------------------------------------------------------


def pass_at_k(rows: list[list[bool]], k: int) -> float:
    """Mean over problems of the product of the first k pass indicators."""
    if not rows:
        raise ValueError("pass matrix must have at least one problem row")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    short = [i for i, row in enumerate(rows) if len(row) < k]
    if short:
        raise ValueError(f"rows {short} have fewer than k={k} solutions")
    return sum(1.0 if all(row[:k]) else 0.0 for row in rows) / len(rows)


# ---------------------------------------------------------------------------
# CodeBLEU
# ---------------------------------------------------------------------------


@dataclass
class CodeBleuWeights:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.25
    delta: float = 0.25

    def __post_init__(self) -> None:
        parts = (self.alpha, self.beta, self.gamma, self.delta)
        if any(w < 0 for w in parts):
            raise ValueError("component weights must be nonnegative")
        if abs(sum(parts) - 1.0) > 1e-12:
            raise ValueError(f"component weights must sum to 1, got {sum(parts)}")


def _token_weight(token: str) -> float:
    return KEYWORD_WEIGHT if keyword.iskeyword(token) else 1.0


def _ngram_precisions(
    cand: list[str], ref: list[str], weighted: bool
) -> list[float]:
    precisions = []
    for n in range(1, _NGRAM_MAX + 1):
        cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
        ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
        if weighted:
            # an n-gram weighs the mean of its token weights
            def w(gram: tuple[str, ...]) -> float:
                return sum(_token_weight(t) for t in gram) / len(gram)
        else:
            def w(gram: tuple[str, ...]) -> float:
                return 1.0
        total = sum(count * w(g) for g, count in cand_grams.items())
        matched = sum(min(count, ref_grams[g]) * w(g) for g, count in cand_grams.items())
        if total == 0:
            precisions.append(1.0)  # no n-grams of this order to mismatch
        elif matched == 0 and n >= 2:
            precisions.append(1.0 / (total + 1.0))  # +1/+1 smoothing
        else:
            precisions.append(matched / total)
    return precisions


def _bleu(cand: list[str], ref: list[str], weighted: bool) -> float:
    if not cand:
        return 1.0 if not ref else 0.0
    precisions = _ngram_precisions(cand, ref, weighted)
    if any(p == 0 for p in precisions):
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / _NGRAM_MAX
    brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
    return brevity * math.exp(log_mean)


def _subtree_signature(node: ast.AST) -> str:
    children = ",".join(_subtree_signature(c) for c in ast.iter_child_nodes(node))
    return f"{type(node).__name__}({children})"


def _subtree_multiset(tree: ast.AST) -> Counter[str]:
    # only subtrees of height >= 2, i.e. nodes with at least one child node;
    # identifier and literal payloads are dropped by the signature itself
    sigs: Counter[str] = Counter()
    for node in ast.walk(tree):
        if any(True for _ in ast.iter_child_nodes(node)):
            sigs[_subtree_signature(node)] += 1
    return sigs


def _ast_score(cand_tree: ast.AST, ref_tree: ast.AST) -> float:
    cand = _subtree_multiset(cand_tree)
    if not cand:
        return 1.0
    ref = _subtree_multiset(ref_tree)
    matched = sum(min(count, ref[sig]) for sig, count in cand.items())
    return matched / sum(cand.values())


class _DataflowVisitor(ast.NodeVisitor):
    """Def-use edges: each variable load pairs with its nearest preceding
    store in the same scope. Variables are renamed v0, v1, ... by first
    occurrence so spelling differences do not matter."""

    def __init__(self) -> None:
        self.norm: dict[str, str] = {}
        self.scopes: list[dict[str, int]] = [{}]
        self.edges: Counter[tuple[str, int]] = Counter()

    def _normalize(self, name: str) -> str:
        if name not in self.norm:
            self.norm[name] = f"v{len(self.norm)}"
        return self.norm[name]

    def visit_FunctionDef(self, node: ast.FunctionDef) -> None:
        self.scopes.append({})
        for arg in node.args.args:
            self._store(arg.arg)
        for stmt in node.body:
            self.visit(stmt)
        self.scopes.pop()

    visit_AsyncFunctionDef = visit_FunctionDef  # type: ignore[assignment]

    def _store(self, name: str) -> None:
        self._normalize(name)
        self.scopes[-1][name] = self.scopes[-1].get(name, 0) + 1

    def visit_Assign(self, node: ast.Assign) -> None:
        self.visit(node.value)  # uses bind to the previous definition
        for target in node.targets:
            self.visit(target)

    def visit_AugAssign(self, node: ast.AugAssign) -> None:
        self.visit(node.value)
        if isinstance(node.target, ast.Name):
            # target is read then written
            self._load(node.target.id)
            self._store(node.target.id)
        else:
            self.visit(node.target)

    def _load(self, name: str) -> None:
        ordinal = self.scopes[-1].get(name, 0)
        if ordinal > 0:
            self.edges[(self._normalize(name), ordinal)] += 1

    def visit_Name(self, node: ast.Name) -> None:
        if isinstance(node.ctx, ast.Store):
            self._store(node.id)
        elif isinstance(node.ctx, ast.Load):
            self._load(node.id)


def _dataflow_edges(tree: ast.AST) -> Counter[tuple[str, int]]:
    visitor = _DataflowVisitor()
    visitor.visit(tree)
    return visitor.edges


def _df_score(cand_tree: ast.AST, ref_tree: ast.AST) -> float:
    cand = _dataflow_edges(cand_tree)
    ref = _dataflow_edges(ref_tree)
    if not cand:
        return 1.0 if not ref else 0.0
    matched = sum(min(count, ref[edge]) for edge, count in cand.items())
    return matched / sum(cand.values())


def code_bleu(candidate: str, reference: str, weights: CodeBleuWeights | None = None) -> float:
    """alpha*BLEU + beta*weighted_BLEU + gamma*AST + delta*dataflow.

    The AST and dataflow components score 0 when either side fails to
    parse.
    """
    weights = weights or CodeBleuWeights()
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    bleu = _bleu(cand_tokens, ref_tokens, weighted=False)
    weighted_bleu = _bleu(cand_tokens, ref_tokens, weighted=True)
    try:
        cand_tree = ast.parse(candidate)
        ref_tree = ast.parse(reference)
    except (SyntaxError, ValueError):
        ast_score = 0.0
        df_score = 0.0
    else:
        ast_score = _ast_score(cand_tree, ref_tree)
        df_score = _df_score(cand_tree, ref_tree)
    return (
        weights.alpha * bleu
        + weights.beta * weighted_bleu
        + weights.gamma * ast_score
        + weights.delta * df_score
    )


# ---------------------------------------------------------------------------
# Cluster quality indices
# ---------------------------------------------------------------------------


@dataclass
class LabeledPoints:
    points: list[list[float]]
    labels: list[int]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.labels):
            raise ValueError("points and labels must align")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.points, dtype=float), np.asarray(self.labels)


def silhouette(data: LabeledPoints) -> float:
    """Mean of (b - a) / max(a, b) over points, Euclidean distances.

    Points in singleton clusters score 0, as do points with a == b == 0.
    """
    x, labels = data.as_arrays()
    unique = np.unique(labels)
    if len(unique) < 2:
        raise ValueError("silhouette needs at least two clusters")
    dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(len(x))
    for i in range(len(x)):
        same = labels == labels[i]
        n_same = same.sum()
        if n_same <= 1:
            scores[i] = 0.0
            continue
        a = dist[i, same].sum() / (n_same - 1)
        b = min(dist[i, labels == other].mean() for other in unique if other != labels[i])
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


def calinski_harabasz(data: LabeledPoints) -> float:
    """(SSB / (k - 1)) / (SSW / (n - k)) with centroid-based sums of squares."""
    x, labels = data.as_arrays()
    unique = np.unique(labels)
    n, k = len(x), len(unique)
    if k < 2:
        raise ValueError("Calinski-Harabasz needs at least two clusters")
    if n <= k:
        raise ValueError(f"need more points ({n}) than clusters ({k})")
    overall = x.mean(axis=0)
    ssb = 0.0
    ssw = 0.0
    for label in unique:
        members = x[labels == label]
        centroid = members.mean(axis=0)
        ssb += len(members) * float(((centroid - overall) ** 2).sum())
        ssw += float(((members - centroid) ** 2).sum())
    if ssw == 0.0:
        return math.inf
    return (ssb / (k - 1)) / (ssw / (n - k))
