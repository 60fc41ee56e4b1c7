"""Bayesian Dirichlet scores for staged trees.

Four ways of setting the Dirichlet hyperparameters are provided:

``bdepu``
    Path-uniform: each root-to-leaf path carries weight ``alpha / L`` and an
    edge's hyperparameter is the weight of the paths through it; stage vectors
    sum the member edges.  Score-equivalent under swaps and resizes.
``csbdeu``
    Level-wise forward propagation: a stage receives the hyperparameter mass
    of the edges entering it and splits it evenly over its edges.
``csbdeu-alt1``
    Per level, ``alpha`` is split evenly over the situations, then over each
    situation's edges.
``csbdeu-alt2``
    Per level, ``alpha`` is split evenly over all outgoing edges.

The three level-based schemes require every stage to sit on a single level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import StagingError
from .tree import Dataset, Edge, EdgeCounts, StagedTree, route_record

__all__ = [
    "METHODS",
    "HyperParams",
    "PosteriorParams",
    "resolve_alpha",
    "bdepu_hyper",
    "csbdeu_hyper",
    "csbdeu_alt_hyper",
    "hyperparameters",
    "bd_log_score",
    "sequential_oracle_log_score",
    "stage_posterior",
    "score",
]

METHODS = ("bdepu", "csbdeu", "csbdeu-alt1", "csbdeu-alt2")


@dataclass(frozen=True)
class HyperParams:
    """Per-stage Dirichlet hyperparameters.

    ``stages[j]`` is the vector ``(alpha_j1, ..., alpha_jr)`` of stage ``j``
    of ``staging``; ``edge`` holds the share contributed by each individual
    situation edge, from which the stage vectors were summed.
    """

    stages: tuple[np.ndarray, ...]
    alpha: float
    method: str
    staging: tuple[tuple[str, ...], ...]
    edge: dict[Edge, float] | None = None

    @property
    def totals(self) -> np.ndarray:
        return np.array([v.sum() for v in self.stages])

    def __len__(self) -> int:
        return len(self.stages)


@dataclass(frozen=True)
class PosteriorParams:
    stages: tuple[np.ndarray, ...]


def resolve_alpha(st_or_tree, alpha) -> float:
    """Turn the ``"leaves"`` sentinel into the leaf count ``L``."""
    tree = st_or_tree.tree if isinstance(st_or_tree, StagedTree) else st_or_tree
    if isinstance(alpha, str):
        if alpha != "leaves":
            alpha = float(alpha)
        else:
            if tree.num_leaves == 0 or not tree.situations:
                raise ValueError("alpha='leaves' needs a tree with at least one edge")
            return float(tree.num_leaves)
    alpha = float(alpha)
    if not alpha > 0 or not np.isfinite(alpha):
        raise ValueError(f"alpha must be a positive finite number, got {alpha}")
    return alpha


def _aggregate(st: StagedTree, edge_hyper: dict[Edge, float], alpha, method) -> HyperParams:
    tree = st.tree
    vectors = []
    for members in st.stages:
        acc = np.zeros(tree.outdegree(members[0]))
        for s in members:
            acc += [edge_hyper[e] for e in tree.out_edges(s)]
        vectors.append(acc)
    return HyperParams(tuple(vectors), alpha, method, st.stages, edge_hyper)


def bdepu_hyper(st: StagedTree, alpha) -> HyperParams:
    st.require_valid()
    alpha = resolve_alpha(st, alpha)
    tree = st.tree
    weight = alpha / tree.num_leaves
    edge_hyper = {e: weight * tree.n_paths(e) for e in tree.edges}
    return _aggregate(st, edge_hyper, alpha, "bdepu")


def _level_order(st: StagedTree) -> list[int]:
    levels = []
    for j in range(st.num_stages):
        span = st.stage_levels(j)
        if len(span) > 1:
            raise StagingError(
                f"stage {j} spans levels {sorted(span)}; level-based priors need "
                "every stage on one level"
            )
        levels.append(span.pop())
    return sorted(range(st.num_stages), key=lambda j: (levels[j], j))


def csbdeu_hyper(st: StagedTree, alpha) -> HyperParams:
    st.require_valid()
    alpha = resolve_alpha(st, alpha)
    tree = st.tree
    edge_hyper: dict[Edge, float] = {}
    for j in _level_order(st):
        members = st.stages[j]
        incoming = 0.0
        for s in members:
            e = tree.in_edge(s)
            incoming += alpha if e is None else edge_hyper[e]
        r = tree.outdegree(members[0])
        share = incoming / r / len(members)
        for s in members:
            for e in tree.out_edges(s):
                edge_hyper[e] = share
    return _aggregate(st, edge_hyper, alpha, "csbdeu")


def csbdeu_alt_hyper(st: StagedTree, alpha, variant: str) -> HyperParams:
    """Level-based alternatives: ``variant`` is ``"per-situation"`` or ``"per-edge"``."""
    if variant not in ("per-situation", "per-edge"):
        raise ValueError(f"unknown variant {variant!r}")
    st.require_valid()
    _level_order(st)
    alpha = resolve_alpha(st, alpha)
    tree = st.tree
    situations_at: dict[int, int] = {}
    edges_at: dict[int, int] = {}
    for s in tree.situations:
        d = tree.depth(s)
        situations_at[d] = situations_at.get(d, 0) + 1
        edges_at[d] = edges_at.get(d, 0) + tree.outdegree(s)
    edge_hyper = {}
    for s in tree.situations:
        d = tree.depth(s)
        if variant == "per-situation":
            value = alpha / situations_at[d] / tree.outdegree(s)
        else:
            value = alpha / edges_at[d]
        for e in tree.out_edges(s):
            edge_hyper[e] = value
    method = "csbdeu-alt1" if variant == "per-situation" else "csbdeu-alt2"
    return _aggregate(st, edge_hyper, alpha, method)


def hyperparameters(st: StagedTree, alpha, method: str = "bdepu") -> HyperParams:
    if method == "bdepu":
        return bdepu_hyper(st, alpha)
    if method == "csbdeu":
        return csbdeu_hyper(st, alpha)
    if method == "csbdeu-alt1":
        return csbdeu_alt_hyper(st, alpha, "per-situation")
    if method == "csbdeu-alt2":
        return csbdeu_alt_hyper(st, alpha, "per-edge")
    raise ValueError(f"unknown scoring method {method!r}; expected one of {METHODS}")


def _check_shape(st: StagedTree, hyper: HyperParams) -> None:
    if tuple(hyper.staging) != st.stages:
        raise StagingError("hyperparameters were computed for a different staging")
    for j, v in enumerate(hyper.stages):
        if len(v) != st.outdegree(j):
            raise StagingError(f"hyperparameter vector of stage {j} has wrong length")
        if np.any(v <= 0):
            raise StagingError(f"hyperparameters of stage {j} must be positive")


def _flatten(vectors: Sequence[np.ndarray]):
    offsets = np.zeros(len(vectors) + 1, dtype=np.int64)
    np.cumsum([len(v) for v in vectors], out=offsets[1:])
    flat = np.concatenate(vectors) if vectors else np.zeros(0)
    return flat.astype(np.float64), offsets


def bd_log_score(st: StagedTree, counts: EdgeCounts, hyper: HyperParams) -> float:
    """Natural log of the BD metric, summed stage by stage via log-gamma."""
    _check_shape(st, hyper)
    if counts.tree != st.tree:
        raise StagingError("counts were routed on a different tree")
    alpha, offsets = _flatten(hyper.stages)
    n, _ = _flatten(counts.stage_counts(st))
    return float(_kernels.bd_log_score_flat(alpha, n, offsets))


def sequential_oracle_log_score(st: StagedTree, data: Dataset, hyper: HyperParams) -> float:
    """Log marginal likelihood as a running product of posterior predictives.

    Each edge traversal is predicted from the stage's Dirichlet updated with
    every traversal seen so far, then added to the tallies.
    """
    _check_shape(st, hyper)
    tree = st.tree
    alpha, offsets = _flatten(hyper.stages)
    flat_index = {}
    for j, members in enumerate(st.stages):
        for s in members:
            for k, e in enumerate(tree.out_edges(s)):
                flat_index[e] = offsets[j] + k
    edge_stage = np.repeat(np.arange(st.num_stages), np.diff(offsets)).astype(np.int64)
    stage_alpha = np.array([v.sum() for v in hyper.stages], dtype=np.float64)

    steps = []
    record_offsets = [0]
    cache = {}
    for i, record in enumerate(data.records):
        path = cache.get(record)
        if path is None:
            path = [flat_index[e] for e in route_record(tree, record, i)]
            cache[record] = path
        steps.extend(path)
        record_offsets.append(len(steps))
    return float(
        _kernels.sequential_log_score_flat(
            alpha,
            edge_stage,
            stage_alpha,
            np.asarray(steps, dtype=np.int64),
            np.asarray(record_offsets, dtype=np.int64),
        )
    )


def stage_posterior(hyper: HyperParams, counts) -> PosteriorParams:
    """Dirichlet posterior parameters ``alpha_jk + n_jk`` for every stage.

    ``counts`` is either an :class:`EdgeCounts` (aggregated over the
    hyperparameters' staging) or a sequence of per-stage count vectors.
    """
    if isinstance(counts, EdgeCounts):
        st = StagedTree(counts.tree, hyper.staging)
        counts = counts.stage_counts(st)
    counts = [np.asarray(c, dtype=float) for c in counts]
    if len(counts) != len(hyper.stages):
        raise StagingError("counts and hyperparameters have different numbers of stages")
    out = []
    for j, (a, n) in enumerate(zip(hyper.stages, counts)):
        if a.shape != n.shape:
            raise StagingError(f"stage {j}: {len(a)} hyperparameters but {len(n)} counts")
        out.append(a + n)
    return PosteriorParams(tuple(out))


def score(st: StagedTree, counts: EdgeCounts, alpha="leaves", method: str = "bdepu") -> float:
    """Convenience: hyperparameters and log score in one call."""
    return bd_log_score(st, counts, hyperparameters(st, alpha, method))
