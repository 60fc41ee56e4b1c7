"""Greedy agglomerative learning of a staging.

Starting from the saturated staging, the pair of stages whose merge raises
the log score the most is merged, until no merge helps.  Under ``bdepu`` a
stage's hyperparameters are the sum of its members' edge hyperparameters,
which do not depend on the rest of the staging, so every candidate merge is
scored from the two affected stage terms alone.  The level-based schemes
redistribute mass downstream after a merge and are rescored in full.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import StagingError
from .scoring import METHODS, bd_log_score, bdepu_hyper, hyperparameters, resolve_alpha
from .tree import EdgeCounts, EventTree, StagedTree

__all__ = ["LearnConfig", "MergeRecord", "LearnResult", "ahc_learn", "score_delta"]

SCOPES = ("any-equal-outdegree", "same-level-only")

# merges must gain more than this to be accepted, so rounding noise on a
# neutral merge cannot keep the loop going
MIN_GAIN = 1e-12


@dataclass(frozen=True)
class LearnConfig:
    method: str = "bdepu"
    alpha: float | str = "leaves"
    scope: str | None = None
    square_free: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown scoring method {self.method!r}")
        if self.scope is not None and self.scope not in SCOPES:
            raise ValueError(f"unknown merge scope {self.scope!r}; expected one of {SCOPES}")

    @property
    def effective_scope(self) -> str:
        if self.method != "bdepu":
            return "same-level-only"
        return self.scope or "any-equal-outdegree"


@dataclass(frozen=True)
class MergeRecord:
    stage_a: tuple[str, ...]
    stage_b: tuple[str, ...]
    log_score: float
    gain: float


@dataclass
class LearnResult:
    staged_tree: StagedTree
    log_score: float
    initial_score: float
    history: list[MergeRecord] = field(default_factory=list)

    @property
    def scores(self) -> list[float]:
        return [self.initial_score] + [m.log_score for m in self.history]


def score_delta(
    st: StagedTree,
    counts: EdgeCounts,
    stage_a: int,
    stage_b: int,
    alpha="leaves",
    method: str = "bdepu",
) -> float:
    """Change in the ``bdepu`` log score from merging two stages."""
    if method != "bdepu":
        raise ValueError("score_delta is only local under bdepu; rescore the merged staging instead")
    if stage_a == stage_b:
        raise StagingError("cannot merge a stage with itself")
    if st.outdegree(stage_a) != st.outdegree(stage_b):
        raise StagingError("stages with different out-degrees cannot be merged")
    hyper = bdepu_hyper(st, alpha)
    n = counts.stage_counts(st)
    A = np.stack([hyper.stages[stage_a], hyper.stages[stage_b]])
    N = np.stack([n[stage_a], n[stage_b]])
    return float(_kernels.merge_deltas(A, N)[0, 1])


class _Clusters:
    """Current stages, keyed by the breadth-first index of their first member."""

    def __init__(self, tree: EventTree):
        self.tree = tree
        self.members: dict[int, list[str]] = {tree.position(s): [s] for s in tree.situations}
        self.level = {k: tree.depth(m[0]) for k, m in self.members.items()}
        self.ancestors = {s: set(tree.ancestors(s)) for s in tree.situations}

    def ids(self) -> list[int]:
        return sorted(self.members)

    def staged(self) -> StagedTree:
        return StagedTree(self.tree, [self.members[k] for k in self.ids()])

    def admissible(self, a: int, b: int, scope: str, square_free: bool) -> bool:
        ma, mb = self.members[a], self.members[b]
        if self.tree.outdegree(ma[0]) != self.tree.outdegree(mb[0]):
            return False
        if scope == "same-level-only" and self.level[a] != self.level[b]:
            return False
        if square_free:
            sb = set(mb)
            for x in ma:
                if self.ancestors[x] & sb:
                    return False
            sa = set(ma)
            for y in mb:
                if self.ancestors[y] & sa:
                    return False
        return True

    def merge(self, a: int, b: int) -> None:
        merged = sorted(self.members.pop(a) + self.members.pop(b), key=self.tree.position)
        la, lb = self.level.pop(a), self.level.pop(b)
        key = self.tree.position(merged[0])
        self.members[key] = merged
        self.level[key] = la if la == lb else -1

    def vectors(self, key: int, edge_alpha, counts: EdgeCounts):
        members = self.members[key]
        alpha = np.sum([edge_alpha[s] for s in members], axis=0)
        n = np.sum([[counts[e] for e in self.tree.out_edges(s)] for s in members], axis=0)
        return alpha, n.astype(float)


def _best_local(clusters: _Clusters, edge_alpha, counts: EdgeCounts, cfg: LearnConfig):
    tree = clusters.tree
    ids = clusters.ids()
    groups: dict[int, list[int]] = {}
    for k in ids:
        groups.setdefault(tree.outdegree(clusters.members[k][0]), []).append(k)
    best = None
    for group in groups.values():
        if len(group) < 2:
            continue
        pairs = [clusters.vectors(k, edge_alpha, counts) for k in group]
        A = np.array([p[0] for p in pairs])
        N = np.array([p[1] for p in pairs])
        deltas = _kernels.merge_deltas(A, N)
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = group[i], group[j]
                if not clusters.admissible(a, b, cfg.effective_scope, cfg.square_free):
                    continue
                cand = (deltas[i, j], a, b)
                if best is None or cand[0] > best[0] or (cand[0] == best[0] and (a, b) < best[1:]):
                    best = cand
    return best


def _best_full(clusters: _Clusters, counts: EdgeCounts, cfg: LearnConfig, alpha, current):
    ids = clusters.ids()
    best = None
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if not clusters.admissible(a, b, cfg.effective_scope, cfg.square_free):
                continue
            # same stage order as clusters.staged() after the merge, so the
            # accepted gain is reproduced exactly by the rescore
            merged = sorted(clusters.members[a] + clusters.members[b], key=clusters.tree.position)
            stages = [merged if k == a else clusters.members[k] for k in ids if k != b]
            st = StagedTree(clusters.tree, stages)
            gain = bd_log_score(st, counts, hyperparameters(st, alpha, cfg.method)) - current
            if best is None or gain > best[0]:
                best = (gain, a, b)
    return best


def ahc_learn(tree: EventTree, counts: EdgeCounts, cfg: LearnConfig | None = None) -> LearnResult:
    """Greedy pairwise merging from the saturated staging.

    Ties go to the lexicographically smallest pair of stage ids, where a
    stage's id is the breadth-first index of its first member.
    """
    cfg = cfg or LearnConfig()
    if counts.tree != tree:
        raise StagingError("counts were routed on a different tree")
    alpha = resolve_alpha(tree, cfg.alpha)
    clusters = _Clusters(tree)

    def full_score() -> float:
        st = clusters.staged()
        return bd_log_score(st, counts, hyperparameters(st, alpha, cfg.method))

    current = full_score()
    initial = current
    history = []
    edge_alpha = None
    if cfg.method == "bdepu":
        weight = alpha / tree.num_leaves
        edge_alpha = {s: [weight * tree.n_paths(e) for e in tree.out_edges(s)] for s in tree.situations}

    while True:
        if edge_alpha is not None:
            best = _best_local(clusters, edge_alpha, counts, cfg)
        else:
            best = _best_full(clusters, counts, cfg, alpha, current)
        if best is None or not best[0] > MIN_GAIN:
            break
        _, a, b = best
        ma, mb = tuple(clusters.members[a]), tuple(clusters.members[b])
        clusters.merge(a, b)
        new_score = full_score()
        history.append(MergeRecord(ma, mb, new_score, new_score - current))
        current = new_score
    return LearnResult(clusters.staged(), current, initial, history)
