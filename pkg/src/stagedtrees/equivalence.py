"""Swap and resize operators, staged-tree isomorphism and bounded search.

Operators are pure: they return a new :class:`StagedTree` together with a
:class:`TransformTrace`.  Leaves and every surviving situation keep their
node ids, so a leaf of the source corresponds to the leaf with the same id
in the result; :func:`map_dataset` uses that to rewrite records so that the
original sample can be routed through the transformed tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import OperatorError
from .tree import Dataset, Edge, EventTree, StagedTree, join_tokens, route_record

__all__ = [
    "Twin",
    "ResizeSpec",
    "TransformStep",
    "TransformTrace",
    "find_twins",
    "swap",
    "find_contractions",
    "resize_contract",
    "staged_tree_isomorphic",
    "canonical_form",
    "canonical_key",
    "bounded_equivalence_search",
    "map_dataset",
    "normalize_staging",
]


@dataclass(frozen=True)
class Twin:
    """Depth-two subtree whose root's children all share one stage.

    ``grid[k][t]`` is the node reached from ``root`` by edge ``k`` then ``t``.
    """

    root: str
    stage: int
    r1: int
    r2: int
    children: tuple[str, ...]
    grid: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class ResizeSpec:
    """Contraction site: stage ``stage`` (members ``members``) and edge set.

    For each ``k`` in ``edges`` the children of the members along edge ``k``
    make up exactly one stage (``child_stages``) that occurs nowhere else.
    With ``deep`` set, conditionally saturated stages further down are folded
    in first, one level at a time, so the whole family collapses into florets.
    """

    stage: int
    members: tuple[str, ...]
    edges: tuple[int, ...]
    child_stages: tuple[int, ...]
    deep: bool = False


@dataclass(frozen=True)
class TransformStep:
    kind: str
    params: dict
    node_map: dict

    def describe(self) -> str:
        if self.kind == "swap":
            return f"swap twin_root={self.params['twin_root']}"
        members = ",".join(self.params["stage_members"])
        edges = ",".join(str(k) for k in self.params["edges"])
        deep = " deep" if self.params.get("deep") else ""
        return f"resize stage=[{members}] edges={edges}{deep}"


@dataclass
class TransformTrace:
    """Ordered record of operator applications from ``source`` to ``target``.

    ``relabeling`` maps nodes of the final transformed tree onto the nodes of
    ``target`` when the trace was produced by a search against another tree;
    it is ``None`` when ``target`` is the transformed tree itself.
    """

    source: StagedTree
    steps: list[TransformStep] = field(default_factory=list)
    target: StagedTree | None = None
    relabeling: dict | None = None

    @property
    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)

    def replay(self, st: StagedTree | None = None) -> StagedTree:
        """Re-apply every step, starting from ``st`` (default ``source``)."""
        current = self.source if st is None else st
        for step in self.steps:
            current = _apply_step(current, step)
        return current

    def intermediate_trees(self) -> list[StagedTree]:
        trees = [self.source]
        for step in self.steps:
            trees.append(_apply_step(trees[-1], step))
        return trees

    def leaf_map(self) -> dict:
        final = self.replay()
        mapping = {l: l for l in final.tree.leaves}
        if self.relabeling is not None:
            mapping = {l: self.relabeling[l] for l in mapping}
        return mapping

    def map_dataset(self, data: Dataset) -> Dataset:
        """Rewrite ``data`` (routable on ``source``) for the trace's target."""
        final = self.target if self.target is not None else self.replay()
        return map_dataset(data, self.source, final, self.leaf_map())

    def then(self, other: "TransformTrace") -> "TransformTrace":
        return TransformTrace(self.source, self.steps + other.steps, other.target)


def _apply_step(st: StagedTree, step: TransformStep) -> StagedTree:
    if step.kind == "swap":
        root = step.params["twin_root"]
        twin = _twin_at(st, root)
        if twin is None:
            raise OperatorError(f"no twin at {root!r} while replaying")
        return swap(st, twin)[0]
    members = tuple(step.params["stage_members"])
    spec = _spec_for(st, members, step.params["edges"], step.params.get("deep", False))
    return resize_contract(st, spec)[0]


# -- helpers ----------------------------------------------------------------


def normalize_staging(tree: EventTree, stages, theta=None) -> StagedTree:
    """Members in breadth-first order; stages ordered by their first member."""
    stages = [sorted(m, key=tree.position) for m in stages]
    order = sorted(range(len(stages)), key=lambda j: tree.position(stages[j][0]))
    new_theta = None if theta is None else [theta[j] for j in order]
    return StagedTree(tree, [stages[j] for j in order], new_theta)


def _fresh_ids(tree: EventTree, n: int, prefix: str = "s") -> list[str]:
    # numbered past every existing id so that ids of removed nodes are not reused
    used = set(tree.nodes)
    top = -1
    for node in used:
        if node.startswith(prefix) and node[len(prefix):].isdigit():
            top = max(top, int(node[len(prefix):]))
    out = []
    i = top + 1
    while len(out) < n:
        cand = f"{prefix}{i}"
        if cand not in used:
            out.append(cand)
        i += 1
    return out


# -- swap -------------------------------------------------------------------


def _twin_at(st: StagedTree, s0: str) -> Twin | None:
    tree = st.tree
    if s0 not in tree or tree.is_leaf(s0):
        return None
    kids = tree.children(s0)
    if len(kids) < 2 or any(tree.is_leaf(c) for c in kids):
        return None
    stages = {st.stage_of(c) for c in kids}
    if len(stages) != 1:
        return None
    u = stages.pop()
    if u == st.stage_of(s0):
        return None
    grid = tuple(tree.children(c) for c in kids)
    return Twin(s0, u, len(kids), len(grid[0]), kids, grid)


def find_twins(st: StagedTree) -> list[Twin]:
    """Every twin, in breadth-first order of the twin root.

    Roots with a single child are skipped: transposing a one-edge level only
    inserts unary nodes.
    """
    twins = []
    for s in st.tree.situations:
        t = _twin_at(st, s)
        if t is not None:
            twins.append(t)
    return twins


def swap(st: StagedTree, twin: Twin) -> tuple[StagedTree, TransformTrace]:
    """Transpose the two levels of ``twin``.

    The twin root takes over the children's stage, and the new children join
    the stage the root was in.  Members of either stage outside the twin are
    left where they are.
    """
    current = _twin_at(st, twin.root)
    if current is None or current.children != twin.children or current.grid != twin.grid:
        raise OperatorError(f"twin at {twin.root!r} is not valid in this tree")
    tree = st.tree
    s0 = twin.root
    root_edges = tree.out_edges(s0)
    child_edges = tree.out_edges(twin.children[0])
    new_kids = _fresh_ids(tree, twin.r2)
    old_kids = set(twin.children)

    edges = [e for e in tree.edges if e.source != s0 and e.source not in old_kids]
    for t in range(twin.r2):
        edges.append(Edge(s0, new_kids[t], child_edges[t].label))
    for t in range(twin.r2):
        for k in range(twin.r1):
            edges.append(Edge(new_kids[t], twin.grid[k][t], root_edges[k].label))
    new_tree = EventTree(tree.root, edges)

    u = twin.stage
    s0_stage = st.stage_of(s0)
    stages = []
    for j, members in enumerate(st.stages):
        if j == u:
            members = [m for m in members if m not in old_kids] + [s0]
        elif j == s0_stage:
            members = [m for m in members if m != s0] + new_kids
        stages.append(list(members))
    result = normalize_staging(new_tree, stages, st.theta)

    kept = {n: n for n in tree.nodes if n not in old_kids}
    step = TransformStep(
        "swap",
        {
            "twin_root": s0,
            "r1": twin.r1,
            "r2": twin.r2,
            "original_labels": {
                "root": [e.label for e in root_edges],
                "children": {c: [e.label for e in tree.out_edges(c)] for c in twin.children},
            },
        },
        kept,
    )
    return result, TransformTrace(st, [step], result)


# -- resize -----------------------------------------------------------------


def _valid_edges(st: StagedTree, j: int) -> list[tuple[int, int]]:
    """(edge index, child stage) pairs eligible for contraction at stage ``j``."""
    tree = st.tree
    members = st.stages[j]
    out = []
    for k in range(st.outdegree(j)):
        kids = [tree.out_edges(s)[k].target for s in members]
        if any(tree.is_leaf(c) for c in kids):
            continue
        ws = {st.stage_of(c) for c in kids}
        if len(ws) != 1:
            continue
        w = ws.pop()
        if w == j or set(st.stages[w]) != set(kids):
            continue
        out.append((k, w))
    return out


def find_contractions(st: StagedTree, deep: bool = False) -> list[ResizeSpec]:
    """All stages with a nonempty maximal set of contractible edges."""
    specs = []
    for j, members in enumerate(st.stages):
        valid = _valid_edges(st, j)
        if valid:
            specs.append(
                ResizeSpec(
                    j,
                    members,
                    tuple(k for k, _ in valid),
                    tuple(w for _, w in valid),
                    deep,
                )
            )
    return specs


def _spec_for(st: StagedTree, members, edges=None, deep=False) -> ResizeSpec:
    members = tuple(members)
    try:
        j = st.stage_of(members[0])
    except KeyError:
        raise OperatorError(f"{members[0]!r} is not a situation of this tree") from None
    if set(st.stages[j]) != set(members):
        raise OperatorError(f"{list(members)} is not a stage of this tree")
    valid = dict(_valid_edges(st, j))
    if edges is None:
        edges = tuple(valid)
    edges = tuple(edges)
    if not edges:
        raise OperatorError(f"stage {j} has no contractible edges")
    bad = [k for k in edges if k not in valid]
    if bad:
        raise OperatorError(f"edges {bad} of stage {j} are not conditionally saturated")
    return ResizeSpec(j, st.stages[j], edges, tuple(valid[k] for k in edges), deep)


def _contract_once(st: StagedTree, members, K) -> tuple[StagedTree, dict]:
    tree = st.tree
    K = set(K)
    removed = set()
    florets = {}
    theta = None if st.theta is None else list(st.theta)
    j = st.stage_of(members[0])
    new_theta_j = []
    for s in members:
        out = []
        for k, e in enumerate(tree.out_edges(s)):
            if k in K:
                c = e.target
                removed.add(c)
                for f in tree.out_edges(c):
                    out.append(Edge(s, f.target, join_tokens(e.tokens + f.tokens)))
            else:
                out.append(e)
        florets[s] = out
    if theta is not None:
        first = members[0]
        for k, e in enumerate(tree.out_edges(first)):
            if k in K:
                w = st.stage_of(e.target)
                new_theta_j.extend(theta[j][k] * theta[w])
            else:
                new_theta_j.append(theta[j][k])
        theta[j] = np.asarray(new_theta_j)

    edges = [e for e in tree.edges if e.source not in florets and e.source not in removed]
    for s in members:
        edges.extend(florets[s])
    new_tree = EventTree(tree.root, edges)
    dropped = {j2 for j2, m in enumerate(st.stages) if set(m) <= removed}
    stages = [m for j2, m in enumerate(st.stages) if j2 not in dropped]
    if theta is not None:
        theta = [t for j2, t in enumerate(theta) if j2 not in dropped]
    result = normalize_staging(new_tree, stages, theta)
    kept = {n: n for n in tree.nodes if n not in removed}
    return result, kept


def resize_contract(st: StagedTree, spec: ResizeSpec) -> tuple[StagedTree, TransformTrace]:
    """Contract the florets below ``spec.edges`` into the stage's own florets.

    Each edge ``k`` of a member is replaced, in place, by one edge per
    grandchild with the concatenated label.  The members stay one stage;
    the child stages disappear.
    """
    spec = _spec_for(st, spec.members, spec.edges, spec.deep)
    params = {
        "stage_members": list(spec.members),
        "edges": list(spec.edges),
        "deep": spec.deep,
        "child_stages": [list(st.stages[w]) for w in spec.child_stages],
    }
    current = st
    if spec.deep:
        current = _contract_deep_children(current, spec)
    result, kept = _contract_once(current, spec.members, spec.edges)
    kept = {n: n for n in st.tree.nodes if n in result.tree}
    step = TransformStep("resize", params, kept)
    return result, TransformTrace(st, [step], result)


def _contract_deep_children(st: StagedTree, spec: ResizeSpec) -> StagedTree:
    for w_members in [st.stages[w] for w in spec.child_stages]:
        j = st.stage_of(w_members[0])
        valid = _valid_edges(st, j)
        if not valid:
            continue
        sub = ResizeSpec(j, st.stages[j], tuple(k for k, _ in valid), tuple(w for _, w in valid), True)
        st = _contract_deep_children(st, sub)
        st, _ = _contract_once(st, sub.members, sub.edges)
    return st


# -- isomorphism ------------------------------------------------------------


def _signatures(st: StagedTree, match_labels: bool, intern: dict) -> dict[str, int]:
    tree = st.tree
    sig = {}
    for v in reversed(tree.nodes):
        if tree.is_leaf(v):
            key = ("leaf",)
        else:
            kids = tree.out_edges(v)
            parts = sorted(
                ((e.label if match_labels else ""), sig[e.target]) for e in kids
            )
            key = (len(st.stages[st.stage_of(v)]), tuple(parts))
        sig[v] = intern.setdefault(key, len(intern))
    return sig


def staged_tree_isomorphic(
    a: StagedTree, b: StagedTree, match_labels: bool = False
) -> dict | None:
    """Root-preserving isomorphism mapping stages onto stages, or ``None``.

    Edge order may differ, but the permutation applied to the florets of one
    stage must be the same for all its members, so that stage alignment is
    respected.  Labels are ignored unless ``match_labels`` is set.
    """
    ta, tb = a.tree, b.tree
    if (
        len(ta.nodes) != len(tb.nodes)
        or ta.num_leaves != tb.num_leaves
        or sorted(map(len, a.stages)) != sorted(map(len, b.stages))
    ):
        return None
    intern: dict = {}
    sa = _signatures(a, match_labels, intern)
    sb = _signatures(b, match_labels, intern)
    if sa[ta.root] != sb[tb.root]:
        return None

    def candidates(x, y):
        ea, eb = ta.out_edges(x), tb.out_edges(y)
        r = len(ea)

        def rec(k, used, acc):
            if k == r:
                yield tuple(acc)
                return
            for k2 in range(r):
                if k2 in used:
                    continue
                if sa[ea[k].target] != sb[eb[k2].target]:
                    continue
                if match_labels and ea[k].label != eb[k2].label:
                    continue
                used.add(k2)
                acc.append(k2)
                yield from rec(k + 1, used, acc)
                acc.pop()
                used.discard(k2)

        return rec(0, set(), [])

    def solve(pending, phi, stage_map, used_b, perm):
        i = 0
        pending = list(pending)
        while i < len(pending):
            x, y = pending[i]
            i += 1
            if ta.is_leaf(x):
                if not tb.is_leaf(y):
                    return None
                continue
            ja, jb = a.stage_of(x), b.stage_of(y)
            if ja in stage_map:
                if stage_map[ja] != jb:
                    return None
                pi = perm[ja]
                ea, eb = ta.out_edges(x), tb.out_edges(y)
                for k, k2 in enumerate(pi):
                    cx, cy = ea[k].target, eb[k2].target
                    if sa[cx] != sb[cy] or (match_labels and ea[k].label != eb[k2].label):
                        return None
                    phi[cx] = cy
                    pending.append((cx, cy))
                continue
            if jb in used_b:
                return None
            for pi in candidates(x, y):
                phi2 = dict(phi)
                ea, eb = ta.out_edges(x), tb.out_edges(y)
                new_pairs = []
                for k, k2 in enumerate(pi):
                    phi2[ea[k].target] = eb[k2].target
                    new_pairs.append((ea[k].target, eb[k2].target))
                out = solve(
                    pending[i:] + new_pairs,
                    phi2,
                    {**stage_map, ja: jb},
                    used_b | {jb},
                    {**perm, ja: pi},
                )
                if out is not None:
                    return out
            return None
        return phi

    return solve([(ta.root, tb.root)], {ta.root: tb.root}, {}, frozenset(), {})


def _nested_sigs(st: StagedTree, match_labels: bool) -> dict:
    tree = st.tree
    sig = {}
    for v in reversed(tree.nodes):
        if tree.is_leaf(v):
            sig[v] = ()
        else:
            parts = sorted(
                ((e.label if match_labels else ""), sig[e.target]) for e in tree.out_edges(v)
            )
            sig[v] = (len(st.stages[st.stage_of(v)]), tuple(parts))
    return sig


def canonical_form(st: StagedTree, match_labels: bool = True) -> tuple[StagedTree, dict]:
    """Relabel nodes ``s0, s1, ...`` / ``l1, l2, ...`` in a canonical order.

    Each stage's edge order is fixed once, by sorting its columns (the k-th
    children of all members) on their subtree signatures, so alignment is
    preserved.  Returns the relabelled tree and the old-to-new id map.
    """
    tree = st.tree
    sig = _nested_sigs(st, match_labels)
    orders: dict[int, list[int]] = {}

    def column_order(x):
        j = st.stage_of(x)
        if j not in orders:
            members = st.stages[j]
            r = tree.outdegree(x)

            def key(k):
                col = sorted(
                    ((tree.out_edges(m)[k].label if match_labels else ""), sig[tree.out_edges(m)[k].target])
                    for m in members
                )
                e = tree.out_edges(x)[k]
                return (col, (e.label if match_labels else ""), sig[e.target])

            orders[j] = sorted(range(r), key=key)
        return orders[j]

    new_id = {tree.root: None}
    sequence = [tree.root]
    i = 0
    while i < len(sequence):
        x = sequence[i]
        i += 1
        if not tree.is_leaf(x):
            es = tree.out_edges(x)
            sequence.extend(es[k].target for k in column_order(x))
    n_s, n_l = 0, 1
    for v in sequence:
        if tree.is_leaf(v):
            new_id[v] = f"l{n_l}"
            n_l += 1
        else:
            new_id[v] = f"s{n_s}"
            n_s += 1
    edges = []
    for x in sequence:
        if tree.is_leaf(x):
            continue
        es = tree.out_edges(x)
        for k in column_order(x):
            edges.append(Edge(new_id[x], new_id[es[k].target], es[k].label))
    new_tree = EventTree(new_id[tree.root], edges)
    stages = [[new_id[m] for m in members] for members in st.stages]
    theta = None
    if st.theta is not None:
        theta = []
        for j, members in enumerate(st.stages):
            order = column_order(members[0])
            theta.append(st.theta[j][order])
    return normalize_staging(new_tree, stages, theta), new_id


def canonical_key(st: StagedTree, match_labels: bool = False) -> tuple:
    """Hashable serialization of the canonical form (for de-duplication)."""
    c, _ = canonical_form(st, match_labels)
    edges = tuple((e.source, e.target, e.label if match_labels else "") for e in c.tree.edges)
    return edges, c.stages


# -- search -----------------------------------------------------------------


def _moves(st: StagedTree) -> Iterator[tuple[StagedTree, TransformStep]]:
    for twin in find_twins(st):
        new, trace = swap(st, twin)
        yield new, trace.steps[0]
    for deep in (False, True):
        for spec in find_contractions(st, deep=deep):
            new, trace = resize_contract(st, spec)
            yield new, trace.steps[0]


def bounded_equivalence_search(
    a: StagedTree, b: StagedTree, max_ops: int, match_labels: bool = False
) -> TransformTrace | None:
    """Breadth-first search for swaps/contractions turning ``a`` into ``b``.

    Returns the first (shortest) trace found with at most ``max_ops`` steps.
    ``None`` does not prove the trees are inequivalent: expansions are never
    tried.
    """
    if max_ops < 0:
        raise ValueError("max_ops must be nonnegative")
    relabel = staged_tree_isomorphic(a, b, match_labels)
    if relabel is not None:
        return TransformTrace(a, [], b, relabel)
    visited = {canonical_key(a, match_labels)}
    frontier = [(a, [])]
    for _ in range(max_ops):
        nxt = []
        for st, steps in frontier:
            for new, step in _moves(st):
                key = canonical_key(new, match_labels)
                if key in visited:
                    continue
                visited.add(key)
                path = steps + [step]
                relabel = staged_tree_isomorphic(new, b, match_labels)
                if relabel is not None:
                    return TransformTrace(a, path, b, relabel)
                nxt.append((new, path))
        frontier = nxt
    return None


def map_dataset(
    data: Dataset, source: StagedTree | EventTree, target: StagedTree | EventTree, leaf_map=None
) -> Dataset:
    """Rewrite each record as the label path of its corresponding target leaf."""
    src = source.tree if isinstance(source, StagedTree) else source
    dst = target.tree if isinstance(target, StagedTree) else target
    cache = {}
    out = []
    for i, r in enumerate(data.records):
        if r not in cache:
            leaf = route_record(src, r, i)[-1].target if src.situations else src.root
            leaf = leaf if leaf_map is None else leaf_map[leaf]
            cache[r] = dst.path_tokens(leaf)
        out.append(cache[r])
    return Dataset(out)
