"""Event trees, staged trees, datasets and edge counts.

An :class:`EventTree` is a rooted tree whose outgoing edges at every node are
held in a fixed order.  A :class:`StagedTree` adds a partition of the
situations (non-leaf nodes) into stages; the k-th edge of every member of a
stage shares one transition parameter, so alignment inside a stage is purely
positional.

Edge labels may be composite: ``"Male,Yes"`` is the event ``Male`` followed by
``Yes``.  Routing consumes one record token per label component, which lets a
floret produced by contracting a subtree route the same records as the
original subtree.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import RoutingError, StagingError, TreeStructureError

__all__ = [
    "Edge",
    "EventTree",
    "StagedTree",
    "Dataset",
    "EdgeCounts",
    "ValidationReport",
    "build_product_tree",
    "build_tree_from_paths",
    "path_count",
    "validate_staged_tree",
    "route_dataset",
    "route_record",
    "dataset_from_counts",
]


def split_label(label: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in label.split(","))


def join_tokens(tokens: Sequence[str]) -> str:
    return ",".join(tokens)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    label: str

    @property
    def tokens(self) -> tuple[str, ...]:
        return split_label(self.label)


class EventTree:
    """Rooted directed tree with ordered, labelled outgoing edges.

    Parameters
    ----------
    root
        Identifier of the root node.
    edges
        All edges of the tree.  The relative order of the edges leaving one
        node fixes that node's edge order (edge index ``k``).
    """

    def __init__(self, root: str, edges: Iterable[Edge]):
        edges = tuple(edges)
        out: dict[str, list[Edge]] = {root: []}
        parent: dict[str, Edge] = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(*e)
            if e.target == root:
                raise TreeStructureError(f"edge {e.source}->{e.target} enters the root")
            if e.target in parent:
                raise TreeStructureError(f"node {e.target!r} has more than one incoming edge")
            if e.source == e.target:
                raise TreeStructureError(f"self-loop at {e.source!r}")
            parent[e.target] = e
            out.setdefault(e.source, []).append(e)
            out.setdefault(e.target, [])
        for node, es in out.items():
            labels = [e.label for e in es]
            if len(set(labels)) != len(labels):
                raise TreeStructureError(f"duplicate outgoing edge label at {node!r}")
            if node != root and node not in parent:
                raise TreeStructureError(f"node {node!r} has no incoming edge")

        order: list[str] = []
        depth = {root: 0}
        queue = deque([root])
        while queue:
            node = queue.popleft()
            order.append(node)
            for e in out[node]:
                depth[e.target] = depth[node] + 1
                queue.append(e.target)
        if len(order) != len(out):
            raise TreeStructureError("edges do not form a tree reachable from the root")

        self.root = root
        self._out = {n: tuple(es) for n, es in out.items()}
        self._parent = parent
        self._depth = depth
        self.nodes: tuple[str, ...] = tuple(order)
        self._position = {n: i for i, n in enumerate(order)}
        self.situations: tuple[str, ...] = tuple(n for n in order if out[n])
        self.leaves: tuple[str, ...] = tuple(n for n in order if not out[n])

        paths: dict[str, int] = {}
        for node in reversed(order):
            es = self._out[node]
            paths[node] = sum(paths[e.target] for e in es) if es else 1
        self._paths = paths

    # -- structure -------------------------------------------------------
    @property
    def edges(self) -> tuple[Edge, ...]:
        """All edges in depth-first (preorder) order."""
        result = []
        stack = list(reversed(self._out[self.root]))
        while stack:
            e = stack.pop()
            result.append(e)
            stack.extend(reversed(self._out[e.target]))
        return tuple(result)

    def _preorder(self) -> dict[str, int]:
        pos = {}
        stack = [self.root]
        while stack:
            node = stack.pop()
            pos[node] = len(pos)
            stack.extend(e.target for e in reversed(self._out[node]))
        return pos

    def out_edges(self, node: str) -> tuple[Edge, ...]:
        try:
            return self._out[node]
        except KeyError:
            raise KeyError(f"unknown node {node!r}") from None

    def in_edge(self, node: str) -> Edge | None:
        return self._parent.get(node)

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(e.target for e in self.out_edges(node))

    def parent(self, node: str) -> str | None:
        e = self._parent.get(node)
        return None if e is None else e.source

    def outdegree(self, node: str) -> int:
        return len(self.out_edges(node))

    def is_leaf(self, node: str) -> bool:
        return not self.out_edges(node)

    def depth(self, node: str) -> int:
        return self._depth[node]

    def position(self, node: str) -> int:
        """Breadth-first index of ``node``."""
        return self._position[node]

    def __contains__(self, node) -> bool:
        return node in self._out

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def num_leaves(self) -> int:
        return len(self.leaves)

    def ancestors(self, node: str) -> list[str]:
        result = []
        e = self._parent.get(node)
        while e is not None:
            result.append(e.source)
            e = self._parent.get(e.source)
        return result

    def path_edges(self, node: str) -> list[Edge]:
        """Edges from the root down to ``node``."""
        result = []
        e = self._parent.get(node)
        while e is not None:
            result.append(e)
            e = self._parent.get(e.source)
        result.reverse()
        return result

    def path_tokens(self, node: str) -> tuple[str, ...]:
        return tuple(t for e in self.path_edges(node) for t in e.tokens)

    def paths(self) -> list[tuple[str, ...]]:
        """Root-to-leaf label sequences in depth-first order."""
        pre = self._preorder()
        return [self.path_tokens(l) for l in sorted(self.leaves, key=pre.__getitem__)]

    def n_paths(self, target: str | Edge) -> int:
        if isinstance(target, Edge):
            if self._parent.get(target.target) != target:
                raise KeyError(f"unknown edge {target}")
            return self._paths[target.target]
        if target not in self._paths:
            raise KeyError(f"unknown node {target!r}")
        return self._paths[target]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventTree):
            return NotImplemented
        return self.root == other.root and self._out == other._out

    def __hash__(self):
        return hash((self.root, tuple(self.edges)))

    def __repr__(self) -> str:
        return (
            f"EventTree(root={self.root!r}, situations={len(self.situations)}, "
            f"leaves={len(self.leaves)})"
        )


def path_count(tree: EventTree, target: str | Edge) -> int:
    """Number of root-to-leaf paths passing through a node or edge."""
    return tree.n_paths(target)


class StagedTree:
    """An event tree together with a partition of its situations into stages.

    The constructor only checks that stage members are situations of the
    tree; partition and out-degree violations are left for
    :func:`validate_staged_tree` to report.

    Parameters
    ----------
    tree
        Underlying event tree.
    stages
        Ordered stages, each an ordered list of situation ids.
    theta
        Optional per-stage transition probability vectors.
    """

    def __init__(self, tree: EventTree, stages: Iterable[Sequence[str]], theta=None):
        self.tree = tree
        self.stages: tuple[tuple[str, ...], ...] = tuple(tuple(s) for s in stages)
        index: dict[str, int] = {}
        for j, members in enumerate(self.stages):
            if not members:
                raise StagingError(f"stage {j} is empty")
            for s in members:
                if s not in tree:
                    raise StagingError(f"stage {j} refers to unknown node {s!r}")
                if tree.is_leaf(s):
                    raise StagingError(f"stage {j} contains leaf {s!r}")
                index.setdefault(s, j)
        self._stage_of = index
        if theta is not None:
            theta = tuple(np.asarray(t, dtype=float) for t in theta)
            if len(theta) != len(self.stages):
                raise StagingError("theta must hold one vector per stage")
            for j, t in enumerate(theta):
                if len(t) != self.outdegree(j):
                    raise StagingError(f"theta for stage {j} has wrong length")
                if np.any(t <= 0) or abs(t.sum() - 1.0) > 1e-12:
                    raise StagingError(f"theta for stage {j} is not a positive probability vector")
        self.theta = theta

    @classmethod
    def saturated(cls, tree: EventTree) -> "StagedTree":
        """Every situation in a stage of its own."""
        return cls(tree, [[s] for s in tree.situations])

    def stage_of(self, node: str) -> int:
        try:
            return self._stage_of[node]
        except KeyError:
            raise KeyError(f"{node!r} is not a staged situation") from None

    def outdegree(self, stage: int) -> int:
        return self.tree.outdegree(self.stages[stage][0])

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    def root_stage(self) -> int:
        return self.stage_of(self.tree.root)

    def stage_levels(self, stage: int) -> set[int]:
        return {self.tree.depth(s) for s in self.stages[stage]}

    def with_stages(self, stages, theta=None) -> "StagedTree":
        return StagedTree(self.tree, stages, theta)

    def require_valid(self) -> None:
        report = validate_staged_tree(self)
        if not report.ok:
            raise StagingError("; ".join(report.failures))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StagedTree):
            return NotImplemented
        return self.tree == other.tree and self.stages == other.stages

    def __hash__(self):
        return hash((self.tree, self.stages))

    def __repr__(self) -> str:
        return f"StagedTree({self.tree!r}, stages={len(self.stages)})"


@dataclass(frozen=True)
class Dataset:
    """Complete sample: each record is the label sequence along one path."""

    records: tuple[tuple[str, ...], ...]
    variables: tuple[str, ...] | None = None

    def __init__(self, records: Iterable[Sequence[str]], variables=None):
        object.__setattr__(self, "records", tuple(tuple(r) for r in records))
        object.__setattr__(
            self, "variables", None if variables is None else tuple(variables)
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.records)


class EdgeCounts(Mapping):
    """Nonnegative integer count per edge of one tree."""

    def __init__(self, tree: EventTree, counts: Mapping[Edge, int] | None = None):
        self.tree = tree
        values = {e: 0 for e in tree.edges}
        for e, n in (counts or {}).items():
            if e not in values:
                raise KeyError(f"edge {e} is not in the tree")
            if n < 0 or int(n) != n:
                raise ValueError(f"count on {e} must be a nonnegative integer")
            values[e] = int(n)
        self._values = values

    def __getitem__(self, edge: Edge) -> int:
        return self._values[edge]

    def __iter__(self):
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    @property
    def total(self) -> int:
        return sum(self._values[e] for e in self.tree.out_edges(self.tree.root))

    def node_count(self, node: str) -> int:
        """Units arriving at ``node``."""
        e = self.tree.in_edge(node)
        return self.total if e is None else self._values[e]

    def is_flow_conserving(self) -> bool:
        for s in self.tree.situations:
            if s == self.tree.root:
                continue
            if self.node_count(s) != sum(self._values[e] for e in self.tree.out_edges(s)):
                return False
        return True

    def leaf_counts(self) -> dict[str, int]:
        return {l: self.node_count(l) for l in self.tree.leaves}

    def stage_counts(self, st: StagedTree) -> list[np.ndarray]:
        """Aggregated ``n_jk`` for every stage of ``st``."""
        result = []
        for members in st.stages:
            r = self.tree.outdegree(members[0])
            acc = np.zeros(r)
            for s in members:
                es = self.tree.out_edges(s)
                if len(es) != r:
                    raise StagingError("stage members have different out-degrees")
                acc += [self._values[e] for e in es]
            result.append(acc)
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, EdgeCounts):
            return self.tree == other.tree and self._values == other._values
        return NotImplemented

    def __repr__(self) -> str:
        return f"EdgeCounts(total={self.total})"


@dataclass
class ValidationReport:
    partition_ok: bool
    equal_outdegree_ok: bool
    square_free: bool
    stratified: bool
    level_span: list[tuple[int, int]]
    cross_level_stages: list[int]
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Hard checks only: partition and equal out-degree."""
        return self.partition_ok and self.equal_outdegree_ok


def _is_stratified(tree: EventTree) -> bool:
    depths = {tree.depth(l) for l in tree.leaves}
    if len(depths) != 1:
        return False
    by_level: dict[int, set[tuple[str, ...]]] = {}
    for s in tree.situations:
        by_level.setdefault(tree.depth(s), set()).add(
            tuple(e.label for e in tree.out_edges(s))
        )
    return all(len(v) == 1 for v in by_level.values())


def validate_staged_tree(st: StagedTree) -> ValidationReport:
    """Diagnose a staged tree.  Never raises."""
    tree = st.tree
    failures = []
    seen = Counter(s for members in st.stages for s in members)
    partition_ok = True
    for s, n in seen.items():
        if n > 1:
            partition_ok = False
            failures.append(f"situation {s} appears in {n} stages")
    missing = [s for s in tree.situations if s not in seen]
    if missing:
        partition_ok = False
        failures.append(f"situations without a stage: {', '.join(missing)}")

    equal_outdegree_ok = True
    for j, members in enumerate(st.stages):
        degrees = {tree.outdegree(s) for s in members}
        if len(degrees) > 1:
            equal_outdegree_ok = False
            failures.append(f"stage {j} mixes out-degrees {sorted(degrees)}")

    square_free = True
    for j, members in enumerate(st.stages):
        if len(members) < 2:
            continue
        mset = set(members)
        for s in members:
            if any(a in mset for a in tree.ancestors(s)):
                square_free = False
                break
        if not square_free:
            break

    spans = []
    cross = []
    for j, members in enumerate(st.stages):
        levels = [tree.depth(s) for s in members]
        spans.append((min(levels), max(levels)))
        if min(levels) != max(levels):
            cross.append(j)

    return ValidationReport(
        partition_ok=partition_ok,
        equal_outdegree_ok=equal_outdegree_ok,
        square_free=square_free,
        stratified=_is_stratified(tree),
        level_span=spans,
        cross_level_stages=cross,
        failures=failures,
    )


def _node_namer():
    counters = {"s": 0, "l": 1}

    def name(is_leaf: bool) -> str:
        prefix = "l" if is_leaf else "s"
        n = counters[prefix]
        counters[prefix] += 1
        return f"{prefix}{n}"

    return name


def _tree_from_trie(trie: dict) -> EventTree:
    # trie: label -> subtrie (dict), leaves are empty dicts; dict order is edge order
    name = _node_namer()
    root = name(not trie)
    edges = []
    queue = deque([(root, trie)])
    while queue:
        node, sub = queue.popleft()
        for label, child in sub.items():
            cid = name(not child)
            edges.append(Edge(node, cid, label))
            queue.append((cid, child))
    return EventTree(root, edges)


def build_product_tree(variables: Sequence[tuple[str, Sequence[str]]]) -> EventTree:
    """X-compatible event tree for an ordered list of ``(name, states)``."""
    if not variables:
        raise TreeStructureError("at least one variable is required")
    for name, states in variables:
        if not states:
            raise TreeStructureError(f"variable {name!r} has no states")
        if len(set(states)) != len(states):
            raise TreeStructureError(f"duplicate state label in variable {name!r}")

    def grow(i: int) -> dict:
        if i == len(variables):
            return {}
        return {state: grow(i + 1) for state in variables[i][1]}

    return _tree_from_trie(grow(0))


def build_tree_from_paths(paths: Sequence[Sequence[str]]) -> EventTree:
    """Minimal tree whose root-to-leaf label sequences are exactly ``paths``."""
    if not paths:
        raise TreeStructureError("at least one path is required")
    seen = set()
    trie: dict = {}
    for p in paths:
        p = tuple(p)
        if not p:
            raise TreeStructureError("empty path")
        if p in seen:
            raise TreeStructureError(f"duplicate path {p}")
        seen.add(p)
    for p in seen:
        for i in range(1, len(p)):
            if p[:i] in seen:
                raise TreeStructureError(f"path {p[:i]} is a prefix of {p}")
    for p in paths:
        node = trie
        for label in p:
            node = node.setdefault(label, {})
    return _tree_from_trie(trie)


def route_record(tree: EventTree, record: Sequence[str], index: int = 0) -> list[Edge]:
    """Edges traversed by one record, matched greedily from the root."""
    node = tree.root
    pos = 0
    path = []
    while not tree.is_leaf(node):
        for e in tree.out_edges(node):
            toks = e.tokens
            if tuple(record[pos : pos + len(toks)]) == toks:
                path.append(e)
                pos += len(toks)
                node = e.target
                break
        else:
            if pos >= len(record):
                raise RoutingError(
                    f"record {index} ends at situation {node!r} (incomplete path)",
                    record_index=index,
                    position=pos,
                )
            raise RoutingError(
                f"record {index}: no edge out of {node!r} matches {record[pos]!r} "
                f"at position {pos}",
                record_index=index,
                position=pos,
            )
    if pos != len(record):
        raise RoutingError(
            f"record {index} is longer than its path (leaf {node!r} at position {pos})",
            record_index=index,
            position=pos,
        )
    return path


def route_dataset(tree: EventTree, data: Dataset | Iterable[Sequence[str]]) -> EdgeCounts:
    """Count how many records traverse each edge."""
    records = data.records if isinstance(data, Dataset) else tuple(tuple(r) for r in data)
    first_index = {}
    multiplicity = Counter()
    for i, r in enumerate(records):
        first_index.setdefault(r, i)
        multiplicity[r] += 1
    counts: Counter = Counter()
    for r, n in multiplicity.items():
        for e in route_record(tree, r, first_index[r]):
            counts[e] += n
    return EdgeCounts(tree, counts)


def dataset_from_counts(counts: EdgeCounts) -> Dataset:
    """A dataset whose routing reproduces ``counts`` (records grouped by leaf)."""
    tree = counts.tree
    if not counts.is_flow_conserving():
        raise ValueError("counts are not flow conserving")
    records = []
    for leaf in tree.leaves:
        records.extend([tree.path_tokens(leaf)] * counts.node_count(leaf))
    return Dataset(records)
