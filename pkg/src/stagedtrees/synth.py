"""Random event trees, stagings and datasets for property tests and benchmarks.

Everything takes a :class:`numpy.random.Generator` so results are
reproducible from a seed.
"""

from __future__ import annotations

import numpy as np

from .tree import Dataset, EventTree, StagedTree, build_product_tree, build_tree_from_paths

__all__ = [
    "random_product_tree",
    "random_event_tree",
    "replicated_tree",
    "random_staging",
    "random_theta",
    "sample_dataset",
    "uniform_dataset",
]


def random_product_tree(rng: np.random.Generator, n_vars=(2, 4), n_states=(2, 3)) -> EventTree:
    """Product tree with a random number of variables and states (inclusive ranges)."""
    k = int(rng.integers(n_vars[0], n_vars[1] + 1))
    variables = []
    for i in range(k):
        r = int(rng.integers(n_states[0], n_states[1] + 1))
        variables.append((f"X{i}", [f"x{i}_{t}" for t in range(r)]))
    return build_product_tree(variables)


def _grow(rng, depth, max_depth, max_out, stop_prob):
    if depth > 0 and (depth >= max_depth or rng.random() < stop_prob):
        return {}
    r = int(rng.integers(1 if depth > 0 else 2, max_out + 1))
    return {f"v{depth}_{t}": _grow(rng, depth + 1, max_depth, max_out, stop_prob) for t in range(r)}


def _paths(trie, prefix=()):
    if not trie:
        yield prefix
        return
    for label, sub in trie.items():
        yield from _paths(sub, prefix + (label,))


def random_event_tree(
    rng: np.random.Generator, max_depth: int = 4, max_out: int = 3, stop_prob: float = 0.3
) -> EventTree:
    """Asymmetric tree; a node stops growing with probability ``stop_prob``."""
    return build_tree_from_paths(list(_paths(_grow(rng, 0, max_depth, max_out, stop_prob))))


def replicated_tree(rng: np.random.Generator, max_depth: int = 4, max_out: int = 3) -> EventTree:
    """Tree whose sibling subtrees share a shape with high probability.

    Good at producing twins and conditionally saturated families, which
    purely random asymmetric trees rarely contain.
    """

    def grow(depth):
        if depth > 0 and (depth >= max_depth or rng.random() < 0.2):
            return {}
        r = int(rng.integers(2 if depth == 0 else 1, max_out + 1))
        template = grow(depth + 1)
        out = {}
        for t in range(r):
            out[f"v{depth}_{t}"] = template if rng.random() < 0.75 else grow(depth + 1)
        return out

    return build_tree_from_paths(list(_paths(grow(0))))


def random_staging(
    rng: np.random.Generator,
    tree: EventTree,
    same_level: bool = True,
    merge_prob: float = 0.5,
) -> StagedTree:
    """Randomly pool situations with equal out-degree (and level if ``same_level``)."""
    groups: dict[tuple, list[str]] = {}
    for s in tree.situations:
        key = (tree.outdegree(s), tree.depth(s) if same_level else 0)
        groups.setdefault(key, []).append(s)
    stages = []
    for members in groups.values():
        blocks: list[list[str]] = []
        for s in members:
            if blocks and rng.random() < merge_prob:
                blocks[int(rng.integers(len(blocks)))].append(s)
            else:
                blocks.append([s])
        stages.extend(blocks)
    stages.sort(key=lambda m: tree.position(m[0]))
    return StagedTree(tree, stages)


def random_theta(rng: np.random.Generator, st: StagedTree) -> list[np.ndarray]:
    out = []
    for j in range(st.num_stages):
        t = rng.dirichlet(np.ones(st.outdegree(j)))
        t = np.maximum(t, 1e-6)
        out.append(t / t.sum())
    return out


def sample_dataset(rng: np.random.Generator, st: StagedTree, n: int, theta=None) -> Dataset:
    """Draw ``n`` records by walking the tree with the stage probabilities."""
    tree = st.tree
    theta = st.theta if theta is None else theta
    if theta is None:
        theta = random_theta(rng, st)
    records = []
    for _ in range(n):
        node = tree.root
        tokens: list[str] = []
        while not tree.is_leaf(node):
            p = theta[st.stage_of(node)]
            e = tree.out_edges(node)[int(rng.choice(len(p), p=p))]
            tokens.extend(e.tokens)
            node = e.target
        records.append(tuple(tokens))
    return Dataset(records)


def uniform_dataset(rng: np.random.Generator, tree: EventTree, n: int) -> Dataset:
    """``n`` records with leaves drawn uniformly."""
    paths = [tree.path_tokens(l) for l in tree.leaves]
    return Dataset([paths[i] for i in rng.integers(len(paths), size=n)])
