import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from stagedtrees import (
    LearnConfig,
    StagedTree,
    StagingError,
    ahc_learn,
    bd_log_score,
    bdepu_hyper,
    build_tree_from_paths,
    hyperparameters,
    route_dataset,
    score_delta,
    validate_staged_tree,
)
from stagedtrees import catalog
from stagedtrees.synth import random_event_tree, random_staging, sample_dataset


def two_binary_situations(n, m):
    tree = build_tree_from_paths([[a, b] for a in ("u", "v") for b in ("yes", "no")])
    records = []
    for a in ("u", "v"):
        records += [(a, "yes")] * n + [(a, "no")] * m
    return tree, route_dataset(tree, records)


def test_identical_counts_are_pooled():
    tree, counts = two_binary_situations(30, 10)
    result = ahc_learn(tree, counts, LearnConfig(alpha="leaves"))
    assert ("s1", "s2") in result.staged_tree.stages
    saturated = StagedTree.saturated(tree)
    pooled = result.staged_tree
    assert bd_log_score(pooled, counts, bdepu_hyper(pooled, 4)) > bd_log_score(
        saturated, counts, bdepu_hyper(saturated, 4)
    )


def test_no_merge_when_every_merge_hurts():
    tree = build_tree_from_paths([[a, b] for a in ("u", "v") for b in ("yes", "no")])
    records = [("u", "yes")] * 200 + [("u", "no")] * 2 + [("v", "yes")] * 2 + [("v", "no")] * 200
    counts = route_dataset(tree, records)
    result = ahc_learn(tree, counts, LearnConfig(scope="same-level-only"))
    assert result.staged_tree.stages == StagedTree.saturated(tree).stages
    assert result.history == []


def test_titanic_learning_beats_hand_staging():
    st, counts = catalog.titanic_s1()
    result = ahc_learn(st.tree, counts, LearnConfig("bdepu", 12))
    scores = result.scores
    assert all(b > a for a, b in zip(scores, scores[1:]))
    assert result.log_score >= bd_log_score(st, counts, bdepu_hyper(st, 12))
    assert result.log_score == pytest.approx(
        bd_log_score(result.staged_tree, counts, bdepu_hyper(result.staged_tree, 12)), abs=1e-9
    )


@pytest.mark.parametrize("method", ["csbdeu", "csbdeu-alt1", "csbdeu-alt2"])
def test_level_methods_merge_within_levels(method):
    st, counts = catalog.titanic_s1()
    cfg = LearnConfig(method, 12, scope="any-equal-outdegree")
    assert cfg.effective_scope == "same-level-only"
    result = ahc_learn(st.tree, counts, cfg)
    assert validate_staged_tree(result.staged_tree).cross_level_stages == []
    scores = result.scores
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_square_free_flag():
    st, counts = catalog.titanic_s1()
    result = ahc_learn(st.tree, counts, LearnConfig(square_free=True, alpha=12))
    assert validate_staged_tree(result.staged_tree).square_free


def test_learning_is_deterministic():
    st, counts = catalog.titanic_s1()
    a = ahc_learn(st.tree, counts, LearnConfig(alpha=12))
    b = ahc_learn(st.tree, counts, LearnConfig(alpha=12))
    assert a.staged_tree.stages == b.staged_tree.stages
    assert [m.stage_a for m in a.history] == [m.stage_a for m in b.history]


def test_config_validation():
    with pytest.raises(ValueError):
        LearnConfig(method="bic")
    with pytest.raises(ValueError):
        LearnConfig(scope="global")


def test_score_delta_errors():
    st, counts = catalog.titanic_s1()
    with pytest.raises(StagingError):
        score_delta(st, counts, 1, 1, 12)
    with pytest.raises(ValueError):
        score_delta(st, counts, 1, 2, 12, method="csbdeu")
    with pytest.raises(StagingError):
        score_delta(st, counts, 0, 3, 12)


def test_score_delta_zero_counts_is_zero():
    st, _ = catalog.titanic_s1()
    empty = route_dataset(st.tree, [])
    assert score_delta(st, empty, 1, 2, 12) == pytest.approx(0.0, abs=1e-12)


def merged(st, a, b):
    stages = [m for j, m in enumerate(st.stages) if j not in (a, b)]
    return StagedTree(st.tree, stages + [st.stages[a] + st.stages[b]])


@settings(max_examples=60, deadline=None)
@given(st_.integers(0, 2**32 - 1))
def test_score_delta_matches_full_rescore(seed):
    rng = np.random.default_rng(seed)
    tree = random_event_tree(rng)
    st = random_staging(rng, tree, same_level=False, merge_prob=0.3)
    pairs = [
        (a, b)
        for a in range(st.num_stages)
        for b in range(a + 1, st.num_stages)
        if st.outdegree(a) == st.outdegree(b)
    ]
    if not pairs:
        return
    a, b = pairs[int(rng.integers(len(pairs)))]
    counts = route_dataset(tree, sample_dataset(rng, st, int(rng.integers(0, 300))))
    alpha = float(rng.uniform(0.5, 20))
    after = merged(st, a, b)
    full = bd_log_score(after, counts, hyperparameters(after, alpha)) - bd_log_score(
        st, counts, hyperparameters(st, alpha)
    )
    assert score_delta(st, counts, a, b, alpha) == pytest.approx(full, abs=1e-9)
