"""Acceptance checks, one per criterion.

Each check prints a single ``criterion N: PASS|FAIL ...`` line. Run with
``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""

import subprocess
import sys
from importlib import resources
from math import lgamma

import numpy as np
import pytest

from stagedtrees import (
    Dataset,
    LearnConfig,
    ahc_learn,
    bd_log_score,
    bdepu_hyper,
    csbdeu_alt_hyper,
    csbdeu_hyper,
    find_contractions,
    find_twins,
    load_tree,
    map_dataset,
    resize_contract,
    route_dataset,
    score,
    sequential_oracle_log_score,
    swap,
    validate_staged_tree,
)
from stagedtrees import catalog
from stagedtrees.synth import (
    random_event_tree,
    random_product_tree,
    random_staging,
    replicated_tree,
    sample_dataset,
)

SCORE_TOL = 1e-9
HYPER_TOL = 1e-12
GAP = 1e-6
ALPHAS = (2.0, 3.0, 12.0)
ONE_PER_PATH = Dataset([("a", "x"), ("a", "y"), ("b", "z")])


def _twin(st, root):
    (twin,) = [t for t in find_twins(st) if t.root == root]
    return twin


def check_titanic_equivalence():
    s1 = load_tree(resources.files("stagedtrees") / "fixtures" / "titanic_s1.json").staged_tree
    records = catalog.titanic_records()
    oracle = sequential_oracle_log_score(s1, records, bdepu_hyper(s1, 12))
    once, _ = swap(s1, _twin(s1, "s1"))
    s2, _ = swap(once, _twin(once, "s2"))
    (spec,) = [c for c in find_contractions(s2, deep=True) if c.members == ("s1",)]
    s3, _ = resize_contract(s2, spec)
    scores = []
    for st in (s1, s2, s3):
        counts = route_dataset(st.tree, map_dataset(records, s1, st))
        scores.append(bd_log_score(st, counts, bdepu_hyper(st, 12)))
    spread = max(scores) - min(scores)
    off = max(abs(s - oracle) for s in scores)
    root_ok = list(bdepu_hyper(s1, 12).stages[s1.stage_of("s0")]) == [4, 8]
    ok = spread < SCORE_TOL and off < SCORE_TOL and root_ok
    return ok, f"oracle={oracle!r} spread={spread:.2e} max|score-oracle|={off:.2e} root=(4,8):{root_ok}"


def uneven_tree_closed_forms(alpha):
    g = lgamma
    s = g(alpha) - g(alpha + 3) + g(alpha / 2 + 1) + 2 * g(alpha / 4 + 1) - g(alpha / 2) - 2 * g(alpha / 4)
    s_prime = g(alpha) - g(alpha + 3) + 3 * g(alpha / 3 + 1) - 3 * g(alpha / 3)
    return s, s_prime


def per_edge_closed_forms(alpha):
    g = lgamma
    s = (
        g(alpha) - g(alpha + 3) + g(alpha / 2 + 2) + g(alpha / 2 + 1) - 2 * g(alpha / 2)
        + g(2 * alpha / 3) - g(2 * alpha / 3 + 2) + 2 * g(alpha / 3 + 1) - 2 * g(alpha / 3)
    )
    s_prime = g(alpha) - g(alpha + 3) + 3 * g(alpha / 3 + 1) - 3 * g(alpha / 3)
    return s, s_prime


def _counterexample(hyper_fn, closed_forms):
    s, s_prime = catalog.uneven_tree(), catalog.uneven_tree_floret()
    counts = [route_dataset(t.tree, ONE_PER_PATH) for t in (s, s_prime)]
    gaps, worst_closed, worst_bd = [], 0.0, 0.0
    for alpha in ALPHAS:
        cs = [bd_log_score(t, c, hyper_fn(t, alpha)) for t, c in zip((s, s_prime), counts)]
        expected = closed_forms(alpha)
        worst_closed = max(worst_closed, *(abs(a - b) for a, b in zip(cs, expected)))
        gaps.append(abs(cs[0] - cs[1]))
        bd = [score(t, c, alpha, "bdepu") for t, c in zip((s, s_prime), counts)]
        worst_bd = max(worst_bd, abs(bd[0] - bd[1]))
    ok = min(gaps) > GAP and worst_bd < SCORE_TOL and worst_closed < SCORE_TOL
    detail = "gaps=" + ",".join(f"{g:.4f}" for g in gaps)
    return ok, f"{detail} bdepu_diff={worst_bd:.2e} closed_form_err={worst_closed:.2e}"


def check_csbdeu_counterexample():
    return _counterexample(csbdeu_hyper, uneven_tree_closed_forms)


def check_per_edge_counterexample():
    return _counterexample(lambda t, a: csbdeu_alt_hyper(t, a, "per-edge"), per_edge_closed_forms)


def check_stratified_agreement(n=120):
    rng = np.random.default_rng(20240401)
    worst_h, worst_s, checked = 0.0, 0.0, 0
    while checked < n:
        tree = random_product_tree(rng, n_vars=(2, 4), n_states=(2, 3))
        st = random_staging(rng, tree, same_level=True, merge_prob=float(rng.uniform(0.2, 0.8)))
        if not validate_staged_tree(st).stratified:
            continue
        alpha = float(rng.uniform(0.5, 20))
        a, b = bdepu_hyper(st, alpha), csbdeu_hyper(st, alpha)
        worst_h = max(worst_h, max(float(np.max(np.abs(x - y))) for x, y in zip(a.stages, b.stages)))
        counts = route_dataset(tree, sample_dataset(rng, st, int(rng.integers(0, 501))))
        worst_s = max(worst_s, abs(bd_log_score(st, counts, a) - bd_log_score(st, counts, b)))
        checked += 1
    ok = worst_h < HYPER_TOL and worst_s < SCORE_TOL
    return ok, f"trees={checked} max_hyper_diff={worst_h:.2e} max_score_diff={worst_s:.2e}"


def _operator_options(st):
    options = [("swap", t) for t in find_twins(st)]
    options += [("resize", c) for c in find_contractions(st)]
    options += [("resize", c) for c in find_contractions(st, deep=True)]
    return options


def check_operator_invariance(n=220):
    rng = np.random.default_rng(7)
    worst, cases, ops, bad_counts = 0.0, 0, 0, 0
    while cases < n:
        tree = replicated_tree(rng)
        st = random_staging(rng, tree, same_level=bool(rng.random() < 0.7), merge_prob=0.6)
        if not _operator_options(st):
            continue
        data = sample_dataset(rng, st, int(rng.integers(0, 300)))
        alpha = float(rng.uniform(0.5, 20))
        before = score(st, route_dataset(tree, data), alpha)
        current = st
        for _ in range(int(rng.integers(1, 4))):
            options = _operator_options(current)
            if not options:
                break
            kind, site = options[int(rng.integers(len(options)))]
            current, _ = swap(current, site) if kind == "swap" else resize_contract(current, site)
            ops += 1
        counts = route_dataset(current.tree, map_dataset(data, st, current))
        if current.tree.num_leaves != tree.num_leaves or counts.total != len(data):
            bad_counts += 1
        worst = max(worst, abs(score(current, counts, alpha) - before))
        cases += 1
    ok = worst < SCORE_TOL and bad_counts == 0
    return ok, f"trees={cases} operators={ops} max_score_diff={worst:.2e} count_mismatches={bad_counts}"


def check_oracle_equivalence(n=120):
    rng = np.random.default_rng(11)
    worst, worst_perm = 0.0, 0.0
    for _ in range(n):
        tree = random_event_tree(rng)
        st = random_staging(rng, tree, same_level=bool(rng.integers(2)))
        data = sample_dataset(rng, st, int(rng.integers(0, 300)))
        h = bdepu_hyper(st, float(rng.uniform(0.1, 30)))
        closed = bd_log_score(st, route_dataset(tree, data), h)
        oracle = sequential_oracle_log_score(st, data, h)
        shuffled = Dataset([data.records[i] for i in rng.permutation(len(data))])
        worst = max(worst, abs(closed - oracle))
        worst_perm = max(worst_perm, abs(sequential_oracle_log_score(st, shuffled, h) - oracle))
    ok = worst < SCORE_TOL and worst_perm < SCORE_TOL
    return ok, f"instances={n} max|closed-oracle|={worst:.2e} max_permutation_diff={worst_perm:.2e}"


def check_mass_conservation(n=200):
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(n):
        tree = random_event_tree(rng) if i % 2 else replicated_tree(rng)
        st = random_staging(rng, tree, same_level=bool(rng.integers(2)))
        alpha = float(rng.uniform(0.1, 30))
        h = bdepu_hyper(st, alpha)
        for j, members in enumerate(st.stages):
            incoming = sum(h.edge[tree.in_edge(s)] for s in members if s != tree.root)
            if tree.root in members:
                incoming += alpha
            worst = max(worst, abs(float(h.stages[j].sum()) - incoming))
    return worst < HYPER_TOL, f"trees={n} max_imbalance={worst:.2e}"


def check_ahc_titanic():
    st, counts = catalog.titanic_s1()
    result = ahc_learn(st.tree, counts, LearnConfig("bdepu", 12))
    scores = result.scores
    increasing = all(b > a for a, b in zip(scores, scores[1:]))
    hand = bd_log_score(st, counts, bdepu_hyper(st, 12))
    ok = increasing and result.log_score >= hand
    return ok, f"merges={len(result.history)} final={result.log_score!r} hand={hand!r} increasing={increasing}"


def check_cli_equiv():
    cmd = [sys.executable, "-m", "stagedtrees", "check", "equiv"]
    cmd += ["--tree-a", "titanic_s1", "--tree-b", "titanic_s3", "--max-ops", "3"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    first = proc.stdout.splitlines()[0] if proc.stdout else ""
    ok = proc.returncode == 0 and first == "trace=swap,swap,resize"
    return ok, f"exit={proc.returncode} {first}"


CRITERIA = {
    1: check_titanic_equivalence,
    2: check_csbdeu_counterexample,
    3: check_per_edge_counterexample,
    4: check_stratified_agreement,
    5: check_operator_invariance,
    6: check_oracle_equivalence,
    7: check_mass_conservation,
    8: check_ahc_titanic,
    9: check_cli_equiv,
}


def report(number):
    ok, detail = CRITERIA[number]()
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    ok, line = report(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
