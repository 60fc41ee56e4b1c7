"""Command-line interface.

Exit codes: 0 success, 2 validation error, 3 routing error, 4 parse error.
Wherever a tree document is expected, the name of a bundled fixture
(``titanic_s1`` etc.) can be given instead of a path.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .equivalence import (
    ResizeSpec,
    bounded_equivalence_search,
    find_contractions,
    find_twins,
    map_dataset,
    resize_contract,
    swap,
)
from .errors import DocumentError, RoutingError, StagedTreeError
from .io import TreeDocument, dump_document, load_dataset, load_tree, parse_document
from .learning import LearnConfig, ahc_learn
from .scoring import METHODS, bd_log_score, hyperparameters, resolve_alpha, sequential_oracle_log_score
from .tree import dataset_from_counts, route_dataset

EXIT_VALIDATION = 2
EXIT_ROUTING = 3
EXIT_PARSE = 4


def fixture_names() -> list[str]:
    folder = resources.files("stagedtrees") / "fixtures"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def read_tree(ref: str) -> TreeDocument:
    path = Path(ref)
    if path.exists() or ref not in fixture_names():
        return load_tree(path)
    text = (resources.files("stagedtrees") / "fixtures" / f"{ref}.json").read_text("utf-8")
    return parse_document(text)


def _alpha(value: str):
    return value if value == "leaves" else float(value)


def _data_and_counts(doc: TreeDocument, data_path: str | None):
    tree = doc.staged_tree.tree
    if data_path is not None:
        data = load_dataset(data_path)
        return data, route_dataset(tree, data)
    if doc.counts is None:
        raise DocumentError("no --data given and the tree document has no counts", field="counts")
    return dataset_from_counts(doc.counts), doc.counts


def _write(doc: TreeDocument, out: str | None) -> None:
    text = dump_document(doc)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_score(args) -> int:
    doc = read_tree(args.tree)
    st = doc.staged_tree
    data, counts = _data_and_counts(doc, args.data)
    alpha = resolve_alpha(st, _alpha(args.alpha))
    hyper = hyperparameters(st, alpha, args.method)
    print(f"log_score={bd_log_score(st, counts, hyper)!r}")
    if args.oracle:
        print(f"oracle_log_score={sequential_oracle_log_score(st, data, hyper)!r}")
    return 0


def cmd_hyper(args) -> int:
    st = read_tree(args.tree).staged_tree
    alpha = resolve_alpha(st, _alpha(args.alpha))
    hyper = hyperparameters(st, alpha, args.method)
    print(f"method={args.method} alpha={alpha!r}")
    for j, (members, vec) in enumerate(zip(st.stages, hyper.stages)):
        values = " ".join(f"{v:.12g}" for v in vec)
        print(f"stage {j} [{','.join(members)}]: {values} (total {vec.sum():.12g})")
    return 0


def cmd_learn(args) -> int:
    doc = read_tree(args.tree)
    tree = doc.staged_tree.tree
    _, counts = _data_and_counts(doc, args.data)
    scope = "same-level-only" if args.same_level_only else None
    cfg = LearnConfig(args.method, _alpha(args.alpha), scope, args.square_free)
    result = ahc_learn(tree, counts, cfg)
    print(f"iteration 0 log_score={result.initial_score!r}")
    for i, m in enumerate(result.history, 1):
        print(
            f"iteration {i} merge [{','.join(m.stage_a)}] + [{','.join(m.stage_b)}] "
            f"log_score={m.log_score!r}"
        )
    print(f"final log_score={result.log_score!r} stages={result.staged_tree.num_stages}")
    alpha = resolve_alpha(tree, cfg.alpha)
    _write(TreeDocument(result.staged_tree, counts, alpha, args.method), args.out)
    return 0


def _transformed_doc(doc: TreeDocument, new_st) -> TreeDocument:
    counts = None
    if doc.counts is not None:
        data = map_dataset(dataset_from_counts(doc.counts), doc.staged_tree, new_st)
        counts = route_dataset(new_st.tree, data)
    return TreeDocument(new_st, counts, doc.alpha, doc.method)


def cmd_swap(args) -> int:
    doc = read_tree(args.tree)
    st = doc.staged_tree
    twins = {t.root: t for t in find_twins(st)}
    if args.twin_root not in twins:
        sites = ", ".join(twins) or "none"
        raise _Validation(f"no twin rooted at {args.twin_root!r} (available: {sites})")
    new_st, _ = swap(st, twins[args.twin_root])
    _write(_transformed_doc(doc, new_st), args.out)
    return 0


def cmd_resize(args) -> int:
    doc = read_tree(args.tree)
    st = doc.staged_tree
    if not 0 <= args.stage < st.num_stages:
        raise _Validation(f"stage index {args.stage} out of range (0..{st.num_stages - 1})")
    edges = None
    if args.edges:
        try:
            edges = tuple(int(k) for k in args.edges.split(","))
        except ValueError:
            raise _Validation(f"--edges must be comma-separated integers, got {args.edges!r}") from None
    members = st.stages[args.stage]
    spec = ResizeSpec(args.stage, members, edges, (), args.deep)
    new_st, _ = resize_contract(st, spec)
    _write(_transformed_doc(doc, new_st), args.out)
    return 0


def cmd_check(args) -> int:
    if args.what == "equiv":
        if not (args.tree_a and args.tree_b):
            raise _Validation("check equiv needs --tree-a and --tree-b")
        a = read_tree(args.tree_a).staged_tree
        b = read_tree(args.tree_b).staged_tree
        trace = bounded_equivalence_search(a, b, args.max_ops, match_labels=args.match_labels)
        if trace is None:
            print("not-found-within-budget")
            return 0
        print(f"trace={','.join(trace.kinds)}")
        for i, step in enumerate(trace.steps, 1):
            print(f"{i} {step.describe()}")
        return 0
    if not args.tree:
        raise _Validation(f"check {args.what} needs --tree")
    st = read_tree(args.tree).staged_tree
    if args.what == "twins":
        twins = find_twins(st)
        for t in twins:
            print(
                f"twin root={t.root} stage={t.stage} r1={t.r1} r2={t.r2} "
                f"children={','.join(t.children)}"
            )
        if not twins:
            print("no twins")
        return 0
    specs = find_contractions(st, deep=args.deep)
    for s in specs:
        print(
            f"contraction stage={s.stage} members={','.join(s.members)} "
            f"edges={','.join(map(str, s.edges))}"
        )
    if not specs:
        print("no contractions")
    return 0


class _Validation(StagedTreeError):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stagedtrees", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def scoring_opts(q, data=True):
        q.add_argument("--tree", required=True, help="tree document or fixture name")
        if data:
            q.add_argument("--data", help="CSV dataset (defaults to the counts in the document)")
        q.add_argument("--alpha", default="leaves", help="imaginary sample size or 'leaves'")
        q.add_argument("--method", default="bdepu", choices=METHODS)

    q = sub.add_parser("score", help="log BD score of a staged tree")
    scoring_opts(q)
    q.add_argument("--oracle", action="store_true", help="also print the sequential-prediction score")
    q.set_defaults(func=cmd_score)

    q = sub.add_parser("hyper", help="per-stage hyperparameters")
    scoring_opts(q, data=False)
    q.set_defaults(func=cmd_hyper)

    q = sub.add_parser("learn", help="learn a staging by greedy merging")
    scoring_opts(q)
    q.add_argument("--same-level-only", action="store_true")
    q.add_argument("--square-free", action="store_true")
    q.add_argument("--out", help="output document (default: stdout)")
    q.set_defaults(func=cmd_learn)

    q = sub.add_parser("transform", help="apply a swap or resize")
    tsub = q.add_subparsers(dest="operator", required=True)
    t = tsub.add_parser("swap")
    t.add_argument("--tree", required=True)
    t.add_argument("--twin-root", required=True)
    t.add_argument("--out")
    t.set_defaults(func=cmd_swap)
    t = tsub.add_parser("resize")
    t.add_argument("--tree", required=True)
    t.add_argument("--stage", type=int, required=True, help="0-based stage index")
    t.add_argument("--edges", help="comma-separated 0-based edge indices (default: all eligible)")
    t.add_argument("--deep", action="store_true", help="also fold saturated stages further down")
    t.add_argument("--out")
    t.set_defaults(func=cmd_resize)

    q = sub.add_parser("check", help="list operator sites or search for an equivalence")
    q.add_argument("what", choices=["twins", "contractions", "equiv"])
    q.add_argument("--tree")
    q.add_argument("--tree-a")
    q.add_argument("--tree-b")
    q.add_argument("--max-ops", type=int, default=3)
    q.add_argument("--deep", action="store_true")
    q.add_argument("--match-labels", action="store_true")
    q.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except RoutingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ROUTING
    except (StagedTreeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
