"""Hand-specified staged trees used by tests, the CLI and the README.

The Titanic trees carry the passenger/crew survival counts (2201 people,
aggregated by role, sex, age and survival).  The three versions correspond
to the original variable order, the order with age before sex, and the
version where the crew subtree is collapsed into one four-way floret.

The smaller trees exercise individual operators: a tree with one twin
(``twin_example``), what a swap of that twin gives, what contracting its two
conditionally saturated subtrees gives, and an uneven two-level tree that is
a single contraction away from a three-edge floret.
"""

from __future__ import annotations

from .tree import Dataset, EdgeCounts, StagedTree, build_tree_from_paths, route_dataset

__all__ = [
    "TITANIC_COUNTS",
    "titanic_records",
    "titanic_event_tree",
    "titanic_s1",
    "titanic_s2",
    "titanic_s3",
    "uneven_tree",
    "uneven_tree_floret",
    "twin_example",
    "twin_example_swapped",
    "twin_example_contracted",
    "FIXTURES",
]

# (role, sex, age, survived) -> number of people
TITANIC_COUNTS = {
    ("Crew", "Male", "Adult", "Yes"): 192,
    ("Crew", "Male", "Adult", "No"): 670,
    ("Crew", "Female", "Adult", "Yes"): 20,
    ("Crew", "Female", "Adult", "No"): 3,
    ("Passenger", "Male", "Adult", "Yes"): 146,
    ("Passenger", "Male", "Adult", "No"): 659,
    ("Passenger", "Male", "Child", "Yes"): 29,
    ("Passenger", "Male", "Child", "No"): 35,
    ("Passenger", "Female", "Adult", "Yes"): 296,
    ("Passenger", "Female", "Adult", "No"): 106,
    ("Passenger", "Female", "Child", "Yes"): 28,
    ("Passenger", "Female", "Child", "No"): 17,
}


def titanic_records(order=(0, 1, 2, 3)) -> Dataset:
    """One record per person, fields permuted by ``order``."""
    names = ("Role", "Sex", "Age", "Survival")
    records = []
    for key, n in TITANIC_COUNTS.items():
        records.extend([tuple(key[i] for i in order)] * n)
    return Dataset(records, [names[i] for i in order])


def titanic_event_tree():
    # no children among the crew: that edge is absent rather than zero-count
    return build_tree_from_paths(list(TITANIC_COUNTS))


def titanic_s1() -> tuple[StagedTree, EdgeCounts]:
    """Role, sex, age, survival.

    Sex and age are independent of each other given role; among adult male
    passengers survival differs from adult female ones, while male and
    female children share their survival distribution.
    """
    tree = titanic_event_tree()
    stages = [
        ["s0"],
        ["s1"],
        ["s2"],
        ["s3", "s4"],
        ["s5", "s6"],
        ["s7"],
        ["s8"],
        ["s9"],
        ["s10", "s12"],
        ["s11"],
    ]
    st = StagedTree(tree, stages)
    return st, route_dataset(tree, titanic_records())


def titanic_s2() -> tuple[StagedTree, EdgeCounts]:
    """Role, age, sex, survival: the image of ``titanic_s1`` under two swaps."""
    paths = [
        (role, age, sex, surv)
        for (role, sex, age, surv) in TITANIC_COUNTS
    ]
    paths.sort(key=lambda p: (p[0] != "Crew", p[1] != "Adult", p[2] != "Male", p[3] != "Yes"))
    tree = build_tree_from_paths(paths)
    stages = [
        ["s0"],
        ["s1"],
        ["s2"],
        ["s3"],
        ["s4", "s5"],
        ["s6"],
        ["s7"],
        ["s8"],
        ["s9"],
        ["s10", "s11"],
    ]
    st = StagedTree(tree, stages)
    return st, route_dataset(tree, titanic_records((0, 2, 1, 3)))


def titanic_s3() -> tuple[StagedTree, EdgeCounts]:
    """``titanic_s2`` with the crew subtree collapsed into one floret."""
    paths = [
        ("Crew", "Male,Yes"),
        ("Crew", "Male,No"),
        ("Crew", "Female,Yes"),
        ("Crew", "Female,No"),
    ]
    for age in ("Adult", "Child"):
        for sex in ("Male", "Female"):
            for surv in ("Yes", "No"):
                paths.append(("Passenger", age, sex, surv))
    tree = build_tree_from_paths(paths)
    stages = [["s0"], ["s1"], ["s2"], ["s3", "s4"], ["s5"], ["s6"], ["s7", "s8"]]
    st = StagedTree(tree, stages)
    # crew records skip the age field: every crew member is an adult
    records = [r if r[0] == "Passenger" else (r[0], r[2], r[3]) for r in titanic_records((0, 2, 1, 3))]
    return st, route_dataset(tree, records)


def uneven_tree() -> StagedTree:
    """Root with a binary branch ``a`` and a one-edge branch ``b``."""
    tree = build_tree_from_paths([("a", "x"), ("a", "y"), ("b", "z")])
    return StagedTree.saturated(tree)


def uneven_tree_floret() -> StagedTree:
    tree = build_tree_from_paths([("a,x",), ("a,y",), ("b,z",)])
    return StagedTree.saturated(tree)


def twin_example() -> StagedTree:
    """Three-level tree whose root has a twin around stage ``{s1, s2}``.

    ``s1``'s three children are green, blue and pink; ``s2`` repeats green
    and blue and ends in a leaf on its third edge.
    """
    paths = [
        ("a1", "b1", "c1"),
        ("a1", "b1", "c2"),
        ("a1", "b2", "d1"),
        ("a1", "b2", "d2"),
        ("a1", "b3", "f1"),
        ("a1", "b3", "f2"),
        ("a2", "b1", "c1"),
        ("a2", "b1", "c2"),
        ("a2", "b2", "d1"),
        ("a2", "b2", "d2"),
        ("a2", "b3"),
    ]
    tree = build_tree_from_paths(paths)
    # breadth-first: s0; s1, s2; s3 s4 s5 (under s1), s6 s7 (under s2)
    return StagedTree(tree, [["s0"], ["s1", "s2"], ["s3", "s6"], ["s4", "s7"], ["s5"]])


def twin_example_swapped() -> StagedTree:
    paths = [
        ("b1", "a1", "c1"),
        ("b1", "a1", "c2"),
        ("b1", "a2", "c1"),
        ("b1", "a2", "c2"),
        ("b2", "a1", "d1"),
        ("b2", "a1", "d2"),
        ("b2", "a2", "d1"),
        ("b2", "a2", "d2"),
        ("b3", "a1", "f1"),
        ("b3", "a1", "f2"),
        ("b3", "a2"),
    ]
    tree = build_tree_from_paths(paths)
    # s0; s1 s2 s3; then s4 s5 (green), s6 s7 (blue), s8 (pink)
    return StagedTree(
        tree, [["s0"], ["s1", "s2", "s3"], ["s4", "s5"], ["s6", "s7"], ["s8"]]
    )


def twin_example_contracted() -> StagedTree:
    paths = []
    for a in ("a1", "a2"):
        paths += [(a, "b1,c1"), (a, "b1,c2"), (a, "b2,d1"), (a, "b2,d2")]
        paths += [(a, "b3", "f1"), (a, "b3", "f2")] if a == "a1" else [(a, "b3")]
    tree = build_tree_from_paths(paths)
    return StagedTree(tree, [["s0"], ["s1", "s2"], ["s3"]])


FIXTURES = {
    "titanic_s1": titanic_s1,
    "titanic_s2": titanic_s2,
    "titanic_s3": titanic_s3,
    "uneven_tree": lambda: (uneven_tree(), None),
    "uneven_tree_floret": lambda: (uneven_tree_floret(), None),
    "twin_example": lambda: (twin_example(), None),
    "twin_example_swapped": lambda: (twin_example_swapped(), None),
    "twin_example_contracted": lambda: (twin_example_contracted(), None),
}
