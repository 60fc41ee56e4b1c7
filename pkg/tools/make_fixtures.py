"""Regenerate the bundled JSON/CSV fixtures from the catalog builders."""

from pathlib import Path

from stagedtrees.catalog import FIXTURES, TITANIC_COUNTS
from stagedtrees.io import save_tree

OUT = Path(__file__).resolve().parents[1] / "src" / "stagedtrees" / "fixtures"


def main():
    OUT.mkdir(exist_ok=True)
    for name, build in FIXTURES.items():
        st, counts = build()
        alpha = 12 if name.startswith("titanic") else None
        method = "bdepu" if name.startswith("titanic") else None
        save_tree(st, OUT / f"{name}.json", counts, alpha, method)
    lines = ["Role,Sex,Age,Survival,count"]
    lines += [",".join(key) + f",{n}" for key, n in TITANIC_COUNTS.items()]
    (OUT / "titanic.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
