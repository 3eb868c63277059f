"""Export every two-axis slice of the objective and count local minima.

    python3 scripts/landscape_slices.py [--config configs/default.json] [--out DIR] [--resolution R]
"""
import argparse
import csv
import itertools
from pathlib import Path

from shapebench.harness import fmt, load_config
from shapebench.landscape import count_local_minima, slice_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/default.json")
    ap.add_argument("--out", default="results/landscape")
    ap.add_argument("--resolution", type=int, default=50)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, j in itertools.combinations(range(cfg.space.n), 2):
        with cfg.make_objective() as obj:
            table = slice_grid(cfg.space, obj, i, j, resolution=args.resolution)
        path = out / f"slice_x{i + 1}_x{j + 1}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["xi", "xj", "f_kwh"])
            for u, v, f in table.rows():
                w.writerow([fmt(u), fmt(v), "" if f is None else fmt(f)])
        print(f"x{i + 1},x{j + 1}: local_minima={count_local_minima(table)} -> {path}")


if __name__ == "__main__":
    main()
