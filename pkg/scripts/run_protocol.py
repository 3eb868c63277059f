"""Run the three-algorithm comparison and print a compact summary table.

    python3 scripts/run_protocol.py [--config configs/default.json] [--out DIR] [--workers N]
"""
import argparse
import json

from shapebench.harness import MEASURES, load_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/default.json")
    ap.add_argument("--out")
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    cfg = load_config(args.config)
    result = run_experiment(cfg, out_dir=args.out, workers=args.workers)
    b = result.benchmark
    print(f"reference: {b.y_star!r} kWh at {b.x_star.tolist()} ({b.source})")
    print(f"{'algo':<6}{'measure':<18}{'min':>10}{'q1':>10}{'median':>10}{'q3':>10}{'max':>10}{'std':>10}")
    for spec in cfg.algorithms:
        for m in MEASURES:
            s = result.summary.get((spec.label, m))
            if s is None:
                continue
            print(f"{spec.label:<6}{m:<18}" + "".join(
                f"{v:>10.3f}" for v in (s.min, s.q1, s.median, s.q3, s.max, s.std)))
        if spec.label in result.mape_by_algo:
            print(f"{spec.label:<6}{'mape_pct':<18}{result.mape_by_algo[spec.label]:>10.3f}")
    print(json.dumps(result.observations, indent=2, sort_keys=True))
    print(f"results written to {result.out_dir}")


if __name__ == "__main__":
    main()
