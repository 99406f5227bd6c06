#!/usr/bin/env python3
"""Desk-scale comparison of ddpg / fh-ddpg / fh-ddpg-ss at equal budget.

Trains each algorithm on the same synthetic leader traces over several seeds,
evaluates on the held-out split, and prints per-follower and sum performance
plus convergence-curve dispersion. Artifacts (curves, reports) land in the
output directory.
"""
import argparse
import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from platoonrl.config import RunConfig, replace
from platoonrl.data import generate_synthetic, split
from platoonrl.evaluate import evaluate, write_report
from platoonrl.training import save_curve, train_run

ALGOS = ("ddpg", "fh-ddpg", "fh-ddpg-ss")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--episodes", type=int, default=None,
                        help="override the desk episode budget")
    parser.add_argument("--traces", type=int, default=60)
    parser.add_argument("--data-seed", type=int, default=2024)
    parser.add_argument("--out", default="comparison_out")
    args = parser.parse_args()

    cfg0 = RunConfig().desk()
    if args.episodes:
        cfg0 = replace(cfg0, training=replace(cfg0.training,
                                              episodes=args.episodes))
    traces = generate_synthetic(args.traces, cfg0.platoon, args.data_seed)
    train_traces, test_traces = split(traces, 0.8, args.data_seed)
    os.makedirs(args.out, exist_ok=True)

    table = {}
    for algo in ALGOS:
        per_seed = []
        for seed in args.seeds:
            cfg = replace(cfg0, algo=algo, seed=seed)
            result = train_run(cfg, train_traces, test_traces)
            report, _ = evaluate(result.policies, test_traces,
                                 len(test_traces), cfg.platoon, cfg.reward)
            tag = f"{algo}_seed{seed}"
            save_curve(result.curve, os.path.join(args.out, f"curve_{tag}.csv"))
            write_report(report, os.path.join(args.out, f"report_{tag}.json"))
            per_seed.append(report)
            print(f"{algo} seed {seed}: sum {report.sum_mean:.4f}  "
                  + "  ".join(f"f{i}={report.per_follower[i].mean:.4f}"
                              for i in sorted(report.per_follower)))
        table[algo] = per_seed

    print("\n=== median sum performance over seeds ===")
    medians = {algo: float(np.median([r.sum_mean for r in reports]))
               for algo, reports in table.items()}
    for algo in ALGOS:
        print(f"{algo:12s} {medians[algo]:8.4f}")
    ranking = sorted(medians, key=medians.get, reverse=True)
    print("ranking (best first):", " > ".join(ranking))
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump({"medians": medians, "ranking": ranking}, fh, indent=1)


if __name__ == "__main__":
    main()
