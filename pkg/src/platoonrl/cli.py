"""Command-line front end: training, evaluation, experiments, artifacts."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import data as data_mod
from .config import ALGORITHMS, RunConfig, load_config, replace, save_config
from .ddpg import AuditLog
from .evaluate import clip_for_policies, evaluate, string_stability_experiment, \
    write_report
from .fh import BOX_DIMS
from .lqr import threshold_report
from .policies import load_platoon_policies, save_platoon_policies
from .training import save_curve, train_run
from .util import fmt


def _add_common(parser):
    parser.add_argument("--config", default="default",
                        help="config file path, or 'default'")
    parser.add_argument("--preset", choices=["paper", "desk"], default=None,
                        help="built-in scaling preset applied to the config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig() if args.config == "default" else load_config(args.config)
    if args.preset == "desk":
        cfg = cfg.desk()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "algo", None):
        cfg = replace(cfg, algo=args.algo)
    return cfg


def _load_or_generate_traces(args, cfg):
    if args.traces:
        return data_mod.load_traces(args.traces, cfg.platoon)
    n = args.synthetic_episodes
    print(f"no --traces given; generating {n} synthetic leader traces "
          f"(seed {cfg.seed})")
    return data_mod.generate_synthetic(n, cfg.platoon, cfg.seed)


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    if args.episodes:
        cfg = replace(cfg, training=replace(cfg.training,
                                            episodes=args.episodes))
    traces = _load_or_generate_traces(args, cfg)
    train, test = data_mod.split(traces, args.split_ratio, cfg.seed)
    if not train or not test:
        print("error: train/test split left one side empty", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    save_config(cfg, os.path.join(args.out, "config.ini"))
    audit = AuditLog()
    result = train_run(cfg, train, test, audit=audit)
    save_platoon_policies(result.policies, os.path.join(args.out, "policies"))
    save_curve(result.curve, os.path.join(args.out, "training_curve.csv"))
    if result.boxes is not None:
        _save_boxes(result.boxes, os.path.join(args.out, "boxes.csv"))
    finals = [row for row in result.curve
              if row["episode"] == result.curve[-1]["episode"]]
    summary = ", ".join(f"f{row['follower']}={row['eval_return']:.4f}"
                        for row in finals)
    print(f"trained {cfg.algo} (seed {cfg.seed}); final eval returns: {summary}")
    print(f"artifacts in {args.out}")
    return 0


def _save_boxes(boxes, path):
    import csv as _csv
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["follower", "step", "dim", "min", "max"])
        for i, follower_boxes in enumerate(boxes, start=1):
            for k, box in enumerate(follower_boxes):
                if box is None:
                    continue
                for d, name in enumerate(BOX_DIMS):
                    writer.writerow([i, k, name, fmt(box.lo[d]),
                                     fmt(box.hi[d])])


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    try:
        policies = load_platoon_policies(os.path.join(args.policies, "policies")
                                         if os.path.isdir(os.path.join(
                                             args.policies, "policies"))
                                         else args.policies)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load policies: {exc}", file=sys.stderr)
        return 1
    traces = _load_or_generate_traces(args, cfg)
    if args.episodes > len(traces):
        print(f"error: {args.episodes} episodes requested, "
              f"{len(traces)} traces available", file=sys.stderr)
        return 1
    clip = clip_for_policies(cfg, policies)
    report, _ = evaluate(policies, traces, args.episodes, cfg.platoon,
                         cfg.reward, jerk_clip_spec=clip,
                         log_dir=args.logs, workers=args.workers)
    write_report(report, args.report)
    print(f"evaluated {args.episodes} episodes: "
          f"sum performance {report.sum_mean:.4f}, "
          f"min headway {report.min_headway:.2f} m, "
          f"collision={report.collision}")
    print(f"report written to {args.report}")
    return 0


def cmd_stability(args) -> int:
    cfg = _resolve_config(args)
    try:
        policies = load_platoon_policies(os.path.join(args.policies, "policies")
                                         if os.path.isdir(os.path.join(
                                             args.policies, "policies"))
                                         else args.policies)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load policies: {exc}", file=sys.stderr)
        return 1
    clip = clip_for_policies(cfg, policies)
    outcome = string_stability_experiment(policies, cfg.platoon, cfg.reward,
                                          jerk_clip_spec=clip)
    doc = {
        "peak_ev": outcome["peak_ev"],
        "peak_ep": outcome["peak_ep"],
        "ev_attenuating": outcome["ev_attenuating"],
        "ep_attenuating": outcome["ep_attenuating"],
    }
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    peaks = ", ".join(f"{p:.4f}" for p in outcome["peak_ev"])
    print(f"peak |e_v| per follower: {peaks}")
    print("string stable (velocity): "
          f"{outcome['ev_attenuating']}; report written to {args.report}")
    return 0


def cmd_lqr(args) -> int:
    cfg = _resolve_config(args)
    report = threshold_report(cfg.platoon, cfg.reward, tol=args.tol)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
    print(f"stationarity threshold m = {report['stationary_threshold']} "
          f"at tolerance {args.tol} (configured m = {cfg.stationary_steps})")
    print(f"report written to {args.report}")
    return 0


def cmd_gen_traces(args) -> int:
    cfg = _resolve_config(args)
    traces = data_mod.generate_synthetic(args.episodes, cfg.platoon, cfg.seed)
    data_mod.save_traces(traces, args.out)
    print(f"wrote {len(traces)} synthetic traces to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platoonrl",
        description="Platoon control: finite-horizon DRL training and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a control policy per follower")
    _add_common(p)
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--out", required=True, help="output artifact directory")
    p.add_argument("--traces", default=None, help="leader trace CSV")
    p.add_argument("--synthetic-episodes", type=int, default=50)
    p.add_argument("--split-ratio", type=float, default=0.8)
    p.add_argument("--episodes", type=int, default=None,
                   help="override training episodes")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate trained policies on test traces")
    _add_common(p)
    p.add_argument("--policies", required=True,
                   help="policy directory (train output)")
    p.add_argument("--traces", default=None)
    p.add_argument("--synthetic-episodes", type=int, default=200)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--report", default="eval_report.json")
    p.add_argument("--logs", default=None,
                   help="directory for per-episode CSV logs")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stability",
                       help="leader acceleration pulse experiment")
    _add_common(p)
    p.add_argument("--policies", required=True)
    p.add_argument("--report", default="stability_report.json")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("lqr", help="gain-stationarity analysis")
    _add_common(p)
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--report", default="lqr_report.json")
    p.set_defaults(func=cmd_lqr)

    p = sub.add_parser("gen-traces", help="write synthetic leader traces")
    _add_common(p)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_traces)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
