"""Command-line interface.

Subcommands: ``gen`` (write synthetic train/test CSVs), ``train`` (fit and
save a model), ``predict`` (classify a CSV), ``select`` (per-class relevant
variables from training data), ``plan-size`` (two-stage size plan from a
pilot), ``bench`` (replication benchmark with deterministic JSON reports).

Exit codes: 0 on success, 2 for usage or data errors, 3 for internal
numeric failures. Defaults for ``--alpha``, ``--fixed-h``, ``--threads``,
``--c0``, and ``--gamma`` can be overridden with ``KDCLASS_``-prefixed
environment variables; explicit flags always win.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import secrets
import sys

import numpy as np

from . import __version__
from ._backend import backend_name
from .bandwidths import ShrinkParams, bandwidth_matrix
from .classify import fit, load_model, predict_batch, save_model
from .data import read_csv, read_features, write_csv
from .datagen import Example2Config, add_noise_columns, example1, example2
from .harness import ExperimentConfig, run_replications
from .planning import plan_sizes
from .selection import select_relevant

_ENV_PREFIX = "KDCLASS_"


class _UsageError(Exception):
    pass


def _env_default(name: str, cast, fallback):
    raw = os.environ.get(_ENV_PREFIX + name)
    if raw is None or raw == "":
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise _UsageError(
            f"environment variable {_ENV_PREFIX + name} has invalid value {raw!r}"
        ) from None


def _add_params_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c0", type=float, default=_env_default("C0", float, 10.0),
                   help="initial bandwidth scale c0 (default 10)")
    p.add_argument("--gamma", type=float, default=_env_default("GAMMA", float, 0.9),
                   help="shrink factor in (0,1) (default 0.9)")
    p.add_argument("--h-min", type=float, default=None,
                   help="bandwidth floor (default h0*gamma**100)")
    p.add_argument("--max-steps", type=int, default=200,
                   help="shrink cap per coordinate (default 200)")
    p.add_argument("--raw-variance", action="store_true",
                   help="threshold on the raw term spread instead of the mean's")


def _params_from(args) -> ShrinkParams:
    return ShrinkParams(
        c0=args.c0, gamma=args.gamma, h_min=args.h_min,
        max_steps=args.max_steps, raw_variance=args.raw_variance,
    )


def _alpha_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=_env_default("ALPHA", float, 0.05),
                   help="significance level for selection (default 0.05)")


def _threads_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=_env_default("THREADS", int, None),
                   help="worker threads for prediction (output is identical)")


def _classes_tuple(raw: str | None):
    if raw is None:
        return None
    try:
        ids = tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError:
        raise _UsageError(f"--classes expects comma-separated integers, got {raw!r}") from None
    if not ids:
        raise _UsageError("--classes must name at least one class")
    return ids


def cmd_gen(args) -> int:
    seed = args.seed
    if seed is None:
        seed = secrets.randbelow(2**63)
        print(f"seed: {seed}")
    if args.example == 1:
        if args.classes is not None:
            raise _UsageError("--classes only applies to --example 2")
        train, test = example1(seed, args.n_train, args.n_test, args.replication)
    else:
        cfg = Example2Config(class_subset=_classes_tuple(args.classes))
        train, test = example2(seed, cfg, args.n_train, args.n_test, args.replication)
    if args.noise_columns:
        train = add_noise_columns(train, args.noise_columns, seed, args.replication, channel=0)
        test = add_noise_columns(test, args.noise_columns, seed, args.replication, channel=1)
    write_csv(args.out_train, train)
    write_csv(args.out_test, test)
    print(f"wrote {args.out_train} ({train.n} rows) and {args.out_test} ({test.n} rows)")
    return 0


def cmd_train(args) -> int:
    data = read_csv(args.data)
    model = fit(data, _params_from(args), uniform_priors=args.uniform_priors)
    save_model(args.out, model)
    sizes = ", ".join(f"{lab}:{n}" for lab, n in zip(model.labels, model.class_sizes))
    print(f"fitted {len(model.labels)} classes ({sizes}), d={model.d} -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    X, truth = read_features(args.data)
    if X.shape[1] != model.d:
        raise _UsageError(f"{args.data}: has {X.shape[1]} features, model expects {model.d}")
    mode = "fixed" if args.fixed_h is not None else "adaptive"
    preds = predict_batch(X, model, mode, fixed_h=args.fixed_h, threads=args.threads)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"p_{lab}" for lab in model.labels])
        for p in preds:
            writer.writerow([p.label] + [repr(float(v)) for v in p.posteriors])
    print(f"wrote {args.out} ({len(preds)} rows, mode={mode})")
    if truth is not None:
        acc = float(np.mean([p.label == t for p, t in zip(preds, truth)]))
        print(f"accuracy: {acc:.4f}")
    return 0


def cmd_select(args) -> int:
    data = read_csv(args.data)
    params = _params_from(args)
    result = {}
    for lab in data.class_order():
        rows = data.rows_for(lab)
        H, _, _ = bandwidth_matrix(rows, rows, params)
        sel = select_relevant(H, args.alpha)
        result[lab] = sel
        names = " ".join(f"x{j + 1}" for j in sel.relevant) or "(none)"
        flag = "  [degenerate]" if sel.degenerate else ""
        print(f"class {lab}: {names}{flag}")
    if args.out:
        doc = {
            "schema_version": 1,
            "kind": "kdclass-selection",
            "alpha": args.alpha,
            "classes": {
                lab: {
                    "relevant": [j + 1 for j in sel.relevant],
                    "means": [float(v) for v in sel.means],
                    "f_stat": sel.f_stat if math.isfinite(sel.f_stat) else None,
                    "anova_rejected": sel.anova_rejected,
                    "degenerate": sel.degenerate,
                }
                for lab, sel in result.items()
            },
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0


def cmd_plan_size(args) -> int:
    data = read_csv(args.data)
    params = _params_from(args)
    model = fit(data, params)
    selections = []
    for group in model.groups:
        H, _, _ = bandwidth_matrix(group.samples, group.samples, params)
        selections.append(select_relevant(H, args.alpha))
    plan = plan_sizes(model, selections, args.epsilon, args.n_total)
    print(f"{'class':<8} {'n_now':>6} {'n_plan':>7} {'r_hat':>5}  {'B':>12}")
    for alloc in plan.classes:
        b = f"{alloc.b_value:.6g}" if alloc.b_value is not None else "-"
        mark = "  [uniform share]" if alloc.uniform_share else ""
        print(f"{alloc.label:<8} {alloc.n_current:>6} {alloc.n_planned:>7} {alloc.r_hat:>5}  {b:>12}{mark}")
    print(f"feasible: {plan.feasible} (epsilon={plan.epsilon}, n_total={plan.n_total})")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(plan.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    methods = tuple(tok.strip() for tok in args.methods.split(",") if tok.strip())
    cfg = ExperimentConfig(
        example=args.example,
        reps=args.reps,
        seed=args.seed,
        n_train=args.n_train,
        n_test=args.n_test,
        classes=_classes_tuple(args.classes),
        noise_columns=args.noise_columns,
        fixed_h=args.fixed_h if args.fixed_h is not None else 0.4,
        alpha=args.alpha,
        params=_params_from(args),
        uniform_priors=args.uniform_priors,
        methods=methods,
        threads=args.threads,
    )
    report = run_replications(cfg)
    if args.format == "table":
        sys.stdout.write(report.to_table())
    else:
        sys.stdout.write(report.to_json(include_timing=args.include_timing))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json(include_timing=args.include_timing))
    if args.rows:
        with open(args.rows, "w") as fh:
            fh.write(report.rows_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdclass",
        description="Kernel density classification with per-query adaptive bandwidths",
    )
    parser.add_argument("--version", action="version",
                        version=f"kdclass {__version__} ({backend_name()} backend)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write synthetic train/test CSVs")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="generator seed (default: fresh, printed)")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--n-train", type=int, default=150, help="rows per class (train)")
    p.add_argument("--n-test", type=int, default=100, help="rows per class (test)")
    p.add_argument("--classes", default=None,
                   help="comma-separated class ids (example 2 only)")
    p.add_argument("--noise-columns", type=int, default=0,
                   help="append this many standard normal columns")
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="fit a model from a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--uniform-priors", action="store_true")
    _add_params_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify rows of a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fixed-h", type=float, default=None,
                   help="use the fixed-bandwidth baseline with this h")
    _threads_arg(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select", help="per-class relevant variables from a labeled CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None, help="optional JSON output path")
    _alpha_arg(p)
    _add_params_args(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("plan-size", help="plan per-class training sizes from a pilot CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--epsilon", type=float, required=True, help="target error budget")
    p.add_argument("--n-total", type=int, required=True, help="total training budget")
    p.add_argument("--out", default=None, help="optional JSON output path")
    _alpha_arg(p)
    _add_params_args(p)
    p.set_defaults(func=cmd_plan_size)

    p = sub.add_parser("bench", help="replication benchmark with deterministic reports")
    p.add_argument("--example", type=int, choices=(1, 2), required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, required=True,
                   help="required: reports must be reproducible")
    p.add_argument("--n-train", type=int, default=150)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--classes", default=None,
                   help="comma-separated class ids (example 2 only)")
    p.add_argument("--noise-columns", type=int, default=0)
    p.add_argument("--fixed-h", type=float,
                   default=_env_default("FIXED_H", float, None),
                   help="baseline bandwidth (default 0.4)")
    p.add_argument("--methods", default="adaptive,fixed",
                   help="comma-separated subset of adaptive,fixed")
    p.add_argument("--format", choices=("json", "table"), default="table",
                   help="stdout format (default table)")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--rows", default=None, help="write per-replication CSV here")
    p.add_argument("--include-timing", action="store_true",
                   help="include wall times in JSON (breaks byte reproducibility)")
    p.add_argument("--uniform-priors", action="store_true")
    _alpha_arg(p)
    _threads_arg(p)
    _add_params_args(p)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
