"""Replication benchmark harness for the synthetic generators.

Runs R independent replications of generate / fit / predict for the adaptive
and fixed-bandwidth classifiers, then aggregates accuracy, macro precision,
and macro specificity (mean and sd over replications), per-class variable
detection frequencies, mean bandwidth profiles, and their within-class
z-scores. Detection works from each class's own training rows: the shrunk
bandwidth matrix of a class evaluated at its training samples feeds the
ANOVA/Tukey selection, once per replication, and the detection frequency of
a variable is the fraction of replications that selected it.

Reports are deterministic for a given config: generation uses counter-based
substreams, aggregation follows fixed orders, and the JSON rendering sorts
keys, so reruns and thread-count changes produce byte-identical files. Wall
times are measured and shown in the table rendering but are excluded from
JSON unless explicitly requested, since timing can never be reproducible.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bandwidths import ShrinkParams, bandwidth_matrix
from .classify import fit, predict_batch
from .datagen import Example2Config, add_noise_columns, example1, example2
from .selection import select_relevant

__all__ = [
    "ExperimentConfig",
    "MethodSummary",
    "ReplicationReport",
    "confusion_metrics",
    "bandwidth_zscores",
    "run_replications",
]

_DEFAULT_FIXED_H = 0.4


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark specification.

    ``example`` picks the generator (1 or 2); ``classes`` restricts the
    second generator to a subset of its 1-based class ids;
    ``noise_columns`` appends that many standard normal columns to both
    splits; ``methods`` is any nonempty subset of ("adaptive", "fixed").
    """

    example: int
    reps: int
    seed: int
    n_train: int = 150
    n_test: int = 100
    classes: tuple | None = None
    noise_columns: int = 0
    fixed_h: float = _DEFAULT_FIXED_H
    alpha: float = 0.05
    params: ShrinkParams = field(default_factory=ShrinkParams)
    uniform_priors: bool = False
    methods: tuple = ("adaptive", "fixed")
    threads: int | None = None

    def __post_init__(self) -> None:
        if self.example not in (1, 2):
            raise ValueError("example must be 1 or 2")
        if self.example == 1 and self.classes is not None:
            raise ValueError("class subsets only apply to example 2")
        if self.reps < 1:
            raise ValueError("need at least one replication")
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not self.methods or any(m not in ("adaptive", "fixed") for m in self.methods):
            raise ValueError("methods must be a nonempty subset of adaptive/fixed")
        if "fixed" in self.methods and not (self.fixed_h > 0 and math.isfinite(self.fixed_h)):
            raise ValueError("fixed_h must be positive and finite")
        if self.noise_columns < 0:
            raise ValueError("noise_columns must be non-negative")

    def to_dict(self) -> dict:
        return {
            "example": self.example,
            "reps": self.reps,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "classes": list(self.classes) if self.classes is not None else None,
            "noise_columns": self.noise_columns,
            "fixed_h": self.fixed_h,
            "alpha": self.alpha,
            "params": {
                "c0": self.params.c0,
                "gamma": self.params.gamma,
                "h_min": self.params.h_min,
                "max_steps": self.params.max_steps,
                "raw_variance": self.params.raw_variance,
            },
            "uniform_priors": self.uniform_priors,
            "methods": list(self.methods),
        }


@dataclass
class MethodSummary:
    """Mean/sd of the per-replication metrics for one method."""

    accuracy_mean: float
    accuracy_sd: float
    precision_mean: float
    precision_sd: float
    specificity_mean: float
    specificity_sd: float
    seconds_mean: float
    seconds_sd: float
    zero_precision_classes: int  # replications-times-classes with no predictions

    def to_dict(self, include_timing: bool) -> dict:
        doc = {
            "accuracy": {"mean": self.accuracy_mean, "sd": self.accuracy_sd},
            "precision": {"mean": self.precision_mean, "sd": self.precision_sd},
            "specificity": {"mean": self.specificity_mean, "sd": self.specificity_sd},
            "zero_precision_classes": self.zero_precision_classes,
        }
        if include_timing:
            doc["seconds"] = {"mean": self.seconds_mean, "sd": self.seconds_sd}
        return doc


@dataclass
class ReplicationReport:
    """Aggregated outcome of a benchmark run."""

    config: ExperimentConfig
    labels: list[str]
    n_variables: int
    completed: int
    failures: list[str]
    methods: dict
    rows: list[dict]
    detection: dict
    mean_bandwidths: dict
    z_scores: dict
    z_zero_spread: dict
    selection_skipped: int

    def to_dict(self, include_timing: bool = False) -> dict:
        return {
            "schema_version": 1,
            "kind": "kdclass-bench",
            "config": self.config.to_dict(),
            "labels": self.labels,
            "n_variables": self.n_variables,
            "replications": {"requested": self.config.reps, "completed": self.completed},
            "failures": self.failures,
            "methods": {
                name: summary.to_dict(include_timing)
                for name, summary in self.methods.items()
            },
            "detection": self.detection,
            "mean_bandwidths": self.mean_bandwidths,
            "z_scores": self.z_scores,
            "z_zero_spread": self.z_zero_spread,
            "selection_skipped": self.selection_skipped,
        }

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=1) + "\n"

    def to_table(self) -> str:
        lines = []
        cfg = self.config
        subset = f" classes={list(cfg.classes)}" if cfg.classes else ""
        noise = f" noise_columns={cfg.noise_columns}" if cfg.noise_columns else ""
        lines.append(
            f"example {cfg.example}{subset}{noise}  reps={self.completed}/{cfg.reps}"
            f"  seed={cfg.seed}  n_train={cfg.n_train}  n_test={cfg.n_test}"
        )
        lines.append("")
        lines.append(f"{'method':<10} {'accuracy':>16} {'precision':>16} {'specificity':>16} {'seconds':>12}")
        for name, s in self.methods.items():
            lines.append(
                f"{name:<10} "
                f"{s.accuracy_mean:>8.4f} ({s.accuracy_sd:.4f}) "
                f"{s.precision_mean:>8.4f} ({s.precision_sd:.4f}) "
                f"{s.specificity_mean:>8.4f} ({s.specificity_sd:.4f}) "
                f"{s.seconds_mean:>8.2f}s"
            )
        if self.detection:
            lines.append("")
            lines.append("variable detection frequency by class (adaptive):")
            for lab in self.labels:
                freqs = self.detection[lab]
                picked = [f"x{j + 1}:{freqs[j]:.2f}" for j in range(len(freqs)) if freqs[j] > 0]
                lines.append(f"  class {lab}: " + (" ".join(picked) if picked else "(none)"))
        if self.failures:
            lines.append("")
            lines.append(f"failures ({len(self.failures)}):")
            lines.extend(f"  {msg}" for msg in self.failures)
        return "\n".join(lines) + "\n"

    def rows_csv(self) -> str:
        header = "replication,method,accuracy,precision,specificity,seconds"
        out = [header]
        for row in self.rows:
            out.append(
                f"{row['replication']},{row['method']},{row['accuracy']!r},"
                f"{row['precision']!r},{row['specificity']!r},{row['seconds']!r}"
            )
        return "\n".join(out) + "\n"


def confusion_metrics(truth: list[str], predicted: list[str], labels: list[str]):
    """Accuracy, macro precision, macro specificity, zero-prediction count.

    Classes never predicted contribute precision 0 and are counted in the
    fourth return value rather than dropped.
    """
    if len(truth) != len(predicted) or not truth:
        raise ValueError("truth and predictions must be equal-length and non-empty")
    index = {lab: i for i, lab in enumerate(labels)}
    c = len(labels)
    conf = np.zeros((c, c), dtype=np.int64)
    for t, p in zip(truth, predicted):
        if t not in index or p not in index:
            raise ValueError(f"label {t!r}/{p!r} not covered by the model labels")
        conf[index[t], index[p]] += 1
    total = int(conf.sum())
    accuracy = float(np.trace(conf)) / total
    precisions, specificities = [], []
    zero_pred = 0
    for i in range(c):
        col = conf[:, i].sum()
        row = conf[i, :].sum()
        tp = conf[i, i]
        if col == 0:
            zero_pred += 1
            precisions.append(0.0)
        else:
            precisions.append(float(tp) / col)
        fp = col - tp
        tn = total - row - fp
        specificities.append(float(tn) / (total - row) if total - row > 0 else 0.0)
    return accuracy, float(np.mean(precisions)), float(np.mean(specificities)), zero_pred


def bandwidth_zscores(values) -> tuple[np.ndarray, bool]:
    """Standardize a bandwidth vector across variables.

    Returns the z-scores and a flag set when the spread is zero (z-scores
    are then all zero rather than undefined).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.shape[0] < 2:
        raise ValueError("need at least 2 values to standardize")
    sd = float(np.std(v, ddof=1))
    if sd == 0.0:
        return np.zeros_like(v), True
    return (v - v.mean()) / sd, False


def _mean_sd(values: list[float]) -> tuple[float, float]:
    if len(values) == 1:
        return float(values[0]), 0.0
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std(ddof=1))


def _generate(cfg: ExperimentConfig, rep: int):
    if cfg.example == 1:
        train, test = example1(cfg.seed, cfg.n_train, cfg.n_test, replication=rep)
    else:
        e2cfg = Example2Config(class_subset=cfg.classes)
        train, test = example2(cfg.seed, e2cfg, cfg.n_train, cfg.n_test, replication=rep)
    if cfg.noise_columns:
        train = add_noise_columns(train, cfg.noise_columns, cfg.seed, rep, channel=0)
        test = add_noise_columns(test, cfg.noise_columns, cfg.seed, rep, channel=1)
    return train, test


def run_replications(cfg: ExperimentConfig) -> ReplicationReport:
    """Run the configured benchmark.

    A replication that raises is recorded in ``failures`` and skipped in all
    aggregates; at least one replication must succeed.
    """
    labels: list[str] = []
    d = 0
    per_method: dict = {m: {"accuracy": [], "precision": [], "specificity": [], "seconds": [], "zero": 0} for m in cfg.methods}
    rows: list[dict] = []
    failures: list[str] = []
    det_hits: dict = {}
    bw_sums: dict = {}
    z_sums: dict = {}
    z_zero: dict = {}
    selection_skipped = 0
    completed = 0

    for rep in range(cfg.reps):
        try:
            train, test = _generate(cfg, rep)
            model = fit(train, cfg.params, cfg.uniform_priors)
            if not labels:
                labels = model.labels
                d = model.d
                for lab in labels:
                    det_hits[lab] = np.zeros(d)
                    bw_sums[lab] = np.zeros(d)
                    z_sums[lab] = np.zeros(d)
                    z_zero[lab] = 0

            rep_metrics = {}
            for method in cfg.methods:
                t0 = time.perf_counter()
                if method == "adaptive":
                    preds = predict_batch(test.X, model, "adaptive", threads=cfg.threads)
                else:
                    preds = predict_batch(
                        test.X, model, "fixed", fixed_h=cfg.fixed_h, threads=cfg.threads
                    )
                seconds = time.perf_counter() - t0
                acc, prec, spec, zero = confusion_metrics(
                    test.labels, [p.label for p in preds], labels
                )
                rep_metrics[method] = (acc, prec, spec, seconds, zero)

            rep_selection = []
            rep_skipped = 0
            if "adaptive" in cfg.methods:
                for lab in labels:
                    class_rows = train.rows_for(lab)
                    if class_rows.shape[0] < 2:
                        rep_skipped += 1
                        continue
                    rows_bw, _, _ = bandwidth_matrix(class_rows, class_rows, model.params)
                    sel = select_relevant(rows_bw, cfg.alpha)
                    mean_bw = rows_bw.mean(axis=0)
                    z, zero_flag = bandwidth_zscores(mean_bw)
                    rep_selection.append((lab, sel.relevant, mean_bw, z, zero_flag))
        except Exception as exc:  # noqa: BLE001 - per-replication isolation
            failures.append(f"replication {rep}: {exc}")
            continue

        completed += 1
        selection_skipped += rep_skipped
        for lab, relevant, mean_bw, z, zero_flag in rep_selection:
            for j in relevant:
                det_hits[lab][j] += 1
            bw_sums[lab] += mean_bw
            z_sums[lab] += z
            z_zero[lab] += int(zero_flag)
        for method, (acc, prec, spec, seconds, zero) in rep_metrics.items():
            per_method[method]["accuracy"].append(acc)
            per_method[method]["precision"].append(prec)
            per_method[method]["specificity"].append(spec)
            per_method[method]["seconds"].append(seconds)
            per_method[method]["zero"] += zero
            rows.append(
                {
                    "replication": rep,
                    "method": method,
                    "accuracy": acc,
                    "precision": prec,
                    "specificity": spec,
                    "seconds": seconds,
                }
            )

    if completed == 0:
        raise RuntimeError(
            "all replications failed; first failure: " + (failures[0] if failures else "?")
        )

    methods = {}
    for m in cfg.methods:
        acc_m, acc_s = _mean_sd(per_method[m]["accuracy"])
        pre_m, pre_s = _mean_sd(per_method[m]["precision"])
        spe_m, spe_s = _mean_sd(per_method[m]["specificity"])
        sec_m, sec_s = _mean_sd(per_method[m]["seconds"])
        methods[m] = MethodSummary(
            accuracy_mean=acc_m, accuracy_sd=acc_s,
            precision_mean=pre_m, precision_sd=pre_s,
            specificity_mean=spe_m, specificity_sd=spe_s,
            seconds_mean=sec_m, seconds_sd=sec_s,
            zero_precision_classes=per_method[m]["zero"],
        )

    detection = {}
    mean_bw = {}
    z_scores = {}
    if "adaptive" in cfg.methods:
        for lab in labels:
            detection[lab] = [float(v) / completed for v in det_hits[lab]]
            mean_bw[lab] = [float(v) / completed for v in bw_sums[lab]]
            z_scores[lab] = [float(v) / completed for v in z_sums[lab]]

    return ReplicationReport(
        config=cfg,
        labels=labels,
        n_variables=d,
        completed=completed,
        failures=failures,
        methods=methods,
        rows=rows,
        detection=detection,
        mean_bandwidths=mean_bw,
        z_scores=z_scores,
        z_zero_spread={lab: z_zero.get(lab, 0) for lab in labels} if "adaptive" in cfg.methods else {},
        selection_skipped=selection_skipped,
    )
