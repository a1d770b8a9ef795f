"""Artifact construction: round/summary/compare/sweep CSVs and job execution.

Every artifact is built as an in-memory string with a sha256 digest, so the
service can hand complete files to any client and a rerun of the same config
reproduces byte-identical content. Floats are written with ``repr`` (shortest
round-trip form); CSVs are RFC-4180 style with a header row and LF line ends.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .accounting import cohens_d, welch_t
from .config import RunConfig, resolve_config
from .federation import (
    ExperimentConfig,
    ExperimentResult,
    Method,
    RoundMetrics,
    run_experiment,
)

ROUNDS_HEADER = [
    "round_index",
    "selected",
    "epochs",
    "sim_time_s",
    "comm_mb",
    "val_accuracy",
    "val_macro_f1",
    "val_balanced_acc",
    "jain",
    "energy_proxy_total",
]

SUMMARY_METRICS = [
    "final_accuracy",
    "final_macro_f1",
    "final_balanced_acc",
    "final_jain",
    "time_total_s",
    "time_per_round_s",
    "comm_total_mb",
    "energy_total",
]


def _fmt(x: float) -> str:
    return repr(float(x))


def _ids(ids: Sequence[int]) -> str:
    return ";".join(str(i) for i in ids)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def rounds_csv_text(series: Sequence[RoundMetrics]) -> str:
    rows = [
        [
            str(m.round_index),
            _ids(m.selected),
            _ids(m.epochs),
            _fmt(m.sim_time_s),
            _fmt(m.comm_mb),
            _fmt(m.val_accuracy),
            _fmt(m.val_macro_f1),
            _fmt(m.val_balanced_acc),
            _fmt(m.jain),
            _fmt(m.energy_proxy_total),
        ]
        for m in series
    ]
    return _csv_text(ROUNDS_HEADER, rows)


def summary_csv_text(results: Sequence[ExperimentResult]) -> str:
    header = ["method", "n_seeds", "degenerate"]
    for metric in SUMMARY_METRICS:
        header += [f"{metric}_mean", f"{metric}_std"]
    rows = []
    for res in results:
        row = [
            res.config.method.value,
            str(len(res.config.seeds)),
            str(int(res.summary.degenerate)),
        ]
        for metric in SUMMARY_METRICS:
            row += [_fmt(res.summary.mean[metric]), _fmt(res.summary.std[metric])]
        rows.append(row)
    return _csv_text(header, rows)


def _accuracy_samples(res: ExperimentResult) -> list[float]:
    return [row["final_accuracy"] for row in res.summary.per_seed]


def compare_csv_text(results: Sequence[ExperimentResult]) -> str:
    """Comparison table against the first-listed method as the baseline."""
    header = [
        "method",
        "acc_mean",
        "acc_std",
        "macro_f1_mean",
        "macro_f1_std",
        "balanced_acc_mean",
        "balanced_acc_std",
        "time_total_mean_s",
        "time_total_std_s",
        "comm_total_mb",
        "welch_t_vs_baseline",
        "welch_p_vs_baseline",
        "cohens_d_vs_baseline",
    ]
    baseline = results[0]
    base_acc = _accuracy_samples(baseline)
    rows = []
    for i, res in enumerate(results):
        s = res.summary
        row = [
            res.config.method.value,
            _fmt(s.mean["final_accuracy"]),
            _fmt(s.std["final_accuracy"]),
            _fmt(s.mean["final_macro_f1"]),
            _fmt(s.std["final_macro_f1"]),
            _fmt(s.mean["final_balanced_acc"]),
            _fmt(s.std["final_balanced_acc"]),
            _fmt(s.mean["time_total_s"]),
            _fmt(s.std["time_total_s"]),
            _fmt(s.mean["comm_total_mb"]),
        ]
        if i == 0:
            row += ["", "", ""]
        else:
            acc = _accuracy_samples(res)
            try:
                t, p = welch_t(acc, base_acc)
                d = cohens_d(acc, base_acc)
                row += [_fmt(t), _fmt(p), _fmt(d)]
            except ValueError:
                # Degenerate samples (e.g. both methods produced identical
                # accuracies across seeds); statistics are undefined.
                row += ["", "", ""]
        rows.append(row)
    return _csv_text(header, rows)


def compare_table_text(results: Sequence[ExperimentResult]) -> str:
    """Human-readable aligned comparison table for stdout."""
    headers = ["method", "acc", "macro_f1", "balanced_acc", "time_s", "comm_mb", "p", "d"]
    baseline = results[0]
    base_acc = _accuracy_samples(baseline)
    body = []
    for i, res in enumerate(results):
        s = res.summary
        p_cell, d_cell = "-", "-"
        if i > 0:
            try:
                _, p = welch_t(_accuracy_samples(res), base_acc)
                d = cohens_d(_accuracy_samples(res), base_acc)
                p_cell, d_cell = f"{p:.4f}", f"{d:.3f}"
            except ValueError:
                pass
        body.append(
            [
                res.config.method.value,
                f"{s.mean['final_accuracy']:.4f}±{s.std['final_accuracy']:.4f}",
                f"{s.mean['final_macro_f1']:.4f}±{s.std['final_macro_f1']:.4f}",
                f"{s.mean['final_balanced_acc']:.4f}±{s.std['final_balanced_acc']:.4f}",
                f"{s.mean['time_total_s']:.2f}±{s.std['time_total_s']:.2f}",
                f"{s.mean['comm_total_mb']:.2f}",
                p_cell,
                d_cell,
            ]
        )
    widths = [
        max(len(headers[c]), *(len(row[c]) for row in body)) for c in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[c]) for c, h in enumerate(headers)),
        "  ".join("-" * widths[c] for c in range(len(headers))),
    ]
    lines += ["  ".join(row[c].ljust(widths[c]) for c in range(len(headers))) for row in body]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ArtifactFile:
    name: str
    content: str
    sha256: str


@dataclass(frozen=True)
class JobResult:
    kind: str
    resolved: list[dict]
    files: list[ArtifactFile]
    table: str | None = None


def _artifact(name: str, content: str) -> ArtifactFile:
    digest = hashlib.sha256(content.encode("utf-8")).hexdigest()
    return ArtifactFile(name=name, content=content, sha256=digest)


def _config_dict(experiment: ExperimentConfig) -> dict:
    return dataclasses.asdict(experiment)


def _run_all(configs: Sequence[ExperimentConfig]) -> list[ExperimentResult]:
    return [run_experiment(c) for c in configs]


def _round_files(results: Sequence[ExperimentResult]) -> list[ArtifactFile]:
    files = []
    for res in results:
        for seed in res.config.seeds:
            files.append(
                _artifact(
                    f"rounds_{res.config.method.value}_{seed}.csv",
                    rounds_csv_text(res.rounds_by_seed[seed]),
                )
            )
    return files


def execute_run(cfg: RunConfig, base_dir: Path | None = None) -> JobResult:
    """Run every method in the config; emit per-seed round files + summary."""
    configs = resolve_config(cfg, base_dir)
    results = _run_all(configs)
    files = _round_files(results)
    files.append(_artifact("summary.csv", summary_csv_text(results)))
    return JobResult(
        kind="run",
        resolved=[_config_dict(c) for c in configs],
        files=files,
    )


def execute_compare(cfg: RunConfig, base_dir: Path | None = None) -> JobResult:
    """Run >= 2 methods and emit the comparison table against the first."""
    if len(cfg.methods) < 2:
        raise ValueError("compare requires >= 2 methods")
    configs = resolve_config(cfg, base_dir)
    results = _run_all(configs)
    files = [
        _artifact("compare.csv", compare_csv_text(results)),
        _artifact("summary.csv", summary_csv_text(results)),
    ]
    return JobResult(
        kind="compare",
        resolved=[_config_dict(c) for c in configs],
        files=files,
        table=compare_table_text(results),
    )


def execute_sweep_k(
    cfg: RunConfig, k_values: Sequence[int] | None = None, base_dir: Path | None = None
) -> JobResult:
    """Rerun the first-listed method for each participant count k."""
    values = list(k_values) if k_values is not None else (cfg.k_values or [])
    if not values:
        raise ValueError("sweep-k requires a non-empty k_values list")
    if len(set(values)) != len(values):
        raise ValueError("k_values must be distinct")
    method = cfg.methods[0]
    rows = []
    resolved = []
    for k in values:
        variant = cfg.model_copy(update={"methods": [method], "k": k})
        config = resolve_config(variant, base_dir)[0]
        result = run_experiment(config)
        resolved.append(_config_dict(config))
        s = result.summary
        rows.append(
            [
                str(k),
                _fmt(s.mean["final_accuracy"]),
                _fmt(s.std["final_accuracy"]),
                _fmt(s.mean["comm_total_mb"]),
                _fmt(s.mean["time_total_s"]),
                _fmt(s.std["time_total_s"]),
            ]
        )
    text = _csv_text(
        ["k", "acc_mean", "acc_std", "comm_total_mb", "time_total_mean_s", "time_total_std_s"],
        rows,
    )
    return JobResult(kind="sweep-k", resolved=resolved, files=[_artifact("sweep_k.csv", text)])


def _selection_fingerprint(result: ExperimentResult) -> str:
    first_seed = result.config.seeds[0]
    return _ids(result.rounds_by_seed[first_seed][0].selected)


def execute_sweep_weights(
    cfg: RunConfig,
    alpha_values: Sequence[float] | None = None,
    base_dir: Path | None = None,
) -> JobResult:
    """Rerun the first-listed method for each CPU-weight alpha.

    Each row carries the selected-set fingerprint (first round of the first
    seed) so ranking flips across alphas are visible at the selection level.
    """
    values = list(alpha_values) if alpha_values is not None else list(cfg.alpha_values)
    if not values:
        raise ValueError("sweep-weights requires a non-empty alpha_values list")
    if any(a < 0 for a in values):
        raise ValueError("alpha values must be non-negative")
    method = cfg.methods[0]
    rows = []
    resolved = []
    for alpha in values:
        weights = cfg.weights.model_copy(update={"alpha": alpha})
        variant = cfg.model_copy(update={"methods": [method], "weights": weights})
        config = resolve_config(variant, base_dir)[0]
        result = run_experiment(config)
        resolved.append(_config_dict(config))
        s = result.summary
        rows.append(
            [
                _fmt(alpha),
                _fmt(s.mean["final_accuracy"]),
                _fmt(s.std["final_accuracy"]),
                _selection_fingerprint(result),
            ]
        )
    text = _csv_text(["alpha", "acc_mean", "acc_std", "selected_set"], rows)
    return JobResult(
        kind="sweep-weights", resolved=resolved, files=[_artifact("sweep_weights.csv", text)]
    )
