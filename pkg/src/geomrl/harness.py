"""Experiment runner: per-seed fan-out, CSV export and adapter comparison."""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ExperimentConfig
from .envs import make_env
from .optimizers.training import CurveRecord, LearningCurve, train_seed
from .policy import applicable_adapters

CURVE_HEADER = ("seed", "rollout_index", "return", "evaluation_return")
COMPARE_HEADER = ("adapter",) + CURVE_HEADER


def _fmt(x: float | None) -> str:
    # repr round-trips a float exactly
    return "" if x is None else repr(float(x))


def write_curve_csv(path, records: Iterable[CurveRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for r in records:
            w.writerow([r.seed, r.rollout_index, _fmt(r.return_), _fmt(r.evaluation_return)])


def write_compare_csv(path, curves: dict[str, LearningCurve]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARE_HEADER)
        for adapter, curve in curves.items():
            for r in curve.records:
                w.writerow([adapter, r.seed, r.rollout_index, _fmt(r.return_),
                            _fmt(r.evaluation_return)])


def read_curve_csv(path) -> list[tuple[str | None, CurveRecord]]:
    """Parse a file written by :func:`write_curve_csv` or :func:`write_compare_csv`.

    Returns ``(adapter, record)`` pairs; ``adapter`` is None for plain run output.
    """
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header not in (CURVE_HEADER, COMPARE_HEADER):
            raise ValueError(f"unexpected CSV header {header}")
        tagged = header == COMPARE_HEADER
        for row in reader:
            adapter = row[0] if tagged else None
            seed, idx, ret, ev = row[1:] if tagged else row
            rec = CurveRecord(int(seed), int(idx), float(ret), float(ev) if ev else None)
            out.append((adapter, rec))
    return out


def default_jobs() -> int:
    return os.cpu_count() or 1


def _task(args) -> LearningCurve:
    cfg, seed, adapter = args
    return train_seed(cfg, seed, adapter)


def _map(tasks: Sequence[tuple], jobs: int) -> list[LearningCurve]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        # map keeps submission order, so output order is independent of scheduling
        return list(pool.map(_task, tasks))


def _merge(curves: Sequence[LearningCurve]) -> LearningCurve:
    merged = LearningCurve()
    for c in curves:
        merged.extend(c)
    return merged


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> LearningCurve:
    """Train every seed of ``cfg`` (in parallel if ``jobs > 1``)."""
    return _merge(_map([(cfg, s, None) for s in cfg.seeds], jobs))


def compare_adapters(cfg: ExperimentConfig, jobs: int = 1,
                     adapters: Sequence[str] | None = None) -> dict[str, LearningCurve]:
    """Run ``cfg`` under GRL and every applicable baseline with the same seeds."""
    if adapters is None:
        probe = make_env(cfg.env.kind, np.random.default_rng(0), **cfg.env.params)
        adapters = applicable_adapters(probe.factors)
    tasks = [(cfg, s, a) for a in adapters for s in cfg.seeds]
    curves = _map(tasks, jobs)
    n = len(cfg.seeds)
    return {a: _merge(curves[k * n:(k + 1) * n]) for k, a in enumerate(adapters)}


def final_evaluations(records: Iterable[CurveRecord]) -> dict[int, float]:
    """Last evaluation return per seed."""
    last: dict[int, tuple[int, float]] = {}
    for r in records:
        if r.evaluation_return is None:
            continue
        if r.seed not in last or r.rollout_index >= last[r.seed][0]:
            last[r.seed] = (r.rollout_index, r.evaluation_return)
    return {s: v for s, (_, v) in sorted(last.items())}


@dataclass(frozen=True)
class SummaryRow:
    adapter: str
    mean: float
    std: float
    n: int


def summarize(curves: dict[str, LearningCurve]) -> list[SummaryRow]:
    """Mean and (population) std of the final evaluation return per adapter."""
    rows = []
    for adapter, curve in curves.items():
        vals = np.array(list(final_evaluations(curve.records).values()))
        mean = float(vals.mean()) if vals.size else math.nan
        std = float(vals.std()) if vals.size else math.nan
        rows.append(SummaryRow(adapter, mean, std, int(vals.size)))
    return rows


def write_summary(path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("adapter", "mean_final_evaluation", "std_final_evaluation", "n_seeds"))
        for r in rows:
            w.writerow((r.adapter, _fmt(r.mean), _fmt(r.std), r.n))


def format_summary(rows: Sequence[SummaryRow]) -> str:
    width = max(len("adapter"), *(len(r.adapter) for r in rows))
    lines = [f"{'adapter':<{width}}  final evaluation (mean +/- std)"]
    lines += [f"{r.adapter:<{width}}  {r.mean:.6g} +/- {r.std:.3g}  (n={r.n})" for r in rows]
    return "\n".join(lines)


def prepare_output(cfg: ExperimentConfig, output: str | None = None) -> Path:
    out = Path(output if output is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(cfg.to_json(), encoding="utf-8")
    return out
