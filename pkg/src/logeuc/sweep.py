"""The nu-sweep benchmark: accuracy of every approximation scheme against
feature dimension, with the exact-kernel SVM as reference."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_seed
from .classify import (DEFAULT_C, accuracy, cross_validate_sigma, stratified_split, train_kernel,
                       train_linear)
from .kernels import exact_gram
from .maps import SCHEMES, fastfood_nu, sample_map
from .maps.base import DEFAULT_THETA

DEFAULT_NU_GRID = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
DEFAULT_SIGMA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
SWEEP_HEADER = ["scheme", "nu", "effective_nu", "repetitions", "mean_accuracy", "sd_accuracy"]


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("LOGEUC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SweepConfig:
    nu_grid: tuple = DEFAULT_NU_GRID
    repetitions: int = 10
    schemes: tuple = SCHEMES
    sigma: float | None = 1.0  # None selects sigma by cross validation
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    cv_folds: int = 5
    c_param: float = DEFAULT_C
    theta: float = DEFAULT_THETA
    test_fraction: float = 0.5
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.nu_grid:
            raise ValueError("nu grid is empty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.schemes:
            raise ValueError("no schemes selected")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")


@dataclass
class SweepResult:
    rows: list  # dicts keyed by SWEEP_HEADER
    exact_accuracy: float
    sigma: float
    accuracies: dict  # (scheme, nu) -> per-repetition accuracies
    timings: dict = field(default_factory=dict)
    exact_gram_calls: int = 0
    failed: list = field(default_factory=list)

    def cell(self, scheme, nu) -> dict:
        for r in self.rows:
            if r["scheme"] == scheme and r["nu"] == nu:
                return r
        raise KeyError((scheme, nu))


def effective_nu(scheme: str, nu: int) -> int:
    return fastfood_nu(nu) if scheme == "fastfood" else int(nu)


def run_sweep(descriptors, labels, config: SweepConfig, on_row=None) -> SweepResult:
    """Train ``repetitions`` linear SVMs per (scheme, nu) on fresh maps and
    score them on a stratified holdout.

    The exact Gram matrix is built once. ``on_row`` is called with every
    finished (scheme, nu) row so callers can flush partial results.
    """
    timings = {}
    x = np.array([d.vector for d in descriptors])
    y = np.asarray(labels, dtype=np.int64)
    dim = descriptors[0].dim
    tr, te = stratified_split(y, config.test_fraction, config.seed)

    t0 = time.perf_counter()
    sigma = config.sigma
    gram_calls = 0
    if sigma is None:
        train_descs = [descriptors[i] for i in tr]
        sel = cross_validate_sigma(train_descs, y[tr], config.sigma_grid, config.cv_folds,
                                   config.c_param, config.seed)
        sigma = sel.best_sigma
        gram_calls += len(sel.sigma_grid)
    timings["sigma_selection"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    k = exact_gram(descriptors, sigma).entries
    gram_calls += 1
    timings["exact_gram"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    model = train_kernel(k[np.ix_(tr, tr)], y[tr], config.c_param, seed=config.seed)
    exact_acc = accuracy(model.predict(k[np.ix_(te, tr)]), y[te])
    timings["exact_train"] = time.perf_counter() - t0

    stage = {"map": 0.0, "features": 0.0, "train": 0.0}

    def run_cell(cell):
        scheme, nu, rep = cell
        seed = derive_seed(config.seed, SCHEMES.index(scheme), nu, rep)
        t = time.perf_counter()
        fmap = sample_map(scheme, dim, effective_nu(scheme, nu), sigma, seed, theta=config.theta)
        t_map = time.perf_counter() - t
        feats = fmap.transform(x)
        t_feat = time.perf_counter() - t - t_map
        svm = train_linear(feats[tr], y[tr], config.c_param, seed=seed)
        acc = accuracy(svm.predict(feats[te]), y[te])
        return acc, (t_map, t_feat, time.perf_counter() - t - t_map - t_feat)

    rows, accs, failed = [], {}, []
    with ThreadPoolExecutor(max_workers=max(1, config.threads)) as pool:
        for scheme in config.schemes:
            for nu in config.nu_grid:
                cells = [(scheme, int(nu), rep) for rep in range(config.repetitions)]
                try:
                    results = list(pool.map(run_cell, cells))
                except Exception as exc:
                    failed.append((scheme, int(nu), f"{type(exc).__name__}: {exc}"))
                    raise SweepFailure(rows, failed) from exc
                vals = [r[0] for r in results]
                for _, (a, b, c) in results:
                    stage["map"] += a
                    stage["features"] += b
                    stage["train"] += c
                accs[(scheme, int(nu))] = vals
                row = {"scheme": scheme, "nu": int(nu), "effective_nu": effective_nu(scheme, nu),
                       "repetitions": len(vals), "mean_accuracy": float(np.mean(vals)),
                       "sd_accuracy": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0}
                rows.append(row)
                if on_row is not None:
                    on_row(row)
    timings.update(stage)
    return SweepResult(rows, exact_acc, float(sigma), accs, timings, gram_calls, failed)


class SweepFailure(RuntimeError):
    def __init__(self, rows, failed):
        super().__init__(f"sweep failed at {failed[-1][:2]}: {failed[-1][2]}")
        self.rows = rows
        self.failed = failed


def _fmt(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r[h]) for h in header])
