"""Exact Log-Euclidean kernel and Gram matrices (exact and feature-induced)."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NormViolation
from .maps.base import check_unit, check_unit_rows


@dataclass(frozen=True, eq=False)
class GramMatrix:
    entries: np.ndarray
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.entries - self.entries.T) <= tol))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min()) if self.n else 0.0


def log_euclidean_kernel(x, y, sigma: float) -> float:
    """``exp(-||x - y||_F^2 / (2 sigma^2))`` for unit-norm log descriptors."""
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    u, v = check_unit(x), check_unit(y)
    if u.shape != v.shape:
        raise LengthMismatch(f"descriptor lengths differ: {u.size} vs {v.size}")
    diff = u - v
    return float(np.exp(-(diff @ diff) / (2.0 * sigma * sigma)))


def log_euclidean_kernel_inner(x, y, sigma: float) -> float:
    """Same kernel through ``exp((<x, y>_F - 1) / sigma^2)``; valid for unit norms only."""
    u, v = check_unit(x), check_unit(y)
    if u.shape != v.shape:
        raise LengthMismatch(f"descriptor lengths differ: {u.size} vs {v.size}")
    return float(np.exp((u @ v - 1.0) / (sigma * sigma)))


def exact_gram(batch, sigma: float) -> GramMatrix:
    """Exact kernel for every pair: Theta(n^2 d^2), the quadratic baseline.

    Uses the inner-product form on precomputed vectors; the diagonal is set
    to 1, which both forms give exactly at zero distance.
    """
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    try:
        rows = check_unit_rows(batch)
    except NormViolation as exc:
        raise NormViolation(f"exact_gram: {exc}") from None
    inner = np.clip(rows @ rows.T, -1.0, 1.0)
    k = np.exp((inner - 1.0) / (sigma * sigma))
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return GramMatrix(k, {"kind": "exact", "sigma": float(sigma)})


def induced_gram(features, source: dict | None = None) -> GramMatrix:
    """Linear kernel ``F F^T`` of explicit feature rows."""
    if isinstance(features, np.ndarray):
        f = np.asarray(features, dtype=np.float64)
        if f.ndim != 2:
            raise LengthMismatch("features must be a 2-D (n, nu) array")
    else:
        rows = [np.asarray(r, dtype=np.float64).ravel() for r in features]
        if len({r.size for r in rows}) > 1:
            raise LengthMismatch("feature rows differ in length")
        f = np.array(rows).reshape(len(rows), -1)
    g = f @ f.T
    g = 0.5 * (g + g.T)
    return GramMatrix(g, {"kind": "induced", **(source or {})})


def write_gram_csv(gram: GramMatrix, path) -> None:
    """Row-major CSV; the first line is a ``#`` comment with source metadata."""
    meta = ";".join(f"{k}={gram.source[k]}" for k in sorted(gram.source))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# gram n={gram.n} {meta}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"c{j}" for j in range(gram.n)])
        for row in gram.entries:
            w.writerow([repr(float(v)) for v in row])


def read_gram_csv(path) -> GramMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        source = {}
        for item in header.split()[3:4]:
            for kv in item.split(";"):
                if "=" in kv:
                    k, v = kv.split("=", 1)
                    source[k] = v
        rows = list(csv.reader(fh))
    return GramMatrix(np.array([[float(v) for v in r] for r in rows[1:]]), source)
