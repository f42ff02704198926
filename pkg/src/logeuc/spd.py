"""SPD matrices: eigendecomposition, matrix logarithm, normalization and
covariance descriptors.

The eigensolver is a cyclic Jacobi method. Each sweep visits every
off-diagonal pair once using a round-robin ordering, so the ``d // 2``
rotations of a round touch disjoint index pairs and are applied together.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSeries, NotConverged, NotPositiveDefinite, ZeroLogMatrix

SYMMETRY_TOL = 1e-12
MIN_EIGENVALUE = 1e-14
MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    sweeps: int


@dataclass(frozen=True, eq=False)
class LogDescriptor:
    """Matrix logarithm of an SPD matrix, optionally unit-normalized.

    ``vector`` is the row-major flattening used by every feature map.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"log descriptor must be square, got shape {entries.shape}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return self.entries.reshape(-1)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @classmethod
    def from_vector(cls, vector) -> "LogDescriptor":
        vector = np.asarray(vector, dtype=np.float64)
        d = int(round(np.sqrt(vector.size)))
        if d * d != vector.size:
            raise ValueError(f"vector length {vector.size} is not a perfect square")
        return cls(vector.reshape(d, d))


def is_symmetric(m: np.ndarray) -> bool:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.all(np.abs(m - m.T) <= SYMMETRY_TOL * np.maximum(1.0, np.abs(m))))


def _round_robin(d: int):
    """Yield (p, q) index arrays covering every pair once per sweep."""
    n = d + (d % 2)
    players = list(range(n))
    for _ in range(n - 1):
        p = np.array(players[: n // 2])
        q = np.array(players[n // 2:][::-1])
        keep = (p < d) & (q < d)
        p, q = p[keep], q[keep]
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        yield lo, hi
        players = [players[0], players[-1]] + players[1:-1]


def _offdiag_norm(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def eig_sym(m, max_sweeps: int = MAX_SWEEPS, tol: float = OFFDIAG_TOL,
            check_pd: bool = True) -> EigDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like, shape (d, d)
        Symmetric input.
    max_sweeps : int
        Sweep budget before ``NotConverged`` is raised.
    tol : float
        Stop once the off-diagonal Frobenius norm drops below
        ``tol * ||m||_F``.
    check_pd : bool
        Raise ``NotPositiveDefinite`` if the smallest eigenvalue is not
        above ``MIN_EIGENVALUE``.

    Returns
    -------
    EigDecomposition
        Eigenvalues sorted descending and matching eigenvector columns.
    """
    a = np.array(m, dtype=np.float64)
    if not is_symmetric(a):
        raise NotPositiveDefinite("matrix is not square and symmetric")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    a = 0.5 * (a + a.T)
    d = a.shape[0]
    v = np.eye(d)
    scale = np.linalg.norm(a)
    threshold = tol * scale if scale > 0 else 0.0

    sweeps = 0
    off = _offdiag_norm(a)
    while off > threshold:
        if sweeps >= max_sweeps:
            raise NotConverged(f"Jacobi did not converge in {max_sweeps} sweeps (off={off:.3e})")
        for p, q in _round_robin(d):
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta_safe = np.where(big, 1.0, theta)
            t = np.sign(theta_safe) / (np.abs(theta_safe) + np.sqrt(theta_safe * theta_safe + 1.0))
            # tan(phi) ~ 1 / (2 theta) once theta*theta would overflow
            t = np.where(big, 0.5 / np.where(big, theta, 1.0), t)
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c

            cols_p = a[:, p].copy()
            cols_q = a[:, q]
            a[:, p] = cols_p * c - cols_q * s
            a[:, q] = cols_p * s + cols_q * c
            rows_p = a[p, :].copy()
            rows_q = a[q, :]
            a[p, :] = c[:, None] * rows_p - s[:, None] * rows_q
            a[q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            a[p, q] = 0.0
            a[q, p] = 0.0

            vp = v[:, p].copy()
            vq = v[:, q]
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
        sweeps += 1
        off = _offdiag_norm(a)

    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    lam, v = lam[order], v[:, order]
    if check_pd and lam[-1] <= MIN_EIGENVALUE:
        raise NotPositiveDefinite(f"smallest eigenvalue {lam[-1]:.3e} <= {MIN_EIGENVALUE}")
    return EigDecomposition(lam, v, sweeps)


def check_spd(m) -> np.ndarray:
    """Validate ``m`` as SPD and return it as a float array."""
    m = np.asarray(m, dtype=np.float64)
    eig_sym(m)
    return m


def matrix_log(m) -> LogDescriptor:
    """Principal logarithm ``U diag(log lambda) U^T`` of an SPD matrix."""
    lam, u, _ = eig_sym(m)
    out = (u * np.log(lam)) @ u.T
    return LogDescriptor(0.5 * (out + out.T))


def normalize_log(log: LogDescriptor) -> LogDescriptor:
    norm = log.norm
    if norm <= 1e-14:
        raise ZeroLogMatrix("log matrix has zero Frobenius norm (input was the identity)")
    return LogDescriptor(log.entries / norm)


def covariance_descriptor(series, ridge: float = 0.0) -> np.ndarray:
    """Unbiased sample covariance of a (T, F) series plus ``ridge * I``.

    The result is not validated as SPD; with ``ridge=0`` a rank-deficient
    series gives a singular matrix that ``check_spd`` rejects.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"series must be 2-D (T, F), got shape {x.shape}")
    t, f = x.shape
    if t < 2:
        raise DegenerateSeries(f"need at least 2 frames, got {t}")
    if f < 1:
        raise ValueError("series has no features")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (t - 1)
    cov = 0.5 * (cov + cov.T)
    cov[np.diag_indices(f)] += ridge
    return cov
