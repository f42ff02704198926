"""Shared pieces of every feature map: degree distributions, input checks
and the common map interface."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DegreeOverflow, LengthMismatch, NormViolation, ThetaOutOfRange
from ..spd import LogDescriptor

NORM_TOL = 1e-6
DEFAULT_MAX_DEGREE = 64
DEFAULT_THETA = 0.5


class DegreeDistribution:
    """Geometric law ``rho(n) = theta (1 - theta)^n`` truncated to
    ``n <= max_degree`` and renormalized over that support.

    Sampling draws from the untruncated law and raises ``DegreeOverflow``
    when a draw lands past ``max_degree``; accepted draws therefore follow
    the renormalized law, which is what the map coefficients use.
    """

    kind = "geometric"

    def __init__(self, theta: float = DEFAULT_THETA, max_degree: int = DEFAULT_MAX_DEGREE):
        if not 0.0 < theta < 1.0:
            raise ThetaOutOfRange(f"theta must lie in (0, 1), got {theta}")
        if max_degree < 0:
            raise ValueError("max_degree must be nonnegative")
        self.theta = float(theta)
        self.max_degree = int(max_degree)
        n = np.arange(self.max_degree + 1)
        log_raw = math.log(self.theta) + n * math.log1p(-self.theta)
        # mass of the retained support: 1 - (1 - theta)^(N+1)
        log_mass = math.log(-math.expm1((self.max_degree + 1) * math.log1p(-self.theta)))
        self._log_pmf = log_raw - log_mass

    def __repr__(self):
        return f"DegreeDistribution(theta={self.theta}, max_degree={self.max_degree})"

    def __eq__(self, other):
        return (isinstance(other, DegreeDistribution) and self.theta == other.theta
                and self.max_degree == other.max_degree)

    @property
    def pmf(self) -> np.ndarray:
        return np.exp(self._log_pmf)

    def log_pmf(self, n) -> np.ndarray:
        return self._log_pmf[n]

    def sample(self, rng: np.random.Generator, size=None):
        n = rng.geometric(self.theta, size=size) - 1
        if np.any(np.asarray(n) > self.max_degree):
            raise DegreeOverflow(
                f"sampled degree {int(np.max(n))} exceeds max_degree={self.max_degree} "
                f"(theta={self.theta}); raise the truncation")
        return n


def check_unit(x: LogDescriptor | np.ndarray) -> np.ndarray:
    """Row-major vector of a single unit-norm log descriptor."""
    v = x.vector if isinstance(x, LogDescriptor) else np.asarray(x, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > NORM_TOL:
        raise NormViolation(f"log descriptor has Frobenius norm {norm:.9g}, expected 1")
    return v


def check_unit_rows(xs) -> np.ndarray:
    """Stack descriptors (or vectors) into an (n, d*d) array of unit rows."""
    if isinstance(xs, LogDescriptor):
        xs = [xs]
    if isinstance(xs, np.ndarray) and xs.ndim == 2:
        rows = np.asarray(xs, dtype=np.float64)
    else:
        rows = np.array([x.vector if isinstance(x, LogDescriptor) else np.ravel(x) for x in xs],
                        dtype=np.float64)
    if rows.ndim != 2:
        raise LengthMismatch("descriptors must share one length")
    norms = np.linalg.norm(rows, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
    if bad.size:
        raise NormViolation(f"descriptor {bad[0]} has Frobenius norm {norms[bad[0]]:.9g}, expected 1")
    return rows


class FeatureMap:
    """A sampled random map from ``d x d`` log descriptors to ``R^nu``.

    Subclasses fill in ``_transform`` on validated row vectors.
    """

    scheme: str = ""

    def __init__(self, dim: int, nu: int, sigma: float, seed: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if nu < 1:
            raise ValueError("nu must be >= 1")
        if not sigma > 0:
            raise ValueError("sigma must be > 0")
        self.dim = int(dim)
        self.nu = int(nu)
        self.sigma = float(sigma)
        self.seed = int(seed)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, nu={self.nu}, sigma={self.sigma}, seed={self.seed})"

    def transform(self, xs) -> np.ndarray:
        """Map a batch of unit-norm descriptors to an (n, nu) feature matrix."""
        rows = check_unit_rows(xs)
        if rows.shape[1] != self.dim * self.dim:
            raise LengthMismatch(
                f"descriptor length {rows.shape[1]} does not match map dim {self.dim}**2")
        return self._transform(rows)

    def apply(self, x) -> np.ndarray:
        v = check_unit(x)
        return self.transform(v[None, :])[0]

    def _transform(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {"scheme": self.scheme, "dim": self.dim, "nu": self.nu,
                "sigma": self.sigma, "seed": self.seed}
