"""Random Gaussian-weight map for the Log-Euclidean kernel.

Component ``j`` draws a degree ``n`` from a geometric law and ``n`` factor
matrices ``U_1..U_n`` with i.i.d. ``N(0, sigma^2)`` entries. Its value on a
unit-norm log descriptor ``x`` is

    coef(n) * prod_a <U_a, x>_F,
    coef(n) = sigma^(-2n) * sqrt(exp(-1/sigma^2) / (nu * rho(n) * n!)),

which equals the trace of ``W^T x^{(x)n}`` for ``W = U_1 (x) ... (x) U_n``
without ever forming the ``d^n x d^n`` Kronecker power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._rng import substream
from ..errors import SchemeMismatch
from .base import DegreeDistribution, FeatureMap


def rgw_coefficient(degree: int, nu: int, sigma: float, dist: DegreeDistribution) -> float:
    log_c = (-2.0 * degree * math.log(sigma)
             + 0.5 * (-1.0 / sigma**2 - math.log(nu) - float(dist.log_pmf(degree))
                      - math.lgamma(degree + 1)))
    return math.exp(log_c)


@dataclass(frozen=True, eq=False)
class RgwComponent:
    degree: int
    factors: np.ndarray  # (degree, d, d)
    coefficient: float


class RgwMap(FeatureMap):
    scheme = "rgw"

    def __init__(self, dim, nu, sigma, seed, dist: DegreeDistribution | None = None):
        super().__init__(dim, nu, sigma, seed)
        self.dist = dist if dist is not None else DegreeDistribution()
        comps = []
        for j in range(self.nu):
            rng = substream(self.seed, j)
            n = int(self.dist.sample(rng))
            factors = rng.normal(0.0, self.sigma, size=(n, self.dim, self.dim))
            factors.setflags(write=False)
            comps.append(RgwComponent(n, factors, rgw_coefficient(n, self.nu, self.sigma, self.dist)))
        self.components = tuple(comps)

        self.degrees = np.array([c.degree for c in comps], dtype=np.int64)
        self.coefficients = np.array([c.coefficient for c in comps])
        d2 = self.dim * self.dim
        self._stacked = (np.concatenate([c.factors.reshape(-1, d2) for c in comps])
                         if self.degrees.sum() else np.zeros((0, d2)))
        self._active = np.flatnonzero(self.degrees > 0)
        self._starts = np.concatenate([[0], np.cumsum(self.degrees)])[:-1][self._active]

    def _transform(self, rows):
        out = np.ones((self.nu, rows.shape[0]))
        if self._active.size:
            proj = self._stacked @ rows.T
            out[self._active] = np.multiply.reduceat(proj, self._starts, axis=0)
        out *= self.coefficients[:, None]
        return out.T

    def params(self):
        p = super().params()
        p.update(theta=self.dist.theta, max_degree=self.dist.max_degree)
        return p


def sample_rgw_map(d, nu, sigma, dist=None, seed=0) -> RgwMap:
    return RgwMap(d, nu, sigma, seed, dist)


def apply_rgw(fmap, x) -> np.ndarray:
    if not isinstance(fmap, RgwMap):
        raise SchemeMismatch(f"expected an rgw map, got {getattr(fmap, 'scheme', type(fmap).__name__)}")
    return fmap.apply(x)
