"""Random MacLaurin features for the dot-product form of the kernel.

On unit-norm logs the Log-Euclidean kernel is ``k(t) = exp((t - 1)/sigma^2)``
with ``t = <x, y>_F``, whose MacLaurin coefficients are
``a_N = exp(-1/sigma^2) / (sigma^(2N) N!)``. Each component draws a degree
``N`` with ``p(N) = 2^-(N+1)`` and ``N`` Rademacher vectors ``s``:

    sqrt(a_N / (nu p(N))) * prod_a (s_a . vec(x))
"""

import math

import numpy as np

from .._rng import substream
from ..errors import SchemeMismatch
from .base import DEFAULT_MAX_DEGREE, DegreeDistribution, FeatureMap


def maclaurin_coefficient(degree, nu, sigma, dist) -> float:
    log_a = -1.0 / sigma**2 - 2.0 * degree * math.log(sigma) - math.lgamma(degree + 1)
    return math.exp(0.5 * (log_a - math.log(nu) - float(dist.log_pmf(degree))))


class MacLaurinMap(FeatureMap):
    scheme = "maclaurin"

    def __init__(self, dim, nu, sigma, seed, max_degree=DEFAULT_MAX_DEGREE):
        super().__init__(dim, nu, sigma, seed)
        self.dist = DegreeDistribution(0.5, max_degree)
        d2 = self.dim * self.dim
        degrees = np.empty(self.nu, dtype=np.int64)
        signs = []
        for j in range(self.nu):
            rng = substream(self.seed, j)
            degrees[j] = self.dist.sample(rng)
            signs.append((rng.integers(0, 2, size=(degrees[j], d2), dtype=np.int8) * 2 - 1)
                         .astype(np.int8))
        self.degrees = degrees
        self.signs = np.concatenate(signs) if degrees.sum() else np.zeros((0, d2), dtype=np.int8)
        self.signs.setflags(write=False)
        self.coefficients = np.array(
            [maclaurin_coefficient(int(n), self.nu, self.sigma, self.dist) for n in degrees])
        self._active = np.flatnonzero(degrees > 0)
        self._starts = np.concatenate([[0], np.cumsum(degrees)])[:-1][self._active]

    def _transform(self, rows):
        out = np.ones((self.nu, rows.shape[0]))
        if self._active.size:
            proj = self.signs.astype(np.float64) @ rows.T
            out[self._active] = np.multiply.reduceat(proj, self._starts, axis=0)
        out *= self.coefficients[:, None]
        return out.T

    def params(self):
        p = super().params()
        p.update(max_degree=self.dist.max_degree)
        return p


def apply_maclaurin(fmap, x) -> np.ndarray:
    if not isinstance(fmap, MacLaurinMap):
        raise SchemeMismatch(
            f"expected a maclaurin map, got {getattr(fmap, 'scheme', type(fmap).__name__)}")
    return fmap.apply(x)
