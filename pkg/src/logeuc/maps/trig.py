"""Random Fourier features for the Gaussian kernel on vectorized logs.

``z_i(x) = sqrt(2/nu) cos(w_i . vec(x) + b_i)`` with ``w_i ~ N(0, I/sigma^2)``
and ``b_i ~ U[0, 2 pi)``.
"""

import numpy as np

from .._rng import substream
from ..errors import SchemeMismatch
from .base import FeatureMap


class TrigRffMap(FeatureMap):
    scheme = "rff"

    def __init__(self, dim, nu, sigma, seed):
        super().__init__(dim, nu, sigma, seed)
        d2 = self.dim * self.dim
        freqs = np.empty((self.nu, d2))
        phases = np.empty(self.nu)
        for j in range(self.nu):
            rng = substream(self.seed, j)
            freqs[j] = rng.normal(0.0, 1.0 / self.sigma, size=d2)
            phases[j] = rng.uniform(0.0, 2.0 * np.pi)
        freqs.setflags(write=False)
        phases.setflags(write=False)
        self.frequencies = freqs
        self.phases = phases

    def _transform(self, rows):
        return np.sqrt(2.0 / self.nu) * np.cos(rows @ self.frequencies.T + self.phases)


def apply_trig_rff(fmap, x) -> np.ndarray:
    if not isinstance(fmap, TrigRffMap):
        raise SchemeMismatch(f"expected an rff map, got {getattr(fmap, 'scheme', type(fmap).__name__)}")
    return fmap.apply(x)
