"""Fastfood features: Gaussian random projections replaced by
``V = S H G Pi H B / (sigma sqrt(p))`` per stacked block of size ``p``.

``H`` is the unnormalized Sylvester Walsh-Hadamard matrix (entries +-1,
``H H = p I``) applied in ``O(p log p)``. ``B`` holds Rademacher signs,
``G`` Gaussians, ``Pi`` a random permutation and
``S_i = s_i / ||G||_F`` with ``s_i ~ chi_p`` so each row of ``V`` is
distributed exactly as ``N(0, I / sigma^2)``. Inputs are zero-padded from
``d*d`` to the next power of two.
"""

import numpy as np

from .._rng import substream
from ..errors import NotPowerOfTwo, SchemeMismatch
from .base import FeatureMap


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


def fwht(x) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    x = np.array(x, dtype=np.float64)
    p = x.shape[-1]
    if not is_power_of_two(p):
        raise NotPowerOfTwo(f"length {p} is not a power of two")
    lead = x.shape[:-1]
    h = 1
    while h < p:
        x = x.reshape(*lead, p // (2 * h), 2, h)
        a, b = x[..., 0, :], x[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2)
        h *= 2
    return x.reshape(*lead, p)


class FastfoodMap(FeatureMap):
    scheme = "fastfood"

    def __init__(self, dim, nu, sigma, seed, padded_dim=None):
        super().__init__(dim, nu, sigma, seed)
        p = next_power_of_two(self.dim * self.dim) if padded_dim is None else int(padded_dim)
        if not is_power_of_two(p):
            raise NotPowerOfTwo(f"padded_dim {p} is not a power of two")
        if p < self.dim * self.dim:
            raise ValueError(f"padded_dim {p} is smaller than d*d = {self.dim * self.dim}")
        self.padded_dim = p
        self.n_blocks = -(-self.nu // p)
        shape = (self.n_blocks, p)
        self.signs = np.empty(shape)
        self.gaussians = np.empty(shape)
        self.permutations = np.empty(shape, dtype=np.int64)
        self.scalings = np.empty(shape)
        self.phases = np.empty(shape)
        for blk in range(self.n_blocks):
            rng = substream(self.seed, blk)
            self.signs[blk] = rng.integers(0, 2, size=p) * 2.0 - 1.0
            self.gaussians[blk] = rng.standard_normal(p)
            self.permutations[blk] = rng.permutation(p)
            chi = np.sqrt(rng.chisquare(p, size=p))
            self.scalings[blk] = chi / np.linalg.norm(self.gaussians[blk])
            self.phases[blk] = rng.uniform(0.0, 2.0 * np.pi, size=p)
        for arr in (self.signs, self.gaussians, self.permutations, self.scalings, self.phases):
            arr.setflags(write=False)

    def project(self, rows) -> np.ndarray:
        """``V x`` for every block, shape (n, n_blocks * p) before truncation."""
        n, d2 = rows.shape
        p = self.padded_dim
        x = np.zeros((n, 1, p))
        x[:, 0, :d2] = rows
        u = fwht(x * self.signs)
        u = np.take_along_axis(u, np.broadcast_to(self.permutations, u.shape), axis=-1)
        u = fwht(u * self.gaussians)
        u *= self.scalings / (self.sigma * np.sqrt(p))
        return u.reshape(n, -1)

    def _transform(self, rows):
        proj = self.project(rows)[:, : self.nu]
        return np.sqrt(2.0 / self.nu) * np.cos(proj + self.phases.reshape(-1)[: self.nu])

    def params(self):
        p = super().params()
        p.update(padded_dim=self.padded_dim)
        return p


def apply_fastfood(fmap, x) -> np.ndarray:
    if not isinstance(fmap, FastfoodMap):
        raise SchemeMismatch(
            f"expected a fastfood map, got {getattr(fmap, 'scheme', type(fmap).__name__)}")
    return fmap.apply(x)
