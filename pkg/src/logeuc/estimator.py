"""Monte-Carlo checks of the feature maps as kernel estimators.

For a fixed pair of unit-norm log descriptors every trial draws a fresh map
and records the induced kernel ``<Phi(x), Phi(y)>``. Trials are generated in
vectorized chunks; each chunk owns a substream keyed by
``(seed, scheme, nu, chunk)`` so results do not depend on chunk scheduling.
The chunked samplers draw from exactly the distributions used by the map
classes in ``logeuc.maps`` (same degree law, same weights, same
coefficients) without building one Python object per trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import substream
from .errors import InsufficientTrials, SchemeMismatch, ThetaOutOfRange
from .kernels import log_euclidean_kernel
from .maps import SCHEMES, DegreeDistribution
from .maps.base import DEFAULT_MAX_DEGREE, check_unit
from .maps.fastfood import fwht, next_power_of_two
from .maps.maclaurin import maclaurin_coefficient
from .maps.rgw import rgw_coefficient

MIN_BIAS_TRIALS = 1000
MIN_TAIL_TRIALS = 10_000
DEFAULT_EPS_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
# float64 entries materialized per chunk
_CHUNK_BUDGET = 4_000_000


@dataclass(frozen=True)
class CrhoValue:
    theta: float
    max_degree: int
    truncated_sum: float
    closed_form: float
    relative_gap: float


def compute_c_rho(dist: DegreeDistribution | float, max_degree: int = DEFAULT_MAX_DEGREE) -> CrhoValue:
    """``sum_{n<=N} 1 / (rho(n) n!)`` for ``rho(n) = theta (1-theta)^n``,
    next to its limit ``exp(1 / (1 - theta)) / theta``."""
    if isinstance(dist, DegreeDistribution):
        theta, max_degree = dist.theta, dist.max_degree
    else:
        theta = float(dist)
    if not 0.0 < theta < 1.0:
        raise ThetaOutOfRange(f"theta must lie in (0, 1), got {theta}")
    q = 1.0 / (1.0 - theta)
    terms = [math.exp(n * math.log(q) - math.lgamma(n + 1)) for n in range(max_degree + 1)]
    truncated = math.fsum(terms) / theta
    closed = math.exp(q) / theta
    return CrhoValue(theta, max_degree, truncated, closed, (closed - truncated) / closed)


def variance_bound(nu: int, sigma: float, c_rho: float) -> float:
    """``C_rho / nu^3 * exp((3 - 2 sigma^2) / sigma^4)``, reported verbatim."""
    return c_rho / nu**3 * math.exp((3.0 - 2.0 * sigma**2) / sigma**4)


@dataclass
class EstimatorReport:
    pair_id: str
    scheme: str
    nu: int
    trials: int
    sample_mean: float
    sample_variance: float
    exact_value: float
    standard_error: float
    z_score: float
    bound_value: float
    values: np.ndarray = field(repr=False)

    def row(self) -> dict:
        return {
            "pair_id": self.pair_id, "scheme": self.scheme, "nu": self.nu, "trials": self.trials,
            "sample_mean": self.sample_mean, "sample_variance": self.sample_variance,
            "exact_value": self.exact_value, "standard_error": self.standard_error,
            "z_score": self.z_score, "bound_value": self.bound_value,
        }


# --- chunked trial samplers -------------------------------------------------

def _chunk_trials(nu, d2, mean_degree):
    per_trial = nu * d2 * max(mean_degree, 1.0)
    return int(max(1, min(50_000, _CHUNK_BUDGET // per_trial)))


def _product_trials(rng, x, y, m, nu, dist, coef_sq, draw_weights):
    """Sum over components of ``coef(n)^2 prod_a <w_a, x><w_a, y>``."""
    degrees = dist.sample(rng, size=m * nu)
    total = int(degrees.sum())
    comp = np.ones(m * nu)
    if total:
        w = draw_weights(rng, total)
        pxy = (w @ x) * (w @ y)
        active = np.flatnonzero(degrees > 0)
        starts = np.concatenate([[0], np.cumsum(degrees)])[:-1][active]
        comp[active] = np.multiply.reduceat(pxy, starts)
    return (coef_sq[degrees] * comp).reshape(m, nu).sum(axis=1)


def _rgw_chunk(rng, x, y, m, nu, sigma, dist):
    coef_sq = np.array([rgw_coefficient(n, nu, sigma, dist) ** 2
                        for n in range(dist.max_degree + 1)])
    d2 = x.size
    return _product_trials(rng, x, y, m, nu, dist, coef_sq,
                           lambda r, k: r.normal(0.0, sigma, size=(k, d2)))


def _maclaurin_chunk(rng, x, y, m, nu, sigma, dist):
    coef_sq = np.array([maclaurin_coefficient(n, nu, sigma, dist) ** 2
                        for n in range(dist.max_degree + 1)])
    d2 = x.size
    return _product_trials(
        rng, x, y, m, nu, dist, coef_sq,
        lambda r, k: r.integers(0, 2, size=(k, d2), dtype=np.int8).astype(np.float64) * 2.0 - 1.0)


def _rff_chunk(rng, x, y, m, nu, sigma, _dist):
    w = rng.normal(0.0, 1.0 / sigma, size=(m, nu, x.size))
    b = rng.uniform(0.0, 2.0 * np.pi, size=(m, nu))
    return (2.0 / nu) * np.sum(np.cos(w @ x + b) * np.cos(w @ y + b), axis=1)


def _fastfood_chunk(rng, x, y, m, nu, sigma, _dist):
    p = next_power_of_two(x.size)
    nb = -(-nu // p)
    shape = (m, nb, p)
    signs = rng.integers(0, 2, size=shape) * 2.0 - 1.0
    gauss = rng.standard_normal(shape)
    perm = np.argsort(rng.random(shape), axis=-1)
    scal = np.sqrt(rng.chisquare(p, size=shape)) / np.linalg.norm(gauss, axis=-1, keepdims=True)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=shape).reshape(m, -1)[:, :nu]

    def project(v):
        u = np.zeros(shape)
        u[..., : v.size] = v
        u = fwht(u * signs)
        u = np.take_along_axis(u, perm, axis=-1)
        u = fwht(u * gauss) * scal / (sigma * np.sqrt(p))
        return u.reshape(m, -1)[:, :nu]

    return (2.0 / nu) * np.sum(np.cos(project(x) + phases) * np.cos(project(y) + phases), axis=1)


_SAMPLERS = {"rgw": _rgw_chunk, "rff": _rff_chunk, "maclaurin": _maclaurin_chunk,
             "fastfood": _fastfood_chunk}


def sample_induced_kernel(x, y, scheme, nu, sigma, trials, seed=0,
                          dist: DegreeDistribution | None = None) -> np.ndarray:
    """Induced kernel values over ``trials`` independent map draws."""
    if scheme not in _SAMPLERS:
        raise SchemeMismatch(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    xv, yv = check_unit(x), check_unit(y)
    if scheme == "maclaurin":
        dist = DegreeDistribution(0.5, dist.max_degree if dist else DEFAULT_MAX_DEGREE)
    elif dist is None:
        dist = DegreeDistribution()
    mean_degree = (1.0 - dist.theta) / dist.theta if scheme in ("rgw", "maclaurin") else 1.0
    width = next_power_of_two(xv.size) if scheme == "fastfood" else xv.size
    chunk = _chunk_trials(nu, width, mean_degree)
    code = SCHEMES.index(scheme)
    out = np.empty(trials)
    for c, start in enumerate(range(0, trials, chunk)):
        m = min(chunk, trials - start)
        rng = substream(seed, code, nu, c)
        out[start:start + m] = _SAMPLERS[scheme](rng, xv, yv, m, nu, sigma, dist)
    return out


def _report(pair_id, scheme, nu, values, exact, bound):
    m = values.size
    mean = float(np.mean(values))
    var = float(np.var(values, ddof=1))
    se = math.sqrt(var / m)
    z = abs(mean - exact) / se if se > 0 else (0.0 if mean == exact else math.inf)
    return EstimatorReport(pair_id, scheme, nu, m, mean, var, exact, se, z, bound, values)


def run_bias_trial(x, y, scheme, nu, sigma, dist=None, trials=100_000, seed=0,
                   pair_id="pair") -> EstimatorReport:
    """Sample mean, variance and z-score of the induced kernel against the
    exact kernel over ``trials`` independent maps."""
    if trials < MIN_BIAS_TRIALS:
        raise InsufficientTrials(f"need at least {MIN_BIAS_TRIALS} trials, got {trials}")
    dist = dist or DegreeDistribution()
    values = sample_induced_kernel(x, y, scheme, nu, sigma, trials, seed, dist)
    exact = log_euclidean_kernel(x, y, sigma)
    bound = variance_bound(nu, sigma, compute_c_rho(dist).closed_form) if scheme == "rgw" else math.nan
    return _report(pair_id, scheme, nu, values, exact, bound)


def loglog_slope(nus, variances) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(nus, float)), np.log(np.asarray(variances, float)), 1)
    return float(slope)


def run_variance_sweep(x, y, scheme, nu_grid, sigma, dist=None, trials=20_000, seed=0,
                       pair_id="pair"):
    """Empirical variance per ``nu`` and the least-squares log-log slope.

    Returns ``(reports, slope)``.
    """
    nu_grid = [int(v) for v in nu_grid]
    if len(nu_grid) < 4 or any(b <= a for a, b in zip(nu_grid, nu_grid[1:])):
        raise ValueError("nu_grid must be strictly ascending with at least 4 points")
    if trials < MIN_BIAS_TRIALS:
        raise InsufficientTrials(f"need at least {MIN_BIAS_TRIALS} trials, got {trials}")
    reports = [run_bias_trial(x, y, scheme, nu, sigma, dist, trials, seed, pair_id)
               for nu in nu_grid]
    return reports, loglog_slope(nu_grid, [r.sample_variance for r in reports])


@dataclass
class ChebyshevTable:
    epsilon: np.ndarray
    empirical_tail: np.ndarray
    measured_bound: np.ndarray  # min(1, sample_variance / eps^2)
    analytic_bound: np.ndarray  # min(1, bound_value / eps^2); nan when not applicable
    binomial_se: np.ndarray

    def rows(self):
        for i in range(self.epsilon.size):
            yield {"epsilon": float(self.epsilon[i]),
                   "empirical_tail": float(self.empirical_tail[i]),
                   "measured_bound": float(self.measured_bound[i]),
                   "analytic_bound": float(self.analytic_bound[i]),
                   "binomial_se": float(self.binomial_se[i])}


def chebyshev_curve(report: EstimatorReport, eps_grid=DEFAULT_EPS_GRID) -> ChebyshevTable:
    """Empirical ``P(|K_Phi - K| >= eps)`` next to the Chebyshev bounds."""
    values = np.asarray(report.values)
    if values.size < MIN_TAIL_TRIALS:
        raise InsufficientTrials(f"need at least {MIN_TAIL_TRIALS} trial values, got {values.size}")
    eps = np.asarray(eps_grid, dtype=np.float64)
    dev = np.abs(values - report.exact_value)
    tail = np.array([np.mean(dev >= e) for e in eps])
    measured = np.minimum(1.0, report.sample_variance / eps**2)
    analytic = np.minimum(1.0, report.bound_value / eps**2)
    se = np.sqrt(tail * (1.0 - tail) / values.size)
    return ChebyshevTable(eps, tail, measured, analytic, se)
