"""Random feature maps approximating the Log-Euclidean kernel."""

import json

import numpy as np

from ..errors import LengthMismatch, ParseError, SchemeMismatch
from .base import DEFAULT_MAX_DEGREE, DEFAULT_THETA, DegreeDistribution, FeatureMap
from .fastfood import FastfoodMap, apply_fastfood, fwht, next_power_of_two
from .maclaurin import MacLaurinMap, apply_maclaurin
from .rgw import RgwComponent, RgwMap, apply_rgw, sample_rgw_map
from .trig import TrigRffMap, apply_trig_rff

SCHEMES = ("rgw", "rff", "maclaurin", "fastfood")
MAP_FORMAT = "logeuc-map"
MAP_VERSION = 1

__all__ = [
    "SCHEMES", "DegreeDistribution", "FeatureMap", "RgwComponent", "RgwMap", "TrigRffMap",
    "MacLaurinMap", "FastfoodMap", "sample_map", "sample_rgw_map", "apply_rgw",
    "apply_trig_rff", "apply_maclaurin", "apply_fastfood", "induced_kernel", "fwht",
    "fastfood_nu", "map_to_dict", "map_from_dict", "save_map", "load_map",
]


def sample_map(scheme, dim, nu, sigma, seed=0, theta=DEFAULT_THETA,
               max_degree=DEFAULT_MAX_DEGREE, padded_dim=None) -> FeatureMap:
    """Sample one map instance of ``scheme``; extra parameters are ignored by
    schemes that do not use them."""
    if scheme == "rgw":
        return RgwMap(dim, nu, sigma, seed, DegreeDistribution(theta, max_degree))
    if scheme == "rff":
        return TrigRffMap(dim, nu, sigma, seed)
    if scheme == "maclaurin":
        return MacLaurinMap(dim, nu, sigma, seed, max_degree)
    if scheme == "fastfood":
        return FastfoodMap(dim, nu, sigma, seed, padded_dim)
    raise SchemeMismatch(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def fastfood_nu(nu: int) -> int:
    """Nearest power of two to ``nu`` on a log scale (1000 -> 1024, 5000 -> 4096)."""
    lo = 1 << (max(int(nu), 1).bit_length() - 1)
    hi = lo * 2
    return lo if nu * nu <= lo * hi else hi


def induced_kernel(f, g) -> float:
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise LengthMismatch(f"feature lengths differ: {f.shape} vs {g.shape}")
    return float(f @ g)


def map_to_dict(fmap: FeatureMap) -> dict:
    """Parameters only; sampled factors are re-derived from the seed on load."""
    return {"format": MAP_FORMAT, "version": MAP_VERSION, **fmap.params()}


def map_from_dict(d: dict) -> FeatureMap:
    if d.get("format") != MAP_FORMAT:
        raise ParseError(f"not a map container (format={d.get('format')!r})")
    if d.get("version") != MAP_VERSION:
        raise ParseError(f"unsupported map container version {d.get('version')!r}")
    try:
        return sample_map(d["scheme"], d["dim"], d["nu"], d["sigma"], d["seed"],
                          theta=d.get("theta", DEFAULT_THETA),
                          max_degree=d.get("max_degree", DEFAULT_MAX_DEGREE),
                          padded_dim=d.get("padded_dim"))
    except KeyError as exc:
        raise ParseError(f"map container is missing field {exc}") from None


def save_map(fmap: FeatureMap, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(map_to_dict(fmap), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_map(path) -> FeatureMap:
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), f"{path}:{exc.lineno}") from None
    return map_from_dict(d)
