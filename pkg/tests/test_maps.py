import json
import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unit_sym
from logeuc.errors import (DegreeOverflow, LengthMismatch, NormViolation, NotPowerOfTwo,
                           ParseError, SchemeMismatch, ThetaOutOfRange)
from logeuc.estimator import sample_induced_kernel
from logeuc.kernels import log_euclidean_kernel
from logeuc.maps import (SCHEMES, DegreeDistribution, FastfoodMap, MacLaurinMap, RgwMap,
                         TrigRffMap, apply_fastfood, apply_maclaurin, apply_rgw, apply_trig_rff,
                         fastfood_nu, fwht, induced_kernel, load_map, map_from_dict, map_to_dict,
                         sample_map, save_map)
from logeuc.maps.fastfood import is_power_of_two, next_power_of_two
from logeuc.maps.maclaurin import maclaurin_coefficient
from logeuc.maps.rgw import rgw_coefficient


def sylvester(p):
    h = np.array([[1.0]])
    while h.shape[0] < p:
        h = np.block([[h, h], [h, -h]])
    return h


# --- degree distribution ----------------------------------------------------

def test_degree_pmf_is_renormalized_geometric():
    dist = DegreeDistribution(0.3, 10)
    raw = 0.3 * 0.7 ** np.arange(11)
    assert np.allclose(dist.pmf, raw / raw.sum(), rtol=1e-13)
    assert math.isclose(dist.pmf.sum(), 1.0, rel_tol=1e-14)


def test_degree_histogram_chi_square():
    dist = DegreeDistribution(0.5)
    draws = dist.sample(np.random.default_rng(3), size=200_000)
    counts = np.bincount(draws, minlength=dist.max_degree + 1)
    # pool the tail so every expected count is >= 5
    expected = dist.pmf * draws.size
    k = int(np.flatnonzero(expected >= 5)[-1])
    obs = np.append(counts[:k], counts[k:].sum())
    exp = np.append(expected[:k], expected[k:].sum())
    chi2 = float(np.sum((obs - exp) ** 2 / exp))
    # 99.9% quantile of chi-square with k degrees of freedom, Wilson-Hilferty
    z = 3.09
    crit = k * (1 - 2 / (9 * k) + z * math.sqrt(2 / (9 * k))) ** 3
    assert chi2 < crit


def test_degree_distribution_validation():
    for theta in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(ThetaOutOfRange):
            DegreeDistribution(theta)
    with pytest.raises(DegreeOverflow):
        DegreeDistribution(0.05, 2).sample(np.random.default_rng(0), size=1000)


# --- RGW -------------------------------------------------------------------

def test_rgw_product_equals_materialized_kronecker(rng):
    sigma = 0.9
    for d in (1, 2, 3):
        for n in (0, 1, 2, 3):
            u = rng.normal(0.0, sigma, size=(n, d, d))
            x = random_unit_sym(rng, d).entries
            product = float(np.prod([np.sum(ui * x) for ui in u])) if n else 1.0
            if n:
                w = reduce(np.kron, u)
                xk = reduce(np.kron, [x] * n)
                explicit = float(np.trace(w.T @ xk))
            else:
                explicit = 1.0
            assert math.isclose(product, explicit, rel_tol=1e-10, abs_tol=1e-14)


def test_rgw_features_match_component_definition(rng):
    dim, nu, sigma = 3, 12, 1.3
    fmap = RgwMap(dim, nu, sigma, seed=5, dist=DegreeDistribution(0.4))
    x = random_unit_sym(rng, dim)
    feats = fmap.apply(x)
    for j, comp in enumerate(fmap.components):
        val = comp.coefficient * np.prod([np.sum(u * x.entries) for u in comp.factors])
        assert math.isclose(feats[j], val, rel_tol=1e-12, abs_tol=1e-300)
        log_c = (-2 * comp.degree * math.log(sigma)
                 + 0.5 * (-sigma**-2 - math.log(nu) - math.log(fmap.dist.pmf[comp.degree])
                          - math.log(math.factorial(comp.degree))))
        assert math.isclose(comp.coefficient, math.exp(log_c), rel_tol=1e-12)


def test_rgw_coefficient_is_finite_at_large_degree():
    dist = DegreeDistribution(0.5, 64)
    c = rgw_coefficient(64, 10, 1.0, dist)
    assert math.isfinite(c) and c > 0


def test_rgw_expectation_over_degrees_is_the_kernel(rng):
    # E over rho and Gaussian factors of nu * f_j(x) f_j(y), done by exact
    # summation over the degree law: sum_n rho(n) coef^2 nu (sigma^2 <x,y>)^n
    sigma = 0.8
    dist = DegreeDistribution(0.5)
    x, y = random_unit_sym(rng, 3), random_unit_sym(rng, 3)
    ip = float(x.vector @ y.vector)
    total = sum(dist.pmf[n] * rgw_coefficient(n, 7, sigma, dist) ** 2 * 7 * (sigma**2 * ip) ** n
                for n in range(dist.max_degree + 1))
    assert math.isclose(total, log_euclidean_kernel(x, y, sigma), rel_tol=1e-12)


def test_maclaurin_expectation_over_degrees_is_the_kernel(rng):
    sigma, nu = 1.2, 5
    dist = DegreeDistribution(0.5)
    x, y = random_unit_sym(rng, 3), random_unit_sym(rng, 3)
    ip = float(x.vector @ y.vector)
    total = sum(dist.pmf[n] * maclaurin_coefficient(n, nu, sigma, dist) ** 2 * nu * ip**n
                for n in range(dist.max_degree + 1))
    assert math.isclose(total, log_euclidean_kernel(x, y, sigma), rel_tol=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_monte_carlo_mean_close_to_kernel(rng, scheme):
    x, y = random_unit_sym(rng, 3), random_unit_sym(rng, 3)
    vals = sample_induced_kernel(x, y, scheme, 8, 1.0, 20_000, seed=11)
    exact = log_euclidean_kernel(x, y, 1.0)
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean() - exact) < 5 * se


@pytest.mark.parametrize("scheme", SCHEMES)
def test_chunked_lab_sampler_matches_map_objects(scheme):
    # the vectorized lab sampler and per-object maps estimate the same mean
    rng = np.random.default_rng(99)
    x, y = random_unit_sym(rng, 2), random_unit_sym(rng, 2)
    objs = np.array([induced_kernel(m.apply(x), m.apply(y))
                     for m in (sample_map(scheme, 2, 4, 1.0, seed=s) for s in range(3000))])
    lab = sample_induced_kernel(x, y, scheme, 4, 1.0, 3000, seed=1)
    se = math.sqrt(objs.var(ddof=1) / objs.size + lab.var(ddof=1) / lab.size)
    assert abs(objs.mean() - lab.mean()) < 5 * se


# --- Fastfood ----------------------------------------------------------------

def test_fwht_matches_hadamard_matrix(rng):
    for p in (1, 2, 8, 64):
        x = rng.standard_normal((3, p))
        assert np.allclose(fwht(x), x @ sylvester(p).T, atol=1e-12)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(NotPowerOfTwo):
        fwht(np.zeros(6))
    with pytest.raises(NotPowerOfTwo):
        FastfoodMap(2, 4, 1.0, 0, padded_dim=6)


def test_power_of_two_helpers():
    assert [next_power_of_two(n) for n in (1, 2, 3, 4, 5, 100)] == [1, 2, 4, 4, 8, 128]
    assert is_power_of_two(1) and is_power_of_two(1024) and not is_power_of_two(0)
    assert not is_power_of_two(12)


def test_fastfood_nu_table():
    grid = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000]
    assert [fastfood_nu(v) for v in grid] == [8, 16, 64, 128, 256, 512, 1024, 2048, 4096]


def test_fastfood_projection_matches_dense_matrix(rng):
    fmap = FastfoodMap(3, 20, 0.7, seed=4)
    p = fmap.padded_dim
    assert p == 16 and fmap.n_blocks == 2
    h = sylvester(p)
    x = random_unit_sym(rng, 3).vector
    xp = np.zeros(p)
    xp[:9] = x
    blocks = []
    for b in range(fmap.n_blocks):
        perm = np.eye(p)[fmap.permutations[b]]
        v = (np.diag(fmap.scalings[b]) @ h @ np.diag(fmap.gaussians[b]) @ perm @ h
             @ np.diag(fmap.signs[b])) / (0.7 * math.sqrt(p))
        blocks.append(v @ xp)
    assert np.allclose(fmap.project(x[None, :])[0], np.concatenate(blocks), atol=1e-12)
    feats = fmap.apply(x)
    ref = math.sqrt(2 / 20) * np.cos(np.concatenate(blocks)[:20] + fmap.phases.reshape(-1)[:20])
    assert np.allclose(feats, ref, atol=1e-12)


def test_fastfood_row_norms_follow_chi_distribution():
    fmap = FastfoodMap(4, 16 * 200, 1.0, seed=8)
    eye = np.eye(16)
    v = fmap.project(eye)  # column j of V^T is V e_j
    row_sq = np.sum(v**2, axis=0)
    # ||row||^2 = S_i^2 ||G||^2 p / p = chi^2_p for sigma = 1
    assert abs(row_sq.mean() - 16) < 0.5
    assert abs(row_sq.var() - 32) < 6


# --- shared behavior ----------------------------------------------------------

@pytest.mark.parametrize("scheme", SCHEMES)
def test_maps_are_deterministic_and_shapes(rng, scheme):
    xs = [random_unit_sym(rng, 3) for _ in range(4)]
    a = sample_map(scheme, 3, 30, 1.0, seed=2).transform(xs)
    b = sample_map(scheme, 3, 30, 1.0, seed=2).transform(xs)
    c = sample_map(scheme, 3, 30, 1.0, seed=3).transform(xs)
    assert a.shape == (4, 30)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    single = sample_map(scheme, 3, 30, 1.0, seed=2).apply(xs[1])
    assert np.allclose(single, a[1], rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_maps_validate_inputs(rng, scheme):
    fmap = sample_map(scheme, 3, 10, 1.0)
    with pytest.raises(NormViolation):
        fmap.apply(np.eye(3))
    with pytest.raises(LengthMismatch):
        fmap.transform([random_unit_sym(rng, 2)])
    with pytest.raises(ValueError):
        sample_map(scheme, 3, 0, 1.0)
    with pytest.raises(ValueError):
        sample_map(scheme, 3, 4, 0.0)


def test_scheme_specific_apply_rejects_other_schemes(rng):
    x = random_unit_sym(rng, 2)
    rff = TrigRffMap(2, 4, 1.0, 0)
    mac = MacLaurinMap(2, 4, 1.0, 0)
    assert np.array_equal(apply_trig_rff(rff, x), rff.apply(x))
    assert np.array_equal(apply_maclaurin(mac, x), mac.apply(x))
    for fn, other in ((apply_rgw, rff), (apply_trig_rff, mac), (apply_maclaurin, rff),
                      (apply_fastfood, rff)):
        with pytest.raises(SchemeMismatch):
            fn(other, x)
    with pytest.raises(SchemeMismatch):
        sample_map("nystrom", 2, 4, 1.0)


def test_induced_kernel_length_check():
    assert induced_kernel([1.0, 2.0], [3.0, 4.0]) == 11.0
    with pytest.raises(LengthMismatch):
        induced_kernel([1.0], [1.0, 2.0])


@pytest.mark.parametrize("scheme", SCHEMES)
def test_map_serialization_round_trip(tmp_path, rng, scheme):
    fmap = sample_map(scheme, 3, 17, 0.6, seed=21, theta=0.3)
    path = tmp_path / "map.json"
    save_map(fmap, path)
    back = load_map(path)
    assert type(back) is type(fmap)
    xs = [random_unit_sym(rng, 3) for _ in range(3)]
    assert np.array_equal(back.transform(xs), fmap.transform(xs))
    assert json.loads(path.read_text())["format"] == "logeuc-map"


def test_map_from_dict_rejects_bad_containers():
    good = map_to_dict(sample_map("rff", 2, 3, 1.0))
    with pytest.raises(ParseError):
        map_from_dict({**good, "format": "other"})
    with pytest.raises(ParseError):
        map_from_dict({**good, "version": 99})
    bad = dict(good)
    del bad["nu"]
    with pytest.raises(ParseError):
        map_from_dict(bad)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SCHEMES), st.integers(1, 4), st.integers(1, 40),
       st.floats(0.3, 3.0), st.integers(0, 2**31))
def test_property_features_finite_and_trig_bounded(scheme, dim, nu, sigma, seed):
    rng = np.random.default_rng(seed)
    x = random_unit_sym(rng, dim)
    f = sample_map(scheme, dim, nu, sigma, seed=seed).apply(x)
    assert f.shape == (nu,)
    assert np.all(np.isfinite(f))
    if scheme in ("rff", "fastfood"):
        assert np.all(np.abs(f) <= math.sqrt(2.0 / nu) + 1e-15)
