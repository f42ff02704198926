import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_unit_log, random_unit_sym
from logeuc.errors import LengthMismatch, NormViolation
from logeuc.kernels import (GramMatrix, exact_gram, induced_gram, log_euclidean_kernel,
                            log_euclidean_kernel_inner, read_gram_csv, write_gram_csv)
from logeuc.maps import sample_map


def test_self_kernel_is_one(rng):
    for _ in range(50):
        x = random_unit_log(rng, 4)
        assert abs(log_euclidean_kernel(x, x, 0.7) - 1.0) <= 1e-12
        assert abs(log_euclidean_kernel_inner(x, x, 0.7) - 1.0) <= 1e-12


def test_distance_and_inner_forms_agree(rng):
    for _ in range(200):
        x, y = random_unit_sym(rng, 3), random_unit_sym(rng, 3)
        sigma = float(rng.uniform(0.3, 3.0))
        assert abs(log_euclidean_kernel(x, y, sigma) - log_euclidean_kernel_inner(x, y, sigma)) <= 1e-12


def test_kernel_known_value():
    x = np.zeros((2, 2))
    x[0, 0] = 1.0
    y = np.zeros((2, 2))
    y[1, 1] = 1.0
    # ||x - y||^2 = 2
    assert math.isclose(log_euclidean_kernel(x, y, 2.0), math.exp(-2 / 8), rel_tol=1e-15)


def test_kernel_input_validation(rng):
    x = random_unit_sym(rng, 3)
    with pytest.raises(NormViolation):
        log_euclidean_kernel(x, 2 * np.eye(3), 1.0)
    with pytest.raises(LengthMismatch):
        log_euclidean_kernel(x, random_unit_sym(rng, 2), 1.0)
    with pytest.raises(ValueError):
        log_euclidean_kernel(x, x, 0.0)


def test_exact_gram_matches_double_loop(rng):
    batch = [random_unit_sym(rng, 3) for _ in range(12)]
    g = exact_gram(batch, 0.9)
    ref = np.array([[log_euclidean_kernel(a, b, 0.9) for b in batch] for a in batch])
    assert np.allclose(g.entries, ref, atol=1e-13)
    assert g.is_symmetric(0.0)
    assert np.array_equal(np.diag(g.entries), np.ones(12))
    assert g.min_eigenvalue() > -1e-12
    assert g.source == {"kind": "exact", "sigma": 0.9}
    with pytest.raises(ValueError):
        g.entries[0, 0] = 2.0


def test_exact_gram_rejects_non_unit(rng):
    with pytest.raises(NormViolation):
        exact_gram([random_unit_sym(rng, 2), np.eye(2)], 1.0)


def test_induced_gram_is_feature_inner_products(rng):
    batch = [random_unit_sym(rng, 3) for _ in range(6)]
    feats = sample_map("rff", 3, 50, 1.0, seed=1).transform(batch)
    g = induced_gram(feats, {"scheme": "rff"})
    assert np.allclose(g.entries, feats @ feats.T, atol=1e-14)
    assert g.source["kind"] == "induced"
    assert g.is_symmetric(0.0)
    with pytest.raises(LengthMismatch):
        induced_gram([np.ones(3), np.ones(4)])


def test_induced_gram_approaches_exact_gram(rng):
    batch = [random_unit_sym(rng, 3) for _ in range(8)]
    exact = exact_gram(batch, 1.0).entries
    feats = sample_map("rff", 3, 20_000, 1.0, seed=4).transform(batch)
    assert np.max(np.abs(induced_gram(feats).entries - exact)) < 0.05


def test_gram_csv_round_trip(tmp_path, rng):
    g = exact_gram([random_unit_sym(rng, 2) for _ in range(5)], 1.5)
    path = tmp_path / "g.csv"
    write_gram_csv(g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# gram n=5 kind=exact;sigma=1.5"
    assert lines[1] == "c0,c1,c2,c3,c4"
    back = read_gram_csv(path)
    assert np.array_equal(back.entries, g.entries)
    assert back.source == {"kind": "exact", "sigma": "1.5"}


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.floats(0.05, 20.0))
def test_property_kernel_range_and_symmetry(d, seed, sigma):
    rng = np.random.default_rng(seed)
    x, y = random_unit_sym(rng, d), random_unit_sym(rng, d)
    k = log_euclidean_kernel(x, y, sigma)
    assert 0.0 <= k <= 1.0
    assert k == log_euclidean_kernel(y, x, sigma)
    assert k >= math.exp(-2.0 / sigma**2) * (1 - 1e-12)
