import math

import numpy as np
import pytest

from hwl.analysis import CovarianceModel, KernelParams, covariance, hermite_poly
from hwl.errors import DomainError
from hwl.fieldsim import (FieldSpec, WindowIndex, dump_field, embedding_eigenvalues, empirical_covariance,
                          empirical_functional, empirical_variance_curve, iter_fields, load_field, simulate_field,
                          trend_slope)
from hwl.geometry import parse_window
from hwl.riesz import variance_increment

DISK = parse_window("disk")


@pytest.fixture(scope="module")
def spec():
    return FieldSpec(grid_side=256, spacing=1.0, model=CovarianceModel("cauchy", 1.0), seed=5, replicates=40)


def test_embedding_nonnegative(spec):
    _, root = embedding_eigenvalues(spec)
    assert np.all(np.isfinite(root)) and np.all(root >= 0)


def test_field_mean_zero(spec):
    means = np.array([f.mean() for f in iter_fields(spec)])
    assert abs(means.mean()) < 4 * means.std(ddof=1) / math.sqrt(len(means))


def test_field_reproducible(spec):
    assert np.array_equal(simulate_field(spec, 3), simulate_field(spec, 3))
    assert not np.array_equal(simulate_field(spec, 3), simulate_field(spec, 4))


def test_empirical_covariance_matches_model(spec):
    lags = [1, 5, 10, 25, 50]
    mean, se = empirical_covariance(iter_fields(spec), lags)
    model = covariance(spec.model, np.array(lags, dtype=float))
    assert np.all(np.abs(mean - model) < 4 * se)
    # far lag follows the power law r^-alpha
    assert abs(mean[-1] - 0.02) < 4 * se[-1] + 0.02 * 0.01


def test_hermite_transform_moments(spec):
    # E H2(xi) = 0 and E H2(xi(x)) H2(xi(x + e1)) = 2 B(1)^2
    prods, vals = [], []
    for f in iter_fields(spec):
        g = hermite_poly(2, f)
        vals.append(g.mean())
        prods.append(np.mean(g[:, :-1] * g[:, 1:]))
    vals, prods = np.array(vals), np.array(prods)
    assert abs(vals.mean()) < 4 * vals.std(ddof=1) / math.sqrt(len(vals))
    ref = 2 * covariance(spec.model, 1.0) ** 2
    assert abs(prods.mean() - ref) < 4 * prods.std(ddof=1) / math.sqrt(len(prods))


def test_functional_zero_at_origin_and_centered(spec):
    fs = empirical_functional(iter_fields(spec), DISK, KernelParams(2, 1, 1.0), 50.0, [0.0, 0.5, 1.0])
    assert np.all(fs.values[:, 0] == 0)
    m = fs.values[:, 1:].mean(axis=0)
    se = fs.values[:, 1:].std(axis=0, ddof=1) / math.sqrt(fs.values.shape[0])
    assert np.all(np.abs(m) < 4 * se)


def test_window_too_large():
    with pytest.raises(DomainError):
        WindowIndex(DISK, 256, 1.0, 200.0)


def test_trend_slope_recovers_linear_trend():
    rng = np.random.default_rng(0)
    s = np.linspace(0, 0.8, 5)
    inc = rng.standard_normal((400, 5)) * np.sqrt(1.0 - 0.5 * s)
    slope, se = trend_slope(s, inc)
    assert abs(slope + 0.5) < 4 * se


def test_disk_curve_and_unit_variance():
    spec = FieldSpec(grid_side=512, spacing=1.0, model=CovarianceModel("cauchy", 1.0), seed=6, replicates=100)
    params = KernelParams(2, 1, 1.0)
    curve = empirical_variance_curve(spec, DISK, params, 50.0, 0.1, [0.0, 0.2, 0.4, 0.6, 0.8])
    assert curve.meta["slope"] < 0
    ref = variance_increment(params, DISK, 0.0, 1.0, method="quadrature").value
    assert curve.meta["var_y1"] == pytest.approx(ref, rel=0.2)


def test_interval_curve_flat():
    spec = FieldSpec(grid_side=4096, spacing=1.0, model=CovarianceModel("cauchy", 0.6, n=1), seed=1,
                     replicates=200, dim=1)
    params = KernelParams(1, 1, 0.6)
    curve = empirical_variance_curve(spec, parse_window("interval"), params, 1000.0, 0.1,
                                     np.round(np.arange(0, 0.9, 0.2), 12))
    pooled = curve.variance.mean()
    assert np.all(np.abs(curve.variance - pooled) < 3 * curve.stderr)
    exact = variance_increment(params, parse_window("interval"), 0.0, 0.1, method="exact1d").value
    assert pooled == pytest.approx(exact, rel=0.2)


def test_kappa_two_curve_decreasing():
    spec = FieldSpec(grid_side=512, spacing=1.0, model=CovarianceModel("cauchy", 0.6), seed=2, replicates=200)
    curve = empirical_variance_curve(spec, DISK, KernelParams(2, 2, 0.6), 50.0, 0.1,
                                     np.round(np.arange(0, 0.9, 0.2), 12))
    assert curve.meta["slope"] + 2 * curve.meta["slope_stderr"] < 0


def test_dump_roundtrip(tmp_path, spec):
    f = simulate_field(spec, 0)
    path = tmp_path / "f.bin"
    dump_field(path, f, 1.0, 1.0)
    assert path.stat().st_size == 32 + f.size * 8
    g, spacing, alpha = load_field(path)
    assert np.array_equal(f, g) and spacing == 1.0 and alpha == 1.0


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"x" * 40)
    with pytest.raises(DomainError):
        load_field(path)
