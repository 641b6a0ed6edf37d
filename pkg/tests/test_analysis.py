import math

import numpy as np
import pytest
from numpy.polynomial import hermite_e
from scipy import special

from hwl.analysis import (CovarianceModel, KernelParams, bessel_j1, c1, c2, covariance, gamma, hermite_coeffs,
                          hermite_poly, shifted_lattice_zeta)
from hwl.errors import DomainError
from hwl.geometry import parse_window


def _he(m, u):
    return hermite_e.hermeval(u, [0] * m + [1])


@pytest.mark.parametrize("m,u", [(2, 3.0), (0, 0.7), (0, -5.0), (5, 1.0), (7, -1.3), (10, 2.5)])
def test_hermite_poly_matches_numpy(m, u):
    assert hermite_poly(m, u) == pytest.approx(_he(m, u), rel=1e-13, abs=1e-13)


def test_hermite_known_values():
    assert hermite_poly(2, 3.0) == pytest.approx(8.0)
    assert hermite_poly(0, 1.234) == 1.0
    # u^5 - 10u^3 + 15u at u = 1
    assert hermite_poly(5, 1.0) == pytest.approx(6.0)


def test_hermite_orthogonality():
    x, w = hermite_e.hermegauss(40)
    w = w / math.sqrt(2 * math.pi)
    for i in range(11):
        for j in range(11):
            val = np.sum(w * hermite_poly(i, x) * hermite_poly(j, x))
            scale = math.sqrt(math.factorial(i) * math.factorial(j))
            assert abs(val / scale - (i == j)) <= 1e-10


def test_hermite_coeffs_h2():
    e = hermite_coeffs(lambda u: u * u - 1, 4)
    assert np.allclose(e.coeffs, [0, 0, 1, 0, 0], atol=1e-12)
    assert e.rank == 2


def test_hermite_coeffs_cubic():
    e = hermite_coeffs(lambda u: u ** 3, 4)
    assert np.allclose(e.coeffs, [0, 3, 0, 1, 0], atol=1e-12)
    assert e.rank == 1


def test_hermite_coeffs_constant_warns():
    with pytest.warns(UserWarning, match="rank 0"):
        e = hermite_coeffs(lambda u: np.ones_like(u), 2)
    assert e.rank == 0
    assert e.coeffs[0] == pytest.approx(1.0)


@pytest.mark.parametrize("n,alpha,expected", [(2, 1.0, 2 * math.pi), (1, 0.5, math.sqrt(2 * math.pi)),
                                              (3, 1.5, (2 * math.pi) ** 1.5)])
def test_c1_values(n, alpha, expected):
    assert c1(n, alpha) == pytest.approx(expected, rel=1e-12)


def test_c1_against_scipy_gamma():
    for n, alpha in [(1, 0.3), (2, 0.7), (3, 2.2)]:
        ref = 2 ** alpha * math.pi ** (n / 2) * special.gamma(alpha / 2) / special.gamma((n - alpha) / 2)
        assert c1(n, alpha) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 2.0, -1.0])
def test_c1_domain(alpha):
    with pytest.raises(DomainError):
        c1(2, alpha)


def test_gamma_against_scipy():
    for x in (0.1, 0.5, 1.7, 4.25, 10.5, -0.5, -2.3):
        assert gamma(x) == pytest.approx(special.gamma(x), rel=1e-13)


def test_c2_interval():
    est = c2(KernelParams(1, 1, 0.5), parse_window("interval"))
    assert est.value == pytest.approx(math.sqrt(2 * math.pi) * 8 / 3, rel=1e-9)


def test_c2_disk():
    est = c2(KernelParams(2, 1, 1.0), parse_window("disk"))
    assert est.value == pytest.approx(2 * math.pi * 16 * math.pi / 3, rel=1e-8)


def test_kernel_params_admissibility():
    with pytest.raises(DomainError, match=r"alpha must lie in \(0, n/kappa\)"):
        KernelParams(2, 1, 3.0)
    with pytest.raises(DomainError):
        KernelParams(2, 2, 1.0)
    assert KernelParams(2, 2, 0.6).exponent == pytest.approx(1.2)


def test_bessel_j1():
    assert bessel_j1(0.0) == 0.0
    assert bessel_j1(1e-6) / 1e-6 == pytest.approx(0.5, abs=1e-10)
    assert abs(bessel_j1(3.8317059702)) < 1e-8
    x = np.array([0.3, 2.0, 7.5, 19.0, 40.0, 250.0, 3000.0])
    assert np.allclose(bessel_j1(x), special.j1(x), rtol=1e-10, atol=1e-13)


def test_covariance_cauchy():
    m = CovarianceModel("cauchy", 1.0)
    assert covariance(m, 0.0) == 1.0
    assert covariance(m, math.sqrt(3.0)) == pytest.approx(0.5)
    m8 = CovarianceModel("cauchy", 0.8)
    assert covariance(m8, 100.0) == pytest.approx(100.0 ** -0.8, rel=1e-4)


def test_covariance_slowly_varying_factor():
    m = CovarianceModel("cauchy", 0.6)
    r = np.array([1e2, 1e3, 1e4])
    assert np.all(np.diff(np.abs(covariance(m, r) * r ** 0.6 - 1)) < 0)


def test_shifted_lattice_zeta_1d():
    # sum over half-integers of |k|^-s equals 2 (2^s - 1) zeta(s)
    for s in (0.3, 0.6, 0.9):
        ref = 2 * (2 ** s - 1) * special.zeta(s)
        assert shifted_lattice_zeta(1, s) == pytest.approx(ref, rel=1e-12)


def test_shifted_lattice_zeta_2d_bruteforce():
    s = 1.0
    # (sum - integral) over a large square, with the boundary term handled by a fine quadrature
    L = 200
    k = np.arange(-L, L) + 0.5
    kx, ky = np.meshgrid(k, k)
    lattice = np.sum((kx * kx + ky * ky) ** (-s / 2))
    x, w = np.polynomial.legendre.leggauss(200)
    # integral of |x|^-1 over [-L, L]^2 = 8 L asinh(1)
    integral = 8 * L * math.asinh(1.0)
    assert shifted_lattice_zeta(2, s) == pytest.approx(lattice - integral, abs=2e-3)
