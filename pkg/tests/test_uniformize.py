import math

import numpy as np
import pytest

from gridnet.uniformize import (
    COSH1,
    HYPERBOLIC,
    INCONCLUSIVE,
    TAU_GOLDEN,
    compute_tau,
    default_wp,
    fit_gluing,
    joukowski,
    lower_matching,
    synthetic_fit,
    tau_by_quadrature,
    uniformize_A,
    uniformize_B,
    upper_phase,
    volkovyskii_check,
    wp,
)
from gridnet.qcmaps import fd_wirtinger
from gridnet.elliptic import quad_modulus


@pytest.fixture(scope="module")
def data():
    return compute_tau()


@pytest.fixture(scope="module")
def fit():
    return fit_gluing()


def test_tau_golden_and_oracles(data):
    assert abs(data.tau - TAU_GOLDEN) < 1e-10
    assert data.k == pytest.approx(math.tanh(0.25) ** 2, rel=1e-15)
    assert tau_by_quadrature() == pytest.approx(data.tau, rel=1e-9)
    assert data.rectangle_modulus == pytest.approx(quad_modulus((1.0, COSH1, math.inf, -1.0)), rel=1e-11)


def test_joukowski_maps_circle_to_segment():
    z = np.exp(1j * np.linspace(0, np.pi, 50))
    assert np.max(np.abs(joukowski(z).imag)) < 1e-15
    assert joukowski(math.e) == pytest.approx(COSH1)


def test_corners(data):
    tau = data.tau
    vals = wp(np.array([0.0, math.pi / 2, 1j * tau, -math.pi / 2, -math.pi / 2 + 1j * tau]))
    assert vals[0] == pytest.approx(1.0, abs=1e-12)
    assert vals[1] == pytest.approx(math.e, abs=1e-12)
    assert vals[2] == pytest.approx(-1.0, abs=1e-12)
    assert vals[3] == pytest.approx(1 / math.e, abs=1e-12)
    assert abs(vals[4]) < 1e-12
    assert abs(wp(math.pi / 2 + 1j * tau)) > 1e20


def test_double_periodicity_and_symmetry(data):
    rng = np.random.default_rng(11)
    z = rng.uniform(-3, 3, 300) + 1j * rng.uniform(-2, 2, 300)
    z = z[np.abs(wp(z)) < 1e3]
    for period in (2 * math.pi, 2j * data.tau):
        rel = np.abs(wp(z + period) - wp(z)) / np.maximum(1.0, np.abs(wp(z)))
        assert np.max(rel) < 1e-9
    assert np.max(np.abs(wp(np.conj(z)) - np.conj(wp(z))) / np.maximum(1.0, np.abs(wp(z)))) < 1e-9


def test_rectangle_image(data):
    x = np.linspace(0.01, math.pi / 2 - 0.01, 60)
    y = np.linspace(0.01, data.tau - 0.01, 60)
    X, Y = np.meshgrid(x, y)
    vals = wp(X + 1j * Y)
    assert np.all(vals.imag > 0) and np.all(np.abs(vals) > 1)
    edge = wp(x)
    assert np.all(np.diff(edge.real) > 0) and np.max(np.abs(edge.imag)) < 1e-12
    top = wp(x + 1j * data.tau)
    assert np.all(top.real < -1 + 1e-12) and np.max(np.abs(top.imag)) < 1e-9
    side = wp(1j * y)
    assert np.max(np.abs(np.abs(side) - 1)) < 1e-12


def test_interior_is_conformal(data):
    rng = np.random.default_rng(5)
    z = rng.uniform(0.1, 1.4, 100) + 1j * rng.uniform(0.1, data.tau - 0.1, 100)
    fz, fzb = fd_wirtinger(wp, z, 1e-5)
    assert np.max(np.abs(fzb) / np.abs(fz)) < 1e-6


def test_boundary_ranges():
    # Im z = pi is not exact in floating point; sin amplifies that error by cosh(e^x)
    x = np.linspace(-5, 1.5, 200)
    a_low = uniformize_A(x + 0j)
    b_low = uniformize_B(x + 2j * math.pi)
    for vals in (a_low, b_low):
        assert np.max(np.abs(vals.imag)) < 1e-9
        assert np.all((vals.real > 1 / math.e - 1e-12) & (vals.real < math.e + 1e-12))
    a_up = uniformize_A(x + 1j * math.pi)
    b_up = uniformize_B(x + 1j * math.pi)
    assert np.max(np.abs(np.abs(a_up) - 1)) < 1e-9
    assert np.max(np.abs(np.abs(b_up) - 1)) < 1e-9


def test_matchings_compose():
    u = np.linspace(0.0, 60.0, 3001)
    assert np.max(np.abs(np.exp(np.sin(lower_matching(u))) - wp(u))) < 1e-8
    y = np.linspace(0.0, 60.0, 3001)
    assert np.max(np.abs(np.exp(-1j * upper_phase(y)) - wp(-1j * y))) < 1e-8
    assert np.all(np.diff(lower_matching(u)) > 0)


def test_gluing_fit(fit, data):
    s = fit.summary()
    assert s["f_increasing"] and s["g_increasing"]
    assert fit.inf_df > 0
    assert math.isfinite(fit.sup_tdg)
    assert fit.p_residual < 1e-9 and fit.q_residual < 1e-9
    assert fit.orientation == 1
    assert fit.tau == data.tau


def test_gluing_csv_deterministic():
    a = fit_gluing(n=101).to_csv()
    b = fit_gluing(n=101).to_csv()
    assert a == b and a.startswith("curve,t,value")


def test_verdicts(fit):
    assert volkovyskii_check(fit).verdict == HYPERBOLIC
    assert volkovyskii_check(synthetic_fit(lambda t: 1.0)).verdict == INCONCLUSIVE
    assert volkovyskii_check(synthetic_fit(lambda t: 1.0 / t)).verdict == HYPERBOLIC


def test_default_wp_cached():
    assert default_wp() is default_wp()
