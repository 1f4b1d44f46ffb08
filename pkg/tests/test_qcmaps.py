import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridnet.errors import ConstantTooSmall, OrientationFailure, PreconditionViolation
from gridnet.qcmaps import (
    CRITICAL_POINT,
    CUBIC,
    SMOOTH,
    Grid,
    H,
    PlanarMap,
    SpineMapParams,
    alpha_map,
    beta_map,
    build_G,
    build_spine_map,
    critical_points,
    dH,
    dilatation,
    df0,
    f0,
    f0_bounds,
    fd_wirtinger,
    identity,
    interpolate_strip,
    lemma1_bound,
    lemma2_margins,
    log_H_phase,
    minimal_M,
    one,
    trace_real_preimage,
)

STRIP = Grid(-30.0, 30.0, 0.0, 1.0, 200, 40)


@pytest.fixture(scope="module")
def G():
    return build_G()


def test_identity_has_unit_dilatation():
    fmap = interpolate_strip(identity, identity, 2.0, one, one)
    rep = dilatation(fmap, STRIP)
    assert rep.sup_K == pytest.approx(1.0, abs=1e-14)
    assert rep.sup_mu == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("shift", [0.1, 0.5, 1.0])
def test_constant_shift_matches_singular_values(shift):
    # f(x + iy) = x + shift*y + iy has Jacobian [[1, shift], [0, 1]]
    fmap = interpolate_strip(identity, lambda x: identity(x) + shift, 2.0, one, one)
    s = np.linalg.svd(np.array([[1.0, shift], [0.0, 1.0]]), compute_uv=False)
    rep = dilatation(fmap, STRIP)
    assert rep.sup_K == pytest.approx(s[0] / s[1], rel=1e-12)


def test_angular_stretches():
    w = np.exp(1j * np.linspace(0.01, 3.13, 50)) * np.linspace(0.5, 3, 50)
    Ka = dilatation(alpha_map(), Grid(-2, 2, 0.1, 2, 20, 20)).sup_K
    Kb = dilatation(beta_map(), Grid(-2, 2, -2, -0.1, 20, 20)).sup_K
    assert Ka == pytest.approx(1.5, rel=1e-12)
    assert Kb == pytest.approx(2.0, rel=1e-12)
    # closed-form Wirtinger derivatives agree with differences
    fz, fzb = alpha_map().derivatives(w)
    gz, gzb = fd_wirtinger(alpha_map().fn, w)
    assert np.max(np.abs(fz - gz)) < 1e-8 and np.max(np.abs(fzb - gzb)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(b=st.floats(-0.4, 0.4), c0=st.floats(0.0, 0.3), c1=st.floats(0.0, 0.3),
       k0=st.floats(1.0, 3.0), k1=st.floats(1.0, 3.0))
def test_lemma1_bound_on_random_pairs(b, c0, c1, k0, k1):
    # slopes stay in [1/2, 2] and the gap below M - 1 = 1
    M = 2.0
    fmap = interpolate_strip(lambda x: x + b + c0 * np.sin(k0 * x) / k0, lambda x: x + c1 * np.sin(k1 * x) / k1,
                             M, lambda x: 1 + c0 * np.cos(k0 * x), lambda x: 1 + c1 * np.cos(k1 * x))
    assert dilatation(fmap, STRIP).sup_K <= lemma1_bound(M)


def test_lemma1_hypotheses_enforced():
    with pytest.raises(PreconditionViolation):
        interpolate_strip(lambda x: 3 * x, identity, 2.0)
    with pytest.raises(PreconditionViolation):
        interpolate_strip(lambda x: x + 5.0, identity, 2.0)


def test_dilatation_tends_to_one():
    Ks = []
    for eps in [0.4, 0.2, 0.1, 0.05, 0.025]:
        fmap = interpolate_strip(lambda x: x + eps * np.sin(x), identity, 2.0,
                                 lambda x: 1 + eps * np.cos(x), one)
        Ks.append(dilatation(fmap, STRIP).sup_K)
    assert all(b < a for a, b in zip(Ks, Ks[1:]))
    assert Ks[-1] - 1 < 0.1


def test_reversing_map_fails_orientation():
    flip = PlanarMap(np.conj)
    with pytest.raises(OrientationFailure):
        dilatation(flip, STRIP)


def test_f0_bounds():
    b = f0_bounds()
    assert b["ok"]
    assert b["sup_shift"] == pytest.approx(math.pi / 4, abs=1e-12)
    assert b["sup_slope_dev"] == pytest.approx(0.5, abs=1e-12)
    x = np.linspace(-50, 50, 1001)
    assert np.max(np.abs(df0(x) - (f0(x + 1e-6) - f0(x - 1e-6)) / 2e-6)) < 1e-8


def test_H_derivative_and_zero():
    w = np.array([-3 + 2j, -10 - 1j, -0.5 + 7j])
    h = 1e-6
    assert np.max(np.abs(dH(w) - (H(w + h) - H(w - h)) / (2 * h))) < 1e-7
    assert abs(dH(CRITICAL_POINT)) < 1e-15
    assert H(0) == pytest.approx(-1)


def test_log_H_phase_continuous_branch():
    v = np.linspace(-20, 20, 4001)
    phase = log_H_phase(v)
    assert np.max(np.abs(np.exp(1j * phase) - H(1j * v) / np.abs(H(1j * v)))) < 1e-12
    assert np.max(np.abs(np.diff(phase))) < 0.02


def test_minimal_constant():
    assert minimal_M(CUBIC) == 47
    assert all(m >= 0 for m in lemma2_margins(47, CUBIC).values())
    assert any(m < 0 for m in lemma2_margins(46, CUBIC).values())
    assert minimal_M(SMOOTH) > 47
    with pytest.raises(ConstantTooSmall):
        build_G(SpineMapParams(M=20))


def test_G_pieces(G):
    M = G.M
    t = np.linspace(-20, 20, 4001)
    assert np.max(np.abs(G(1 + 1j * t) - np.exp(1 + 1j * t))) < 1e-12
    far = -M - 1 - np.linspace(0, 5, 11) + 3j
    assert np.max(np.abs(G(far) - np.exp(far))) < 1e-15
    band = dilatation(G, Grid(-M - 1.0, -float(M), -20, 20, 100, 200))
    assert band.sup_mu <= 0.5
    # closed-form and differenced derivatives in every piece
    w = np.array([-M - 0.5 + 1j, -10 + 2j, 0.5 - 3j, -M - 3 + 0.2j])
    fz, fzb = G.derivatives(w)
    gz, gzb = fd_wirtinger(G.fn, w, 1e-6)
    assert np.max(np.abs(fz - gz) / np.abs(G(w))) < 1e-7
    assert np.max(np.abs(fzb - gzb) / np.abs(G(w))) < 1e-7


def test_G_continuous_across_seams(G):
    M = G.M
    v = np.linspace(-15, 15, 301)
    for x in (-M - 1, -M, 0.0):
        left, right = G(x - 1e-12 + 1j * v), G(x + 1e-12 + 1j * v)
        assert np.max(np.abs(left - right) / np.abs(left)) < 1e-9


def test_realness_left_of_strip(G):
    rng = np.random.default_rng(7)
    w = rng.uniform(-G.M - 10, 0, 500) + 1j * rng.uniform(-30, 30, 500)
    assert np.max(np.abs(G(np.conj(w)) - np.conj(G(w))) / np.abs(G(w))) < 1e-13
    x = np.linspace(-G.M - 10, 0, 500)
    assert np.max(np.abs(G(x).imag)) == 0.0


def test_single_critical_point(G):
    crit = critical_points(G)
    assert len(crit) == 1
    assert abs(crit[0] - CRITICAL_POINT) < 1e-9


def test_real_preimage_topology(G):
    trace = trace_real_preimage(G)
    s = trace.summary
    assert s["ok"]
    assert s["arcs"] == 1 and s["seeds_accounted"] == 13
    assert s["arc_real_crossings"] == [1]
    assert s["far_left_deviation"] < 1e-9
    # the arc meets the real axis at the critical point
    pts = next(c for c in trace.components if c["kind"] == "arc")["points"]
    pts = pts[np.abs(pts.imag) > 1e-9]
    i = int(np.flatnonzero(np.sign(pts.imag[1:]) != np.sign(pts.imag[:-1]))[0])
    a, b = pts[i], pts[i + 1]
    x = a.real + (b.real - a.real) * a.imag / (a.imag - b.imag)
    # chord interpolation over a 0.2 step
    assert x == pytest.approx(CRITICAL_POINT, abs=1e-2)


@pytest.fixture(scope="module")
def spine():
    return build_spine_map(SpineMapParams(c=0.0))


def test_spine_map_boundary_and_periodicity(spine):
    t = np.linspace(-10, 10, 201)
    assert np.max(np.abs(spine.g(1j * t) - np.exp(1j * t))) < 1e-15
    P = spine.period
    w = np.random.default_rng(1).uniform(-3 * P, -P, 200) + 1j * np.random.default_rng(2).uniform(-9, 9, 200)
    ratio = spine.g(w - P) / (math.exp(-P) * spine.g(w))
    assert np.max(np.abs(ratio - 1)) < 1e-12


def test_spine_map_seams(spine):
    P = spine.period
    v = np.linspace(-9, 9, 181)
    for k in range(1, 4):
        x = -1.0 - k * P + 1.0  # translate of Re w = 1, where band k meets band k - 1
        left, right = spine.g(x - 1e-13 + 1j * v), spine.g(x + 1e-13 + 1j * v)
        assert np.max(np.abs(left / right - 1)) < 1e-9


def test_tiling_keeps_dilatation(spine):
    P = spine.period
    one_band = dilatation(spine, Grid(-P, 0.0, -8, 8, 300, 80), mode="fd").sup_K
    two_bands = dilatation(spine, Grid(-2 * P, 0.0, -8, 8, 600, 80), mode="fd").sup_K
    assert two_bands == pytest.approx(one_band, rel=1e-6)


def test_spine_map_value_shift():
    assert build_spine_map(SpineMapParams(a=2.0))(0j) == pytest.approx(3.0)
    assert build_spine_map(SpineMapParams(a=math.inf))(0j) == pytest.approx(1.0)
