import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimax_adaptive import value as vf
from minimax_adaptive.errors import InvalidArgumentError, NumericalError
from minimax_adaptive.riccati import GameSpec, solve_riccati

from conftest import random_psd_info, scalar_spec


def Zs(z11, z12, z22):
    return np.array([[z11, z12], [z12, z22]])


def test_figure_points(ex1):
    assert vf.v_star(ex1, [1.0], vf.figure_z(0.0)) == pytest.approx(3.3165, abs=1e-3)
    assert vf.v_star(ex1, [1.0], vf.figure_z(0.5)) == pytest.approx(1.6985, abs=1e-3)
    assert vf.v_star(ex1, [1.0], vf.figure_z(0.1)) == pytest.approx(2.293, abs=1e-3)
    for z in (0.05, 0.2, 0.3, 0.7):
        assert vf.v_star(ex1, [1.0], vf.figure_z(z)) == vf.v_star(ex1, [1.0], vf.figure_z(-z))


def test_zero_information(ex1):
    Z0 = np.zeros((2, 2))
    P, T = ex1.sol.P[0, 0], ex1.sol.T[0, 0]
    assert vf.v_bar0(ex1, [2.0], Z0) == pytest.approx(4 * P)
    assert vf.v_bar1(ex1, [2.0], Z0) == pytest.approx(4 * T)
    assert vf.v_star(ex1, [0.0], Z0) == 0.0


def test_threshold_and_coefficients(ex1):
    thr = vf.branch_threshold(ex1)
    assert thr == pytest.approx(0.2541, abs=1e-3)
    P, T = ex1.sol.P[0, 0], ex1.sol.T[0, 0]
    assert ex1.gamma2 == pytest.approx(6.3665, abs=1e-3)
    assert ex1.gamma2**2 / (T - P) == pytest.approx(25.05, abs=1e-2)


def test_branch_continuity(ex1):
    thr = vf.branch_threshold(ex1)
    eps = 1e-9
    below = vf.v_star(ex1, [1.0], vf.figure_z(thr - eps))
    above = vf.v_star(ex1, [1.0], vf.figure_z(thr + eps))
    assert below == pytest.approx(above, abs=1e-6)


def test_batch_matches_single(ex1, rng):
    xs = rng.standard_normal((20, 1))
    Z = np.array([random_psd_info(rng, 1) for _ in range(20)])
    batch = vf.v_star(ex1, xs, Z)
    single = [vf.v_star(ex1, x, z) for x, z in zip(xs, Z)]
    assert np.allclose(batch, single, rtol=0, atol=0)


def test_chain_inequality(ex1, rng):
    xs = rng.uniform(-3, 3, (1000, 1))
    Z = np.array([random_psd_info(rng, 1) * rng.uniform(0, 0.5) for _ in range(1000)])
    b0, b1, st_ = vf.v_bar0(ex1, xs, Z), vf.v_bar1(ex1, xs, Z), vf.v_star(ex1, xs, Z)
    assert np.min(b1 - b0) >= -1e-9
    assert np.min(st_ - b1) >= -1e-9


@pytest.mark.parametrize("which", ["v_bar0", "v_bar1", "v_star"])
def test_diagonal_shift(ex1, rng, which):
    # adding block-diagonal data lowers the value by gamma^2 (tr D_vv + tr(A D_xx A^T))
    f = getattr(vf, which)
    a = ex1.spec.A[0, 0]
    for _ in range(50):
        x = rng.standard_normal(1)
        Z = random_psd_info(rng, 1)
        d1, d2 = rng.uniform(0, 2, 2)
        shifted = f(ex1, x, Z + np.diag([d1, d2]))
        assert shifted == pytest.approx(f(ex1, x, Z) - ex1.gamma2 * (d1 + a * a * d2), abs=1e-9)


@pytest.mark.parametrize("which", ["v_bar0", "v_bar1", "v_star"])
def test_homogeneity(ex1, rng, which):
    f = getattr(vf, which)
    for _ in range(50):
        x = rng.standard_normal(1)
        Z = random_psd_info(rng, 1)
        s = rng.uniform(0.1, 5)
        assert f(ex1, s * x, s * s * Z) == pytest.approx(s * s * f(ex1, x, Z), rel=1e-10, abs=1e-10)


def _lemma_brute(cf, x, Y, step=1e-3):
    spec, sol = cf.spec, cf.sol
    a, b, q, r, s = (float(M[0, 0]) for M in (spec.A, spec.B, spec.Q, spec.R, sol.S))
    k = abs(float(sol.K[0, 0]))

    def worst(us):
        return np.maximum.reduce([q * x * x + r * us * us + s * (i * a * x + b * us) ** 2
                                  - 2 * i * a * Y for i in (1.0, -1.0)])

    us = np.arange(-2 * k * abs(x) - 1, 2 * k * abs(x) + 1, step)
    u0 = us[np.argmin(worst(us))]
    # the minimum often sits on the kink between the two signs; zoom in
    fine = np.linspace(u0 - step, u0 + step, 4001)
    return float(worst(fine).min())


def test_lemma_against_brute_force(ex1, rng):
    worst = 0.0
    for _ in range(200):
        x = rng.uniform(-2, 2)
        Y = rng.uniform(-4, 4)
        closed = vf.lemma_aa_minimax(ex1, [x], [[Y]])
        brute = _lemma_brute(ex1, x, Y)
        worst = max(worst, abs(closed.value - brute))
    assert worst <= 1e-4


def test_lemma_minimiser(ex1):
    K = ex1.sol.K[0, 0]
    # evidence Y = gamma^2 * z12 with z12 = -1 saturates theta_hat to +1
    lm = vf.lemma_aa_minimax(ex1, [1.0], [[ex1.gamma2 * -1.0]])
    assert lm.theta_hat == 1.0
    assert lm.u_hat[0] == pytest.approx(-K)
    lm0 = vf.lemma_aa_minimax(ex1, [0.0], [[0.0]])
    assert lm0.theta_hat == 0.0 and lm0.value == 0.0


def test_matrix_case_chain(rng):
    A = np.array([[1.0, 0.4], [-0.2, 0.8]])
    B = np.array([[0.0], [1.0]])
    spec = GameSpec(A, B, np.eye(2), np.eye(1), 6.0)
    cf = vf.ClosedFormValue.from_spec(spec)
    xs = rng.standard_normal((300, 2))
    Z = np.array([random_psd_info(rng, 2) * 0.1 for _ in range(300)])
    assert np.min(vf.v_bar1(cf, xs, Z) - vf.v_bar0(cf, xs, Z)) >= -1e-9
    assert np.min(vf.v_star(cf, xs, Z) - vf.v_bar0(cf, xs, Z)) >= -1e-9


def test_construction_checks():
    sol = solve_riccati(scalar_spec())
    with pytest.raises(InvalidArgumentError):
        vf.ClosedFormValue(scalar_spec(2.6), sol)
    bad = type(sol)(P=sol.P * 1.1, S=sol.S, T=sol.T, K=sol.K, gamma=sol.gamma,
                    iterations=0, residual=0.0)
    with pytest.raises(NumericalError):
        vf.ClosedFormValue(scalar_spec(), bad)


def test_shape_errors(ex1):
    with pytest.raises(InvalidArgumentError):
        vf.v_star(ex1, [1.0, 2.0], np.zeros((2, 2)))
    with pytest.raises(InvalidArgumentError):
        vf.extract_Y(np.zeros((3, 3)), 2.0)


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-5, 5), z12=st.floats(-5, 5), d=st.floats(0, 5))
def test_v_star_bounds(ex1, x, z12, d):
    # the sign-known branch never exceeds the uninformed value |x|^2_T - gamma^2 diag
    Z = Zs(abs(z12) + d, z12, abs(z12) + d)
    v = vf.v_star(ex1, [x], Z)
    upper = ex1.sol.T[0, 0] * x * x - ex1.gamma2 * 2 * (abs(z12) + d) + ex1.gamma2**2 * z12 * z12 / max(
        (ex1.sol.T[0, 0] - ex1.sol.P[0, 0]) * x * x, 1e-300)
    assert v >= vf.v_bar0(ex1, [x], Z) - 1e-9
    assert v <= upper + 1e-9 * max(1.0, abs(upper))
