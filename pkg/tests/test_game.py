import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minimax_adaptive import game
from minimax_adaptive import value as vf
from minimax_adaptive.errors import (DivergenceError, InfeasibleAdversaryError,
                                     InvalidArgumentError)
from minimax_adaptive.riccati import GameSpec


def info_with_evidence(e):
    Z = np.array([[0.0, e], [e, 0.0]])
    return game.InfoState(Z=Z, evidence=Z[:1, 1:].copy(), t=1)


def test_update_info_examples():
    info = game.update_info(game.InfoState.empty(1), [1.0], [0.0], [1.0], [[1.0]])
    assert np.array_equal(info.Z, [[1.0, -1.0], [-1.0, 1.0]])
    assert info.evidence[0, 0] == -1.0 and info.t == 1
    same = game.update_info(info, [0.0], [0.0], [0.0], [[1.0]])
    assert np.array_equal(same.Z, info.Z)
    twice = game.update_info(info, [1.0], [0.0], [1.0], [[1.0]])
    assert np.array_equal(twice.Z, 2 * info.Z)
    assert np.linalg.matrix_rank(twice.Z) == 1
    with pytest.raises(InvalidArgumentError):
        game.update_info(info, [1.0, 2.0], [0.0], [1.0], [[1.0]])


def test_controller_examples(ex1):
    spec, sol = ex1.spec, ex1.sol
    assert game.controller_u([1.0], game.InfoState.empty(1), spec, sol)[0] == 0.0
    assert game.controller_u([1.0], info_with_evidence(-1.0), spec, sol)[0] == pytest.approx(-0.6985, abs=1e-4)
    # sat(0.3935) * 0.69847 = 0.27484; 0.2745 is the product of the rounded factors
    assert game.controller_u([1.0], info_with_evidence(0.1), spec, sol)[0] == pytest.approx(0.2745, abs=1e-3)
    assert game.controller_u([0.0], info_with_evidence(5.0), spec, sol)[0] == 0.0


def test_worst_case_v(ex1):
    spec, sol = ex1.spec, ex1.sol
    assert game.worst_case_v([0.0], [0.0], 1, spec, sol)[0] == 0.0
    assert game.worst_case_v([1.0], [0.0], 1, spec, sol)[0] == pytest.approx(1.3639, abs=1e-4)
    big = GameSpec(1, 1, 1, 1, 1e8)
    assert game.worst_case_v([1.0], [0.5], -1, big, sol)[0] == pytest.approx(-0.5, abs=1e-9)
    bad = dataclasses.replace(sol, P=np.array([[10.0]]))
    with pytest.raises(InfeasibleAdversaryError):
        game.worst_case_v([1.0], [0.0], 1, spec, bad)


def test_simulation_plus_sign(ex1):
    traj = game.simulate(ex1.spec, ex1.sol, [1.0], 1, horizon=20)
    xs = [x[0] for x in traj.states]
    assert traj.inputs[0][0] == 0.0 and xs[1] == 1.0
    assert traj.inputs[1][0] == pytest.approx(-0.6985, abs=1e-4)
    assert xs[2] == pytest.approx(0.3015, abs=1e-4)
    assert all(b < a for a, b in zip(xs[1:], xs[2:]))


def test_simulation_minus_sign(ex1):
    traj = game.simulate(ex1.spec, ex1.sol, [1.0], -1, horizon=10)
    assert traj.states[1][0] == -1.0
    info = game.update_info(game.InfoState.empty(1), traj.states[0], traj.inputs[0],
                            traj.states[1], ex1.spec.B)
    assert info.evidence[0, 0] == 1.0
    assert game.saturation_argument(traj.states[1], info, ex1.spec, ex1.sol) == pytest.approx(3.934, abs=1e-3)
    # u_1 = +K x_1 is the H-infinity law for i = -1
    assert traj.inputs[1][0] == pytest.approx(ex1.sol.K[0, 0] * traj.states[1][0])


def test_zero_initial_state(ex1):
    adv = game.AdversaryPolicy(kind="zero")
    traj = game.simulate(ex1.spec, ex1.sol, [0.0], 1, adv, horizon=15)
    assert all(np.all(x == 0) for x in traj.states)
    assert all(p == 0 for p in traj.running_payoff)


def _replay_inputs(spec, sol, traj):
    info = game.InfoState.empty(spec.n)
    out = []
    for t, u in enumerate(traj.inputs):
        out.append(game.controller_u(traj.states[t], info, spec, sol))
        info = game.update_info(info, traj.states[t], u, traj.states[t + 1], spec.B)
    return out, info


@pytest.mark.parametrize("kind", ["random_bounded", "worst_case", "constant"])
@pytest.mark.parametrize("sign", [1, -1])
def test_trajectory_invariants(ex1, kind, sign):
    adv = game.AdversaryPolicy(kind=kind, bound=2.0, seed=7, constant=(0.3,), sign=-sign)
    traj = game.simulate(ex1.spec, ex1.sol, [0.8], sign, adv, horizon=30)
    assert len(traj.states) == traj.horizon + 1
    assert traj.reconstruction_residual(ex1.spec) <= 1e-12
    assert np.allclose(game.recompute_evidence(traj, ex1.spec.B), traj.info.evidence, atol=1e-10)
    Z = traj.info.Z
    assert np.min(np.linalg.eigvalsh(Z)) >= -1e-9 * max(1.0, np.max(np.abs(Z)))
    replayed, info = _replay_inputs(ex1.spec, ex1.sol, traj)
    assert np.allclose(np.ravel(replayed), np.ravel(traj.inputs), atol=1e-12)
    assert np.allclose(info.Z, Z, atol=1e-10)


def test_controller_matches_lemma(ex1):
    adv = game.AdversaryPolicy(kind="random_bounded", bound=1.0, seed=3)
    traj = game.simulate(ex1.spec, ex1.sol, [1.2], 1, adv, horizon=25)
    info = game.InfoState.empty(1)
    for t, u in enumerate(traj.inputs):
        x = traj.states[t]
        Y = vf.extract_Y(info.Z, ex1.spec.gamma)
        lm = vf.lemma_aa_minimax(ex1, x, Y)
        assert game.controller_u(x, info, ex1.spec, ex1.sol) == pytest.approx(lm.u_hat, abs=1e-12)
        info = game.update_info(info, x, u, traj.states[t + 1], ex1.spec.B)


@pytest.mark.parametrize("sign", [1, -1])
def test_dissipation(ex1, sign):
    traj = game.simulate(ex1.spec, ex1.sol, [1.0], sign, horizon=50)
    d = game.dissipation_check(traj, ex1)
    assert d.ok and max(traj.running_payoff) <= 3.3165
    wc = game.simulate(ex1.spec, ex1.sol, [1.0], sign,
                       game.AdversaryPolicy(kind="worst_case"), horizon=50)
    assert game.dissipation_check(wc, ex1).ok


def test_worst_case_matched_is_tight(ex1):
    wc = game.simulate(ex1.spec, ex1.sol, [1.0], 1, game.AdversaryPolicy(kind="worst_case"), horizon=50)
    d = game.dissipation_check(wc, ex1)
    # matched worst case drives the payoff right up to the bound
    assert -1e-3 <= d.worst_slack <= 1e-6


def test_csv_round_trip(ex1, tmp_path):
    adv = game.AdversaryPolicy(kind="random_bounded", bound=2.0, seed=11)
    traj = game.simulate(ex1.spec, ex1.sol, [1.5], -1, adv, horizon=40)
    path = tmp_path / "t.csv"
    game.write_trajectory_csv(traj, path)
    back = game.read_trajectory_csv(path, sign=-1)
    assert np.array_equal(np.array(back.states), np.array(traj.states))
    assert np.array_equal(np.array(back.inputs), np.array(traj.inputs))
    assert back.running_payoff == traj.running_payoff
    assert back.reconstruction_residual(ex1.spec) <= 1e-12
    assert np.allclose(game.recompute_evidence(back, ex1.spec.B), traj.info.evidence, atol=1e-12)
    text = path.read_bytes()
    assert b"\r" not in text and text.startswith(b"t,x0,u0,w0,payoff_prefix\n")


def test_seeded_determinism(ex1, tmp_path):
    adv = game.AdversaryPolicy(kind="random_bounded", bound=2.0, seed=99)
    for name in ("a.csv", "b.csv"):
        game.write_trajectory_csv(game.simulate(ex1.spec, ex1.sol, [1.0], 1, adv, 30), tmp_path / name)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_divergence_and_validation(ex1):
    adv = game.AdversaryPolicy(kind="constant", constant=(1e10,))
    with pytest.raises(DivergenceError):
        game.simulate(ex1.spec, ex1.sol, [1.0], 1, adv)
    with pytest.raises(InvalidArgumentError):
        game.AdversaryPolicy(kind="sneaky")
    with pytest.raises(InvalidArgumentError):
        game.simulate(ex1.spec, ex1.sol, [1.0], 0)
    with pytest.raises(InvalidArgumentError):
        game.simulate(ex1.spec, ex1.sol, [1.0], 1, horizon=0)


@settings(max_examples=50, deadline=None)
@given(x0=st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3), sign=st.sampled_from([1, -1]))
def test_sign_learning(ex1, x0, sign):
    traj = game.simulate(ex1.spec, ex1.sol, [x0], sign, horizon=12)
    K = ex1.sol.K[0, 0]
    info = game.InfoState.empty(1)
    for t, u in enumerate(traj.inputs):
        x = traj.states[t]
        if t >= 1 and abs(x[0]) > 1e-150:
            arg = game.saturation_argument(x, info, ex1.spec, ex1.sol)
            assert sign * arg <= -1.0
            assert u[0] == pytest.approx(-sign * K * x[0], rel=1e-12, abs=1e-300)
        info = game.update_info(info, x, u, traj.states[t + 1], ex1.spec.B)
