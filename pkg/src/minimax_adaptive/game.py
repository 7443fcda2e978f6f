"""Closed-loop simulation of the adaptive game.

The plant is ``x+ = iAx + Bu + w`` with an unknown constant sign ``i``.  The
controller only sees past data, summarised in the information matrix

    Z_t = sum_tau [Bu_tau - x_{tau+1}; x_tau] [Bu_tau - x_{tau+1}; x_tau]^T

whose upper-right block carries the evidence about ``i``.
"""

import csv
import dataclasses
import math
from typing import Optional

import numpy as np

from . import linalg as la
from . import value as vf
from .errors import DivergenceError, InfeasibleAdversaryError, InvalidArgumentError

DIVERGENCE_LIMIT = 1e9
ADVERSARY_KINDS = ("zero", "constant", "random_bounded", "worst_case")


@dataclasses.dataclass(frozen=True)
class InfoState:
    Z: np.ndarray
    evidence: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, n):
        Z = np.zeros((2 * n, 2 * n))
        return cls(Z=Z, evidence=Z[:n, n:].copy(), t=0)

    @property
    def n(self):
        return self.Z.shape[0] // 2


def update_info(info, x, u, x_next, B):
    """Add the outer product of ``[Bu - x_next; x]`` to ``Z``."""
    n = info.n
    B = la.as_matrix(B, "B")
    x, u, x_next = la.as_vector(x), la.as_vector(u, "u"), la.as_vector(x_next, "x_next")
    if x.size != n or x_next.size != n or B.shape != (n, u.size):
        raise InvalidArgumentError(
            f"update_info: n={n} but got x {x.shape}, u {u.shape}, x_next {x_next.shape}, B {B.shape}")
    zeta = np.concatenate([B @ u - x_next, x])
    Z = info.Z + np.outer(zeta, zeta)
    return InfoState(Z=Z, evidence=Z[:n, n:].copy(), t=info.t + 1)


def saturation_argument(x, info, spec, sol):
    """``gamma^2 <A, evidence> / |x|^2_{T-P}``, or ``None`` when ``|x|^2_{T-P} = 0``."""
    x = la.as_vector(x)
    xtp = float(x @ (sol.T - sol.P) @ x)
    if xtp <= 0.0:
        return None
    return spec.gamma**2 * la.trace_inner(spec.A, info.evidence) / xtp


def controller_u(x, info, spec, sol):
    """The explicit adaptive law ``u = sat(gamma^2 <A, evidence> / |x|^2_{T-P}) K x``.

    At ``x = 0`` (more generally ``|x|^2_{T-P} = 0``, which forces ``Kx = 0``)
    the input is zero.
    """
    x = la.as_vector(x)
    arg = saturation_argument(x, info, spec, sol)
    if arg is None:
        return np.zeros(spec.m)
    return la.sat(arg) * (sol.K @ x)


def worst_case_v(x, u, sign_guess, spec, sol):
    """Maximiser ``(I - gamma^-2 P)^-1 (iAx + Bu)`` of ``|v|^2_P - gamma^2 |iAx + Bu - v|^2``."""
    n = spec.n
    G = np.eye(n) - sol.P / spec.gamma**2
    if la.psd_margin(G) <= 0.0:
        raise InfeasibleAdversaryError("P is not below gamma^2 I; the maximisation over v is unbounded")
    a = sign_guess * (spec.A @ la.as_vector(x)) + spec.B @ la.as_vector(u, "u")
    return np.linalg.solve(G, a)


@dataclasses.dataclass(frozen=True)
class AdversaryPolicy:
    """How the disturbance is chosen.

    ``worst_case`` steers the state to ``worst_case_v`` computed with its own
    ``sign`` (defaults to the plant's), so mismatched play can be simulated.
    """

    kind: str = "zero"
    bound: float = 1.0
    seed: int = 0
    constant: Optional[tuple] = None
    sign: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise InvalidArgumentError(f"unknown adversary kind {self.kind!r}")
        if self.sign not in (None, 1, -1):
            raise InvalidArgumentError("adversary sign must be +1 or -1")
        if not (self.bound >= 0 and math.isfinite(self.bound)):
            raise InvalidArgumentError("adversary bound must be finite and non-negative")


@dataclasses.dataclass(frozen=True)
class Trajectory:
    states: list
    inputs: list
    disturbances: list
    sign: int
    running_payoff: list
    info: InfoState

    @property
    def horizon(self):
        return len(self.inputs)

    def reconstruction_residual(self, spec):
        worst = 0.0
        for t, (u, w) in enumerate(zip(self.inputs, self.disturbances)):
            pred = self.sign * spec.A @ self.states[t] + spec.B @ u + w
            worst = max(worst, float(np.max(np.abs(pred - self.states[t + 1]))))
        return worst


def simulate(spec, sol, x0, sign, adversary=None, horizon=50):
    """Run the explicit controller against ``adversary`` on the plant with sign ``sign``."""
    if sign not in (1, -1):
        raise InvalidArgumentError("sign must be +1 or -1")
    if horizon < 1:
        raise InvalidArgumentError("horizon must be at least 1")
    adversary = adversary or AdversaryPolicy()
    n = spec.n
    x = la.as_vector(x0, "x0")
    if x.size != n:
        raise InvalidArgumentError(f"x0 must have length {n}")
    rng = np.random.default_rng(adversary.seed)
    g2 = spec.gamma**2
    A, B, Q, R, K = spec.A, spec.B, spec.Q, spec.R, sol.K
    TP = sol.T - sol.P
    if adversary.kind == "worst_case":
        G = np.eye(n) - sol.P / g2
        if la.psd_margin(G) <= 0.0:
            raise InfeasibleAdversaryError(
                "P is not below gamma^2 I; the maximisation over v is unbounded")
        G_inv = np.linalg.inv(G)
        guess = sign if adversary.sign is None else adversary.sign
    elif adversary.kind == "constant":
        w_const = la.as_vector(adversary.constant, "constant")
        if w_const.size != n:
            raise InvalidArgumentError(f"constant disturbance must have length {n}")
    Z = np.zeros((2 * n, 2 * n))
    states, inputs, dists, payoff = [x], [], [], []
    total = 0.0
    for t in range(horizon):
        # same law as controller_u, inlined for speed
        xtp = float(x @ TP @ x)
        if xtp > 0.0:
            arg = g2 * float(np.sum(A * Z[:n, n:])) / xtp
            u = min(1.0, max(-1.0, arg)) * (K @ x)
        else:
            u = np.zeros(spec.m)
        drift = sign * (A @ x) + B @ u
        if adversary.kind == "zero":
            w = np.zeros(n)
        elif adversary.kind == "constant":
            w = w_const
        elif adversary.kind == "random_bounded":
            w = rng.uniform(-adversary.bound, adversary.bound, n)
        else:
            w = G_inv @ (guess * (A @ x) + B @ u) - drift
        x_next = drift + w
        if not np.all(np.isfinite(x_next)) or np.max(np.abs(x_next)) > DIVERGENCE_LIMIT:
            raise DivergenceError(
                f"state exceeded {DIVERGENCE_LIMIT:g} at t={t + 1}; "
                f"gamma may be infeasible or the adversary misconfigured")
        total += float(x @ Q @ x + u @ R @ u - g2 * (w @ w))
        zeta = np.concatenate([B @ u - x_next, x])
        Z = Z + np.outer(zeta, zeta)
        states.append(x_next)
        inputs.append(u)
        dists.append(w)
        payoff.append(total)
        x = x_next
    info = InfoState(Z=Z, evidence=Z[:n, n:].copy(), t=horizon)
    return Trajectory(states, inputs, dists, sign, payoff, info)


@dataclasses.dataclass(frozen=True)
class Dissipation:
    ok: bool
    worst_slack: float
    bound: float


def dissipation_check(traj, cf, slack=1e-6):
    """Every prefix payoff must stay below ``v_star(x0, 0)``."""
    n = cf.n
    bound = vf.v_star(cf, traj.states[0], np.zeros((2 * n, 2 * n)))
    worst = max(traj.running_payoff) - bound
    return Dissipation(ok=bool(worst <= slack), worst_slack=float(worst), bound=float(bound))


def recompute_evidence(traj, B):
    """``sum_t (B u_t - x_{t+1}) x_t^T`` straight from the trajectory."""
    B = la.as_matrix(B, "B")
    n = traj.states[0].size
    E = np.zeros((n, n))
    for t, u in enumerate(traj.inputs):
        E += np.outer(B @ u - traj.states[t + 1], traj.states[t])
    return E


def _fmt(v):
    return repr(float(v))


def trajectory_header(n, m):
    return (["t"] + [f"x{k}" for k in range(n)] + [f"u{k}" for k in range(m)]
            + [f"w{k}" for k in range(n)] + ["payoff_prefix"])


def write_trajectory_csv(traj, path):
    """One row per time step; the final state row leaves ``u``, ``w`` and payoff empty."""
    n = traj.states[0].size
    m = traj.inputs[0].size if traj.inputs else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(n, m))
        for t, x in enumerate(traj.states):
            row = [str(t)] + [_fmt(v) for v in x]
            if t < traj.horizon:
                row += [_fmt(v) for v in traj.inputs[t]] + [_fmt(v) for v in traj.disturbances[t]]
                row.append(_fmt(traj.running_payoff[t]))
            else:
                row += [""] * (m + n + 1)
            w.writerow(row)


def read_trajectory_csv(path, sign=1):
    """Parse a CSV written by :func:`write_trajectory_csv` back into a :class:`Trajectory`.

    The information state is rebuilt from the data; ``B`` is not stored, so
    ``info`` here only carries ``t``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(1 for h in header if h.startswith("x"))
    m = sum(1 for h in header if h.startswith("u"))
    states, inputs, dists, payoff = [], [], [], []
    for row in body:
        vals = row[1:]
        states.append(np.array([float(v) for v in vals[:n]]))
        if vals[n] != "":
            inputs.append(np.array([float(v) for v in vals[n:n + m]]))
            dists.append(np.array([float(v) for v in vals[n + m:n + m + n]]))
            payoff.append(float(vals[-1]))
    info = InfoState(Z=np.zeros((2 * n, 2 * n)), evidence=np.zeros((n, n)), t=len(inputs))
    return Trajectory(states, inputs, dists, sign, payoff, info)
