"""Closed-form value functions of the adaptive game.

Every evaluator accepts either a single state (``x`` of shape ``(n,)``,
``Z`` of shape ``(2n, 2n)``) and returns a float, or a batch (``x`` of shape
``(N, n)``, ``Z`` of shape ``(N, 2n, 2n)``) and returns an ``(N,)`` array.
The batched form is what the brute-force Bellman search uses.
"""

import dataclasses

import numpy as np

from . import linalg as la
from .errors import InvalidArgumentError, NumericalError
from .riccati import GameSpec, RiccatiSolution, riccati_step, solve_riccati


@dataclasses.dataclass(frozen=True)
class ClosedFormValue:
    """A game together with its Riccati solution.

    The solution is re-checked on construction: one more Riccati step from
    ``sol.P`` must not move it.
    """

    spec: GameSpec
    sol: RiccatiSolution

    def __post_init__(self):
        if self.sol.gamma != self.spec.gamma:
            raise InvalidArgumentError(
                f"solution was computed for gamma={self.sol.gamma}, spec has {self.spec.gamma}")
        P_next, _, _ = riccati_step(self.spec, np.asarray(self.sol.P))
        scale = max(1.0, float(np.max(np.abs(self.sol.P))))
        drift = float(np.max(np.abs(P_next - self.sol.P)))
        if drift > 1e-8 * scale:
            raise NumericalError(f"P is not a Riccati fixed point (one-step drift {drift:.3e})")

    @classmethod
    def from_spec(cls, spec, **solver_kw):
        return cls(spec, solve_riccati(spec, **solver_kw))

    @property
    def n(self):
        return self.spec.n

    @property
    def gamma2(self):
        return self.spec.gamma ** 2


def _prepare(cf, x, Z):
    n = cf.n
    x = np.asarray(x, dtype=float)
    Z = np.asarray(Z, dtype=float)
    single = x.ndim <= 1
    x = x.reshape(-1, n) if single else x
    if single:
        Z = Z.reshape(1, *Z.shape)
    if x.shape[-1] != n or Z.shape[1:] != (2 * n, 2 * n) or Z.shape[0] != x.shape[0]:
        raise InvalidArgumentError(
            f"expected x of length {n} and Z of shape {(2 * n, 2 * n)}; "
            f"got {x.shape} and {Z.shape}")
    return x, Z, single


def _out(values, single):
    return float(values[0]) if single else values


def _quad(x, M):
    return np.einsum("ni,ij,nj->n", x, M, x)


def extract_Y(Z, gamma):
    """``gamma^2`` times the upper-right ``n x n`` block of ``Z``."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1] or Z.shape[0] % 2:
        raise InvalidArgumentError(f"Z must be 2n x 2n, got {Z.shape}")
    n = Z.shape[0] // 2
    return gamma**2 * Z[:n, n:]


def sign_stack(A, i):
    """``[I  iA]^T``: the 2n x n matrix whose Z-weighted norm is the residual energy under sign i."""
    n = A.shape[0]
    return np.vstack([np.eye(n), i * A.T])


def sign_penalty(cf, Z, i):
    """``||[I iA]^T||^2_Z`` for a batch of ``Z`` (shape ``(N, 2n, 2n)``)."""
    G = sign_stack(cf.spec.A, i)
    return np.einsum("ai,nab,bi->n", G, Z, G)


def diag_penalty(cf, Z):
    """``||diag{I, A}^T||^2_Z = tr Z_vv + tr(A Z_xx A^T)``."""
    n, A = cf.n, cf.spec.A
    return (np.einsum("nii->n", Z[:, :n, :n])
            + np.einsum("ij,njk,ik->n", A, Z[:, n:, n:], A))


def sign_evidence(cf, Z):
    """``<A, Y>`` with ``Y`` extracted from ``Z``."""
    n = cf.n
    return cf.gamma2 * np.einsum("ij,nij->n", cf.spec.A, Z[:, :n, n:])


def v_bar0(cf, x, Z):
    """``|x|^2_P - gamma^2 min_i ||[I iA]^T||^2_Z``."""
    x, Z, single = _prepare(cf, x, Z)
    pen = np.minimum(sign_penalty(cf, Z, 1.0), sign_penalty(cf, Z, -1.0))
    return _out(_quad(x, cf.sol.P) - cf.gamma2 * pen, single)


def v_star(cf, x, Z):
    """Closed-form limit of value iteration, valid when condition (ii) holds.

    Takes the "sign known" branch whenever ``|<A,Y>| >= |x|^2_{T-P}``,
    equality and ``x = 0`` included.
    """
    x, Z, single = _prepare(cf, x, Z)
    sol = cf.sol
    ay = sign_evidence(cf, Z)
    xtp = _quad(x, sol.T - sol.P)
    known = np.abs(ay) >= xtp
    pen = np.minimum(sign_penalty(cf, Z, 1.0), sign_penalty(cf, Z, -1.0))
    first = _quad(x, sol.P) - cf.gamma2 * pen
    safe = np.where(known, 1.0, xtp)
    second = _quad(x, sol.T) - cf.gamma2 * diag_penalty(cf, Z) + np.where(known, 0.0, ay**2 / safe)
    return _out(np.where(known, first, second), single)


def _lemma_batch(xp, xt, xtp, ay):
    """Saturated minimax over (u, i) in terms of the scalar ingredients.

    Returns ``(value, theta_hat)``.  ``0/0`` is read as ``0``.
    """
    known = np.abs(ay) >= xtp
    both_zero = (ay == 0.0) & (xtp <= 0.0)
    safe = np.where(known, 1.0, xtp)
    theta = np.where(known, -np.sign(ay), -ay / safe)
    theta = np.where(both_zero, 0.0, theta)
    value = np.where(known, xp + 2.0 * np.abs(ay), xt + np.where(known, 0.0, ay**2 / safe))
    return value, theta


@dataclasses.dataclass(frozen=True)
class LemmaMinimax:
    value: float
    theta_hat: float
    u_hat: np.ndarray


def lemma_aa_minimax(cf, x, Y):
    """``min_u max_{i=+-1} {|x|^2_Q + |u|^2_R + |iAx+Bu|^2_S - 2<iA, Y>}`` in closed form.

    The maximising relaxed sign is ``theta_hat = -sat(<A,Y> / |x|^2_{T-P})``
    and the unique minimiser is ``u_hat = -theta_hat K x``.
    """
    n = cf.n
    x = la.as_vector(x)
    Y = np.asarray(Y, dtype=float).reshape(n, n) if np.ndim(Y) < 2 else np.asarray(Y, float)
    if x.size != n or Y.shape != (n, n):
        raise InvalidArgumentError(f"expected x of length {n} and Y of shape {(n, n)}")
    sol = cf.sol
    ay = np.array([la.trace_inner(cf.spec.A, Y)])
    xb = x.reshape(1, n)
    value, theta = _lemma_batch(_quad(xb, sol.P), _quad(xb, sol.T),
                                _quad(xb, sol.T - sol.P), ay)
    theta = float(theta[0])
    return LemmaMinimax(value=float(value[0]), theta_hat=theta, u_hat=-theta * (sol.K @ x))


def v_bar1(cf, x, Z):
    """``max_{|theta|<=1} {|x|^2_T - theta^2 |x|^2_{T-P} - 2 theta <A,Y> - gamma^2 ||diag{I,A}^T||^2_Z}``."""
    x, Z, single = _prepare(cf, x, Z)
    sol = cf.sol
    value, _ = _lemma_batch(_quad(x, sol.P), _quad(x, sol.T), _quad(x, sol.T - sol.P),
                            sign_evidence(cf, Z))
    return _out(value - cf.gamma2 * diag_penalty(cf, Z), single)


def optimal_theta(cf, x, Z):
    """Maximising ``theta`` in :func:`v_bar1` (batched)."""
    x, Z, single = _prepare(cf, x, Z)
    sol = cf.sol
    _, theta = _lemma_batch(_quad(x, sol.P), _quad(x, sol.T), _quad(x, sol.T - sol.P),
                            sign_evidence(cf, Z))
    return _out(theta, single)


def figure_z(z):
    """``[[|z|, z], [z, |z|]]``: the PSD information matrix used for the value-function curve."""
    a = abs(float(z))
    return np.array([[a, z], [z, a]], dtype=float)


def branch_threshold(cf):
    """Scalar case: ``|z12| / x^2`` at which the sign becomes known, ``(T - P) / gamma^2``."""
    if cf.n != 1:
        raise InvalidArgumentError("branch_threshold is defined for scalar systems")
    a = float(cf.spec.A[0, 0])
    return float((cf.sol.T - cf.sol.P)[0, 0]) / (cf.gamma2 * abs(a))
