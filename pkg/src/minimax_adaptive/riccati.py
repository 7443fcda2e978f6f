"""Minimax Riccati synthesis and feasibility certification.

The recursion solved here is the game Riccati equation

    |x|^2_P = min_u max_v { |x|^2_Q + |u|^2_R - gamma^2 |Ax + Bu - v|^2 + |v|^2_P }

which, after eliminating ``v``, becomes a standard Riccati step in the
auxiliary matrix ``S = (I - gamma^-2 P)^-1 P``.  Feasibility of the full
adaptive game is graded at three levels (see :func:`classify`).
"""

import dataclasses
import logging
import math
from typing import Optional

import numpy as np

from . import linalg as la
from .errors import (AmbiguousBracketError, DegenerateProblemError, InvalidArgumentError,
                     NonConvergenceError, NumericalError, RiccatiInfeasibleError,
                     SingularMatrixError)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
# iterates above this magnitude are treated as divergent
_DIVERGENCE_LIMIT = 1e12

VERDICT_INFEASIBLE = "infeasible"
VERDICT_UNDETERMINED = "undetermined"
VERDICT_CERTIFIED = "certified"


@dataclasses.dataclass(frozen=True)
class GameSpec:
    """Problem data ``(A, B, Q, R, gamma)`` of the zero-sum game."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    gamma: float

    def __post_init__(self):
        A = la.as_matrix(self.A, "A")
        B = la.as_matrix(self.B, "B")
        Q = la.as_symmetric(self.Q, "Q")
        R = la.as_symmetric(self.R, "R")
        n = A.shape[0]
        if A.shape != (n, n):
            raise InvalidArgumentError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise InvalidArgumentError(f"B must have {n} rows, got {B.shape}")
        if Q.shape != (n, n):
            raise InvalidArgumentError(f"Q must be {n}x{n}, got {Q.shape}")
        if R.shape != (B.shape[1], B.shape[1]):
            raise InvalidArgumentError(f"R must be {B.shape[1]}x{B.shape[1]}, got {R.shape}")
        for name, M in (("Q", Q), ("R", R)):
            if la.psd_margin(M) <= la.default_psd_tol(M):
                raise InvalidArgumentError(f"{name} must be positive definite")
        gamma = float(self.gamma)
        if not (math.isfinite(gamma) and gamma > 0):
            raise InvalidArgumentError(f"gamma must be positive and finite, got {self.gamma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    def with_gamma(self, gamma):
        return dataclasses.replace(self, gamma=gamma)

    def to_dict(self):
        return {"A": self.A.tolist(), "B": self.B.tolist(), "Q": self.Q.tolist(),
                "R": self.R.tolist(), "gamma": self.gamma}


@dataclasses.dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    S: np.ndarray
    T: np.ndarray
    K: np.ndarray
    gamma: float
    iterations: int
    residual: float
    # max relative disagreement between T - P, K^T B^T S A and K^T (R + B^T S B) K
    identity_gap: float = 0.0

    def to_dict(self):
        return {"P": self.P.tolist(), "S": self.S.tolist(), "T": self.T.tolist(),
                "K": self.K.tolist(), "gamma": self.gamma, "iterations": self.iterations,
                "residual": self.residual, "identity_gap": self.identity_gap}


@dataclasses.dataclass(frozen=True)
class ConditionII:
    feasible: bool
    margin_plus: float
    margin_minus: float
    tol: float


@dataclasses.dataclass(frozen=True)
class LowerBound:
    necessary_ok: bool
    margin: float
    p_margin: float
    tol: float


@dataclasses.dataclass(frozen=True)
class Feasibility:
    """Three-level verdict plus everything computed on the way."""

    verdict: str
    reason: str
    solution: Optional[RiccatiSolution] = None
    lower_bound: Optional[LowerBound] = None
    condition_ii: Optional[ConditionII] = None


def s_matrix(P, gamma):
    """``S = (I - gamma^-2 P)^-1 P``, well defined at ``P = 0``."""
    n = P.shape[0]
    S = np.linalg.solve(np.eye(n) - P / gamma**2, P)
    return 0.5 * (S + S.T)


def gain_K(spec, S):
    """``K = (R + B^T S B)^-1 B^T S A``."""
    S = np.asarray(S, dtype=float)
    if S.shape != (spec.n, spec.n):
        raise InvalidArgumentError(f"S must be {spec.n}x{spec.n}, got {S.shape}")
    RS = la.as_symmetric(spec.R + spec.B.T @ S @ spec.B)
    # raises SingularMatrixError when R + B^T S B is numerically singular
    la.sym_inverse(RS)
    return np.linalg.solve(RS, spec.B.T @ S @ spec.A)


def riccati_step(spec, P):
    """One step of the game Riccati recursion; returns ``(P_next, S, K)``."""
    A, B = spec.A, spec.B
    S = s_matrix(P, spec.gamma)
    K = gain_K(spec, S)
    P_next = spec.Q + A.T @ S @ A - A.T @ S @ B @ K
    return 0.5 * (P_next + P_next.T), S, K


def _check_admissible(P, gamma, k):
    n = P.shape[0]
    margin = la.psd_margin(gamma**2 * np.eye(n) - P)
    if margin <= 0.0:
        raise RiccatiInfeasibleError(
            f"Riccati iterate {k} violates P < gamma^2 I "
            f"(min eigenvalue of gamma^2 I - P is {margin:.6g}); gamma too small",
            iterate=P.copy(), iteration=k, constraint="P < gamma^2 I")


def riccati_iterates(spec, count):
    """The first ``count`` iterates ``P_0 = 0, P_1, ...`` of the recursion."""
    P = np.zeros((spec.n, spec.n))
    out = [P]
    for k in range(count - 1):
        _check_admissible(P, spec.gamma, k)
        P, _, _ = riccati_step(spec, P)
        out.append(P)
    return out


def solve_riccati(spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Iterate the game Riccati recursion from ``P_0 = 0`` to its fixed point.

    Convergence is declared once the max-abs change between iterates drops
    below ``tol`` (relative to ``max(1, max|P|)``).

    Raises
    ------
    RiccatiInfeasibleError
        An iterate left ``P < gamma^2 I`` or the recursion blew up.
    NonConvergenceError
        ``max_iter`` steps were taken without meeting ``tol``.
    """
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    gamma = spec.gamma
    P = np.zeros((spec.n, spec.n))
    residual = math.inf
    for k in range(1, max_iter + 1):
        _check_admissible(P, gamma, k - 1)
        P_next, _, _ = riccati_step(spec, P)
        scale = max(1.0, float(np.max(np.abs(P_next))))
        if not np.all(np.isfinite(P_next)) or scale > _DIVERGENCE_LIMIT:
            raise RiccatiInfeasibleError(
                f"Riccati recursion diverged at iteration {k}",
                iterate=P.copy(), iteration=k, constraint="bounded iterates")
        residual = float(np.max(np.abs(P_next - P)))
        P = P_next
        if residual < tol * scale:
            break
    else:
        raise NonConvergenceError(
            f"Riccati recursion did not converge in {max_iter} iterations "
            f"(last residual {residual:.3e})", residual=residual, iterations=max_iter)

    _check_admissible(P, gamma, k)
    if la.psd_margin(P) <= 0.0:
        raise RiccatiInfeasibleError("Riccati fixed point is not positive definite",
                                     iterate=P.copy(), iteration=k, constraint="P > 0")
    P = la.as_symmetric(P)
    S = la.as_symmetric(s_matrix(P, gamma))
    K = gain_K(spec, S)
    T = la.as_symmetric(spec.Q + spec.A.T @ S @ spec.A)
    gap = _identity_gap(spec, P, S, T, K)
    if gap > max(1e-8, 100 * tol):
        raise NumericalError(f"T - P identity check failed (relative gap {gap:.3e})")
    K.flags.writeable = False
    return RiccatiSolution(P=P, S=S, T=T, K=K, gamma=gamma, iterations=k,
                           residual=residual, identity_gap=gap)


def _identity_gap(spec, P, S, T, K):
    TP = T - P
    via_K = K.T @ spec.B.T @ S @ spec.A
    via_R = K.T @ (spec.R + spec.B.T @ S @ spec.B) @ K
    scale = max(1.0, float(np.max(np.abs(TP))))
    return float(max(np.max(np.abs(TP - via_K)), np.max(np.abs(TP - via_R)))) / scale


def _require_invertible(M, message, exc=InvalidArgumentError):
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= la.SINGULAR_RTOL * max(s[0], 1e-300):
        raise exc(message)


def condition_ii_matrices(spec, sol):
    """The ``+`` and ``-`` difference matrices whose PSD-ness certifies the explicit law.

    ``(g^2 I - P)(T - P)^-1(g^2 I - P) - (I +/- B K A^-1)(g^2 I - P)(I +/- B K A^-1)^T``
    """
    n = spec.n
    _require_invertible(spec.A, "condition (ii) requires invertible A")
    TP = sol.T - sol.P
    try:
        TP_inv = la.sym_inverse(TP)
    except SingularMatrixError as exc:
        raise DegenerateProblemError(f"T - P is singular: {exc}") from exc
    W = spec.gamma**2 * np.eye(n) - sol.P
    lhs = W @ TP_inv @ W
    BKAinv = spec.B @ sol.K @ np.linalg.inv(spec.A)
    out = []
    for sign in (1.0, -1.0):
        E = np.eye(n) + sign * BKAinv
        D = lhs - E @ W @ E.T
        out.append(0.5 * (D + D.T))
    return out[0], out[1]


def check_condition_ii(spec, sol, tol=None):
    plus, minus = condition_ii_matrices(spec, sol)
    if tol is None:
        tol = max(la.default_psd_tol(plus), la.default_psd_tol(minus))
    mp, mm = la.psd_margin(plus), la.psd_margin(minus)
    return ConditionII(feasible=bool(mp >= -tol and mm >= -tol),
                       margin_plus=mp, margin_minus=mm, tol=tol)


def check_lower_bound(spec, sol, tol=None):
    """Necessary condition for a finite game value: ``0 < P < g^2 I`` and ``T <= g^2 I``."""
    n = spec.n
    G = spec.gamma**2 * np.eye(n)
    D = G - sol.T
    if tol is None:
        tol = la.default_psd_tol(D)
    margin = la.psd_margin(D)
    p_margin = min(la.psd_margin(sol.P), la.psd_margin(G - sol.P))
    ok = margin >= -tol and p_margin > 0.0
    return LowerBound(necessary_ok=bool(ok), margin=margin, p_margin=p_margin, tol=tol)


def classify(spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Grade the game as infeasible, undetermined or certified.

    * infeasible: the Riccati equation has no admissible solution or the
      necessary bound ``T <= gamma^2 I`` fails;
    * certified: condition (ii) holds, so the explicit saturated law is optimal;
    * undetermined: everything in between.
    """
    try:
        sol = solve_riccati(spec, tol=tol, max_iter=max_iter)
    except (RiccatiInfeasibleError, NonConvergenceError) as exc:
        return Feasibility(VERDICT_INFEASIBLE, f"Riccati equation not solvable: {exc}")
    lb = check_lower_bound(spec, sol)
    if not lb.necessary_ok:
        return Feasibility(VERDICT_INFEASIBLE, "necessary condition T <= gamma^2 I fails",
                           solution=sol, lower_bound=lb)
    try:
        c2 = check_condition_ii(spec, sol)
    except (InvalidArgumentError, DegenerateProblemError) as exc:
        return Feasibility(VERDICT_UNDETERMINED, f"condition (ii) not applicable: {exc}",
                           solution=sol, lower_bound=lb)
    if c2.feasible:
        return Feasibility(VERDICT_CERTIFIED, "condition (ii) holds",
                           solution=sol, lower_bound=lb, condition_ii=c2)
    return Feasibility(VERDICT_UNDETERMINED,
                       "Riccati solvable and lower bound met, but condition (ii) fails",
                       solution=sol, lower_bound=lb, condition_ii=c2)


CRITERIA = ("condition_ii", "lower_bound")


def criterion_holds(spec, criterion, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    if criterion not in CRITERIA:
        raise InvalidArgumentError(f"unknown criterion {criterion!r}; expected one of {CRITERIA}")
    try:
        sol = solve_riccati(spec, tol=tol, max_iter=max_iter)
    except (RiccatiInfeasibleError, NonConvergenceError):
        return False
    if criterion == "lower_bound":
        return check_lower_bound(spec, sol).necessary_ok
    return check_condition_ii(spec, sol).feasible


def gamma_search(A, B, Q, R, criterion, bracket=(1.0, 100.0), tol=1e-6,
                 riccati_tol=DEFAULT_TOL, samples=16):
    """Smallest ``gamma`` in ``bracket`` at which ``criterion`` holds, by bisection.

    Feasibility is assumed monotone in gamma.  That assumption is checked on
    ``samples`` evenly spaced points first; a second switch raises
    :class:`AmbiguousBracketError`.
    """
    lo, hi = (float(b) for b in bracket)
    if not (0 < lo < hi and math.isfinite(hi)):
        raise InvalidArgumentError(f"invalid bracket {bracket}")
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    base = GameSpec(A, B, Q, R, hi)

    def holds(g):
        return criterion_holds(base.with_gamma(g), criterion, tol=riccati_tol)

    grid = np.linspace(lo, hi, samples)
    flags = [holds(g) for g in grid]
    if flags[0]:
        raise InvalidArgumentError(f"criterion {criterion} already holds at gamma_lo={lo}")
    if not flags[-1]:
        raise InvalidArgumentError(f"criterion {criterion} fails at gamma_hi={hi}")
    first = flags.index(True)
    if not all(flags[first:]):
        raise AmbiguousBracketError(
            f"feasibility of {criterion} is not monotone on {bracket}: "
            + "".join("1" if f else "0" for f in flags))
    lo, hi = grid[first - 1], grid[first]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    log.debug("gamma_search(%s) -> [%r, %r]", criterion, lo, hi)
    return float(hi)
