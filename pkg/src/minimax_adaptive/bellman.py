"""Numerical Bellman operator and checkers for the optimality results.

The brute-force operator works on scalar systems (``n = m = 1``) by grid
search over ``u`` and ``v`` with a few rounds of local zoom around the best
candidates.  For general ``n`` the inner maximisation over ``v`` is done
analytically (:func:`inner_max_analytic`, :func:`bellman_apply_analytic`).
"""

import dataclasses
import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import linalg as la
from . import value as vf
from .errors import InvalidArgumentError, UnboundedGameError
from .riccati import solve_riccati

log = logging.getLogger(__name__)

# number of grid points evaluated per numpy call in the grid search
_CHUNK = 1 << 19


@dataclasses.dataclass(frozen=True)
class SearchGrid:
    """Grid-search settings for the scalar Bellman operator.

    ``u_range``/``v_range`` of ``None`` select state-dependent windows:
    ``u`` in ``+-(10|x||K| + 1)`` and ``v`` in ``+-(10(|x| + |u|) + 1)``.
    Each refinement round re-samples ``refine_steps`` points over two coarse
    steps around the incumbent, shrinking the step by ``(refine_steps-1)/2``.
    """

    u_range: Optional[tuple] = None
    v_range: Optional[tuple] = None
    u_steps: int = 2001
    v_steps: int = 2001
    refine_rounds: int = 3
    refine_steps: int = 41

    def __post_init__(self):
        for name in ("u_range", "v_range"):
            r = getattr(self, name)
            if r is not None:
                lo, hi = (float(b) for b in r)
                if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                    raise InvalidArgumentError(f"{name} must be a finite nonempty interval")
                object.__setattr__(self, name, (lo, hi))
        if self.u_steps < 3 or self.v_steps < 3 or self.refine_steps < 3:
            raise InvalidArgumentError("grid steps must be at least 3")
        if self.refine_rounds < 0:
            raise InvalidArgumentError("refine_rounds must be non-negative")


@dataclasses.dataclass(frozen=True)
class ValueHandle:
    """A value function ``V(x, Z)`` to feed into the Bellman operator.

    ``evaluator`` takes batched ``x`` of shape ``(N, n)`` and ``Z`` of shape
    ``(N, 2n, 2n)``.  ``scalar``, when given, is an equivalent fast path for
    ``n = 1`` taking ``(x, z11, z12, z22)`` as broadcastable arrays.
    """

    evaluator: Callable
    label: str
    scalar: Optional[Callable] = None

    def __call__(self, x, Z):
        return self.evaluator(x, Z)

    def eval_scalar(self, x, z11, z12, z22):
        if self.scalar is not None:
            return self.scalar(x, z11, z12, z22)
        x, z11, z12, z22 = np.broadcast_arrays(x, z11, z12, z22)
        shape = x.shape
        Z = np.empty((x.size, 2, 2))
        Z[:, 0, 0] = z11.ravel()
        Z[:, 0, 1] = Z[:, 1, 0] = z12.ravel()
        Z[:, 1, 1] = z22.ravel()
        return np.asarray(self.evaluator(x.reshape(-1, 1), Z)).reshape(shape)


def zero_handle():
    return ValueHandle(lambda x, Z: np.zeros(np.shape(x)[0]), "zero",
                       scalar=lambda x, z11, z12, z22: np.zeros(np.broadcast(x, z12).shape))


def _scalar_closed_forms(cf):
    sol = cf.sol
    a = float(cf.spec.A[0, 0])
    p, t = float(sol.P[0, 0]), float(sol.T[0, 0])
    g2 = cf.gamma2

    def diag(z11, z22):
        return z11 + a * a * z22

    def bar0(x, z11, z12, z22):
        pen = diag(z11, z22) - 2.0 * np.abs(a * z12)
        return p * x * x - g2 * pen

    def bar1(x, z11, z12, z22):
        xx = x * x
        value, _ = vf._lemma_batch(p * xx, t * xx, (t - p) * xx, g2 * a * z12)
        return value - g2 * diag(z11, z22)

    def star(x, z11, z12, z22):
        xx = x * x
        ay = g2 * a * z12
        xtp = (t - p) * xx
        known = np.abs(ay) >= xtp
        safe = np.where(known, 1.0, xtp)
        second = t * xx - g2 * diag(z11, z22) + np.where(known, 0.0, ay * ay / safe)
        return np.where(known, bar0(x, z11, z12, z22), second)

    return {"v_bar0": bar0, "v_bar1": bar1, "v_star": star}


def value_handle(cf, which):
    """Handle for one of the closed forms ``v_bar0``, ``v_bar1`` or ``v_star``."""
    funcs = {"v_bar0": vf.v_bar0, "v_bar1": vf.v_bar1, "v_star": vf.v_star}
    if which not in funcs:
        raise InvalidArgumentError(f"unknown value function {which!r}")
    f = funcs[which]
    scalar = _scalar_closed_forms(cf)[which] if cf.n == 1 and cf.spec.m == 1 else None
    return ValueHandle(lambda x, Z: f(cf, x, Z), which, scalar=scalar)


@dataclasses.dataclass(frozen=True)
class BellmanResult:
    value: float
    u_star: np.ndarray
    v_star: np.ndarray


def _top_two(vals):
    """Row-wise argmax and the best index at least three cells away from it."""
    rows = np.arange(vals.shape[0])
    j1 = np.argmax(vals, axis=1)
    idx = np.arange(vals.shape[1])
    masked = np.where(np.abs(idx[None, :] - j1[:, None]) <= 2, -np.inf, vals)
    j2 = np.argmax(masked, axis=1)
    j2 = np.where(np.isfinite(masked[rows, j2]), j2, j1)
    return j1, j2


def _maximize_rows(fun, lo, hi, grid_steps, grid, check_unbounded=False, scale_hint=1.0):
    """Row-wise grid maximisation of ``fun(points)`` with zoom refinement.

    ``fun`` maps an ``(R, K)`` array of points to ``(R, K)`` values.
    """
    rows = np.arange(lo.size)
    t = np.linspace(0.0, 1.0, grid_steps)
    pts = lo[:, None] + (hi - lo)[:, None] * t[None, :]
    vals = fun(pts)
    if check_unbounded:
        interior = np.max(vals[:, 1:-1], axis=1)
        edge = np.maximum(vals[:, 0], vals[:, -1])
        grow = edge - interior > 0.01 * np.maximum(scale_hint, np.abs(interior))
        if np.any(grow):
            r = int(np.argmax(grow))
            raise UnboundedGameError(
                f"inner maximisation keeps growing at the edge of the v window "
                f"[{lo[r]:.4g}, {hi[r]:.4g}] (edge {edge[r]:.6g} vs interior {interior[r]:.6g}); "
                f"the game is likely unbounded, try a larger gamma")
    h0 = (hi - lo) / (grid_steps - 1)
    s = np.linspace(-1.0, 1.0, grid.refine_steps)
    best_val = np.full(lo.size, -np.inf)
    best_pt = np.zeros(lo.size)
    for j in _top_two(vals):
        center, val, h = pts[rows, j], vals[rows, j], h0.copy()
        for _ in range(grid.refine_rounds):
            p2 = center[:, None] + h[:, None] * s[None, :]
            v2 = fun(p2)
            k = np.argmax(v2, axis=1)
            better = v2[rows, k] > val
            center = np.where(better, p2[rows, k], center)
            val = np.where(better, v2[rows, k], val)
            h = h * 2.0 / (grid.refine_steps - 1)
        take = val > best_val
        best_val = np.where(take, val, best_val)
        best_pt = np.where(take, center, best_pt)
    return best_val, best_pt


def _scalar_data(spec, x, Z):
    if spec.n != 1 or spec.m != 1:
        raise InvalidArgumentError(
            "grid-search Bellman operator is implemented for scalar systems only; "
            "use bellman_apply_analytic for n > 1")
    x = float(la.as_vector(x)[0])
    Z = np.asarray(Z, dtype=float).reshape(2, 2)
    return x, float(Z[0, 0]), 0.5 * float(Z[0, 1] + Z[1, 0]), float(Z[1, 1])


def _inner_max(V, b, x, z, u, grid, check_unbounded=True):
    """``max_v V(v, Z + [bu - v; x][bu - v; x]^T)`` for each entry of ``u``."""
    z11, z12, z22 = z
    if grid.v_range is None:
        half = 10.0 * (abs(x) + np.abs(u)) + 1.0
        lo, hi = -half, half
    else:
        lo = np.full(u.size, grid.v_range[0])
        hi = np.full(u.size, grid.v_range[1])
    bu = b * u

    def fun(v):
        out = np.empty_like(v)
        step = max(1, _CHUNK // v.shape[1])
        for r0 in range(0, v.shape[0], step):
            vv = v[r0:r0 + step]
            d = bu[r0:r0 + step, None] - vv
            out[r0:r0 + step] = V.eval_scalar(vv, z11 + d * d, z12 + d * x, z22 + x * x)
        return out

    return _maximize_rows(fun, lo, hi, grid.v_steps, grid, check_unbounded=check_unbounded,
                          scale_hint=1.0)


def _default_gain(spec):
    try:
        return abs(float(solve_riccati(spec).K[0, 0]))
    except Exception:  # any failure just falls back to a unit window
        return 1.0


def bellman_apply(V, spec, x, Z, grid=None, gain=None):
    """``FV(x, Z) = min_u max_v {|x|^2_Q + |u|^2_R + V(v, Z + zeta zeta^T)}`` by grid search.

    ``zeta = [Bu - v; x]``.  Scalar systems only.  ``gain`` sets the default
    ``u`` window; when omitted it is taken from the Riccati solution.

    Raises :class:`UnboundedGameError` when the inner maximum sits on the
    edge of the ``v`` window and is still growing there.
    """
    grid = grid or SearchGrid()
    x, z11, z12, z22 = _scalar_data(spec, x, Z)
    q, r, b = float(spec.Q[0, 0]), float(spec.R[0, 0]), float(spec.B[0, 0])
    if grid.u_range is None:
        k = _default_gain(spec) if gain is None else abs(float(np.ravel(gain)[0]))
        half = 10.0 * abs(x) * k + 1.0
        ulo, uhi = np.array([-half]), np.array([half])
    else:
        ulo, uhi = np.array([grid.u_range[0]]), np.array([grid.u_range[1]])

    def neg_outer(u):
        flat = u.ravel()
        inner, _ = _inner_max(V, b, x, (z11, z12, z22), flat, grid)
        return -(q * x * x + r * flat * flat + inner).reshape(u.shape)

    neg, u_best = _maximize_rows(neg_outer, ulo, uhi, grid.u_steps, grid)
    u_best = float(u_best[0])
    _, v_best = _inner_max(V, b, x, (z11, z12, z22), np.array([u_best]), grid)
    return BellmanResult(value=float(-neg[0]), u_star=np.array([u_best]),
                         v_star=np.array([float(v_best[0])]))


# -- analytic elimination of v (any n) -------------------------------------

def _theta_max(fun, steps=2001):
    """``max_{theta in [-1, 1]} fun(theta)`` for a vectorised scalar function."""
    th = np.linspace(-1.0, 1.0, steps)
    vals = fun(th)
    j = int(np.argmax(vals))
    best_t, best_v = th[j], vals[j]
    lo, hi = th[max(j - 1, 0)], th[min(j + 1, steps - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda t: -float(fun(np.array([t]))[0]),
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12})
        if -res.fun > best_v:
            best_t, best_v = float(res.x), float(-res.fun)
    return float(best_v), float(best_t)


def inner_max_analytic(cf, which, x, Z, u):
    """``max_v V(v, Z + zeta zeta^T)`` with ``v`` eliminated in closed form.

    Supported for ``which`` in ``{"v_bar0", "v_bar1"}``; for ``v_bar1`` the
    remaining one-dimensional maximisation over ``theta`` is done numerically.
    """
    spec, sol = cf.spec, cf.sol
    n, g2 = cf.n, cf.gamma2
    x = la.as_vector(x)
    u = la.as_vector(u)
    Z = np.asarray(Z, dtype=float).reshape(2 * n, 2 * n)
    Ax, Bu = spec.A @ x, spec.B @ u
    Zb = Z[None]
    if which == "v_bar0":
        best = -np.inf
        for i in (1.0, -1.0):
            a = i * Ax + Bu
            val = a @ sol.S @ a - g2 * float(vf.sign_penalty(cf, Zb, i)[0])
            best = max(best, val)
        return float(best)
    if which != "v_bar1":
        raise InvalidArgumentError(f"no analytic elimination for {which!r}")
    ay = float(vf.sign_evidence(cf, Zb)[0])
    diag = float(vf.diag_penalty(cf, Zb)[0])
    TP = sol.T - sol.P
    base = g2 * np.eye(n) - sol.T
    cross = Ax @ Bu

    def phi(theta):
        out = np.empty(theta.shape)
        for k, th in enumerate(theta):
            N = base + th * th * TP
            w = th * Ax + Bu
            out[k] = (g2 * g2 * (w @ np.linalg.solve(N, w))
                      - g2 * (Ax @ Ax + Bu @ Bu + 2.0 * th * cross) - 2.0 * th * ay)
        return out - g2 * diag

    return _theta_max(phi, steps=401)[0]


def bellman_apply_analytic(cf, which, x, Z):
    """``F V(x, Z)`` for ``V`` in the closed-form family, any ``n``.

    The outer minimisation over ``u`` is convex and done with scipy.
    """
    spec = cf.spec
    x = la.as_vector(x)
    R = spec.R

    def obj(u):
        return float(u @ R @ u) + inner_max_analytic(cf, which, x, Z, u)

    if spec.m == 1:
        k = float(np.max(np.abs(cf.sol.K @ x))) + 1.0
        res = optimize.minimize_scalar(lambda s: obj(np.array([s])), bounds=(-10 * k, 10 * k),
                                       method="bounded", options={"xatol": 1e-10})
        u_best, best = np.array([res.x]), float(res.fun)
    else:
        res = optimize.minimize(obj, np.zeros(spec.m), method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
        u_best, best = res.x, float(res.fun)
    return BellmanResult(value=float(x @ spec.Q @ x) + best, u_star=u_best, v_star=np.array([]))


# -- fixed point of the explicit value function ----------------------------

def sample_scalar_states(count, seed=0, x_scale=2.0, ratio_scale=0.6, diag_scale=1.0):
    """Random scalar ``(x, Z)`` pairs concentrated where the sign is still uncertain.

    ``z12 = r x^2`` with ``r`` uniform in ``+-ratio_scale``; diagonal entries
    are uniform in ``[0, diag_scale]``.
    """
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-x_scale, x_scale, count)
    rs = rng.uniform(-ratio_scale, ratio_scale, count)
    d = rng.uniform(0.0, diag_scale, (count, 2))
    out = []
    for x, r, (d1, d2) in zip(xs, rs, d):
        z12 = r * x * x
        out.append((np.array([x]), np.array([[d1, z12], [z12, d2]])))
    return out


def fixed_point_residuals(cf, grid, sample_states):
    """Per-state ``|F v_bar1 - v_bar1| / max(1, |v_bar1|)``."""
    V = value_handle(cf, "v_bar1")
    gain = cf.sol.K
    out = []
    for x, Z in sample_states:
        target = vf.v_bar1(cf, x, Z)
        fx = bellman_apply(V, cf.spec, x, Z, grid, gain=gain).value
        out.append(abs(fx - target) / max(1.0, abs(target)))
    return np.array(out)


def fixed_point_residual(cf, grid, sample_states):
    """Largest normalised gap between ``F v_bar1`` and ``v_bar1`` over the samples.

    Small when the explicit law is optimal; states where condition (ii) fails
    show up as a strictly positive gap.
    """
    return float(np.max(fixed_point_residuals(cf, grid, sample_states)))


# -- value iteration --------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class RatioTable:
    """``V(x, Z) = x^2 g(z12 / x^2) - gamma^2 (z11 + a^2 z22)`` with ``g`` tabulated.

    Values of ``g`` beyond the table are extended linearly with the edge
    slopes, which also gives the ``x -> 0`` limit ``slope * |z12|``.
    """

    ratios: np.ndarray
    g: np.ndarray
    a: float
    gamma2: float

    def __call__(self, x, z11, z12, z22):
        r, g = self.ratios, self.g
        rmax = r[-1]
        sp = (g[-1] - g[-2]) / (r[-1] - r[-2])
        sm = (g[0] - g[1]) / (r[1] - r[0])
        xx = x * x
        inside = np.abs(z12) <= rmax * xx
        ratio = np.where(inside, z12 / np.where(xx > 0, xx, 1.0), 0.0)
        core = xx * np.interp(ratio, r, g)
        slope = np.where(z12 >= 0, sp, sm)
        edge = np.where(z12 >= 0, g[-1], g[0])
        outside = xx * (edge - slope * rmax) + slope * np.abs(z12)
        return np.where(inside, core, outside) - self.gamma2 * (z11 + self.a * self.a * z22)

    def handle(self, label):
        return ValueHandle(lambda x, Z: self(x[:, 0], Z[:, 0, 0], Z[:, 0, 1], Z[:, 1, 1]),
                           label, scalar=self)


def initial_value_handle(spec):
    """``V_0(x, Z) = -gamma^2 min_i ||[I iA]^T||^2_Z`` (scalar)."""
    a, g2 = float(spec.A[0, 0]), spec.gamma**2

    def v0(x, z11, z12, z22):
        return -g2 * (z11 + a * a * z22 - 2.0 * np.abs(a * z12)) + 0.0 * x

    return ValueHandle(
        lambda x, Z: v0(x[:, 0], Z[:, 0, 0], Z[:, 0, 1], Z[:, 1, 1]), "V0", scalar=v0)


def value_iteration_tables(spec, k_max, grid=None, ratio_range=1.0, ratio_steps=201,
                           mirror=True):
    """Tabulated iterates ``g_k`` of ``V_{k+1} = F V_k`` from ``V_0``.

    Homogeneity gives ``V_k(x, Z) = x^2 g_k(z12 / x^2)`` after removing the
    diagonal of ``Z``, so each iterate is stored on a grid of ratios.  Every
    iterate is even in ``z12``; with ``mirror`` only ``z12 >= 0`` is computed.
    """
    _scalar_data(spec, [0.0], np.zeros((2, 2)))
    if ratio_steps % 2 == 0:
        raise InvalidArgumentError("ratio_steps must be odd so the grid contains 0")
    grid = grid or SearchGrid(u_steps=201, v_steps=201)
    a, g2 = float(spec.A[0, 0]), spec.gamma**2
    ratios = np.linspace(-ratio_range, ratio_range, ratio_steps)
    mid = ratio_steps // 2
    todo = range(mid, ratio_steps) if mirror else range(ratio_steps)
    gain = _default_gain(spec)
    V = initial_value_handle(spec)
    tables = [RatioTable(ratios, 2.0 * g2 * np.abs(a * ratios), a, g2)]
    for k in range(k_max):
        g = np.empty_like(ratios)
        for j in todo:
            r = ratios[j]
            Z = np.array([[0.0, r], [r, 0.0]])
            g[j] = bellman_apply(V, spec, [1.0], Z, grid, gain=gain).value
        if mirror:
            g[:mid] = g[:mid:-1]
        if np.max(np.abs(g)) > 1e6:
            raise UnboundedGameError(f"value iterate {k + 1} exceeds 1e6; gamma too small")
        table = RatioTable(ratios, g, a, g2)
        tables.append(table)
        V = table.handle(f"V{k + 1}")
        log.debug("value iteration %d: g(0) = %.12g", k + 1, g[mid])
    return tables


def value_iteration(spec, x0, k_max, grid=None, **table_kw):
    """``[V_0(x0, 0), ..., V_{k_max}(x0, 0)]`` for a scalar system."""
    x0 = float(la.as_vector(x0)[0])
    tables = value_iteration_tables(spec, k_max, grid, **table_kw)
    return [float(x0 * x0 * np.interp(0.0, t.ratios, t.g)) for t in tables]


# -- appendix lemmas --------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class CDMResult:
    feasible: bool
    margins: tuple


def cdm_matrices(C, D, M):
    """``2I + M^-1 + M - (I +/- D C^-1)(I + M)(I +/- D C^-1)^T`` for both signs."""
    C, D = la.as_matrix(C, "C"), la.as_matrix(D, "D")
    M = la.as_symmetric(M, "M")
    n = C.shape[0]
    if C.shape != (n, n) or D.shape != (n, n) or M.shape != (n, n):
        raise InvalidArgumentError("C, D, M must be square matrices of equal size")
    s = np.linalg.svd(C, compute_uv=False)
    if s[-1] <= la.SINGULAR_RTOL * s[0]:
        raise InvalidArgumentError("C must be invertible")
    if la.psd_margin(M) <= 0:
        raise InvalidArgumentError("M must be positive definite")
    I = np.eye(n)
    E = D @ np.linalg.inv(C)
    base = 2 * I + la.sym_inverse(M) + M
    out = []
    for sign in (1.0, -1.0):
        F = I + sign * E
        X = base - F @ (I + M) @ F.T
        out.append(0.5 * (X + X.T))
    return out[0], out[1]


def cdm_check_ii(C, D, M, tol=None):
    plus, minus = cdm_matrices(C, D, M)
    if tol is None:
        tol = max(la.default_psd_tol(plus), la.default_psd_tol(minus))
    mp, mm = la.psd_margin(plus), la.psd_margin(minus)
    return CDMResult(feasible=bool(mp >= -tol and mm >= -tol), margins=(mp, mm))


@dataclasses.dataclass(frozen=True)
class CDMBruteForce:
    holds: bool
    witness: Optional[tuple] = None
    best_excess: float = -math.inf


class _ThetaProblem:
    """``h(theta) = |theta Cx + Dx|^2_{(I + theta^2 M)^-1} + theta c`` for many ``(x, c)``."""

    def __init__(self, C, D, M):
        lam, U = np.linalg.eigh(M)
        self.lam, self.U, self.C, self.D = lam, U, C, D

    def values(self, X, c, theta):
        # X: (N, n), c: (N,), theta: (K,) -> (N, K)
        a = X @ self.C.T @ self.U
        b = X @ self.D.T @ self.U
        w = theta[None, :, None] * a[:, None, :] + b[:, None, :]
        f = np.sum(w * w / (1.0 + theta[None, :, None] ** 2 * self.lam), axis=2)
        return f + c[:, None] * theta[None, :]


def _witness_c(C, D, M, X):
    """``c = -2 x^T C^T (I + M)^-1 D x`` for each row of ``X``."""
    n = C.shape[0]
    G = C.T @ np.linalg.solve(np.eye(n) + M, D)
    return -2.0 * np.einsum("ni,ij,nj->n", X, G, X)


def cdm_check_i_bruteforce(C, D, M, trials=1000, seed=0, threshold=1e-8, polish=True):
    """Search for ``(x, c)`` where an interior ``theta`` beats both ``theta = +-1``.

    ``x`` is sampled at random with norms between 1 and 100.  ``c`` is either the choice
    ``-2 x^T C^T (I+M)^-1 D x``, which turns any violation of the separable
    bound into a violation here, or a random perturbation of it.  Each
    ``theta`` profile is scanned on a ``1e-3`` grid and the interior maximum is
    polished with a bounded scalar search.  When sampling finds nothing the
    most promising ``x`` is further improved by Nelder-Mead on the sphere of radius 100.
    """
    C, D = la.as_matrix(C, "C"), la.as_matrix(D, "D")
    M = la.as_symmetric(M, "M")
    n = C.shape[0]
    rng = np.random.default_rng(seed)
    prob = _ThetaProblem(C, D, M)
    theta = np.linspace(-1.0, 1.0, 2001)
    inner = theta[1:-1]

    # h is homogeneous of degree 2 in (x, sqrt|c|), so |x| spans two decades to
    # keep the absolute threshold meaningful for near-marginal instances
    X = rng.standard_normal((trials, n))
    X *= (10.0 ** rng.uniform(0.0, 2.0, trials) / np.linalg.norm(X, axis=1))[:, None]
    c = _witness_c(C, D, M, X)
    half = trials // 2
    c[half:] += rng.standard_normal(trials - half) * (1.0 + np.abs(c[half:]))

    coarse = np.linspace(-1.0, 1.0, 401)

    def excess(Xb, cb, grid=theta):
        vals = prob.values(Xb, cb, grid)
        ends = np.maximum(vals[:, 0], vals[:, -1])
        j = np.argmax(vals[:, 1:-1], axis=1)
        return vals[:, 1:-1][np.arange(len(cb)), j] - ends, j, ends

    ex, j, ends = excess(X, c)
    order = np.argsort(-ex)
    best = -math.inf
    for k in order[:8]:
        if ex[k] < -1e-3 and best > -math.inf:
            break
        # inner index j is theta[j + 1]; bracket by its neighbours, endpoints included
        lo, hi = theta[j[k]], theta[j[k] + 2]
        xk, ck = X[k:k + 1], c[k:k + 1]
        res = optimize.minimize_scalar(
            lambda t: -float(prob.values(xk, ck, np.array([t]))[0, 0]),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        peak = max(-res.fun, ex[k] + ends[k])
        gap = peak - ends[k]
        best = max(best, gap)
        if gap > threshold and abs(res.x) < 1.0:
            return CDMBruteForce(False, (X[k].copy(), float(ck[0]), float(res.x)), gap)

    if polish:
        radius = 100.0
        def neg_gap(y):
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            xb = (radius * y / nrm)[None, :]
            e, _, _ = excess(xb, _witness_c(C, D, M, xb), coarse)
            return -float(e[0])

        for k in order[:2]:
            res = optimize.minimize(neg_gap, X[k], method="Nelder-Mead",
                                    options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 200})
            y = radius * res.x / np.linalg.norm(res.x)
            yb = y[None, :]
            cb = _witness_c(C, D, M, yb)
            e, jj, _ = excess(yb, cb)
            best = max(best, float(e[0]))
            if e[0] > threshold:
                return CDMBruteForce(False, (y, float(cb[0]), float(inner[jj[0]])), float(e[0]))
    return CDMBruteForce(True, None, best)


def appendix_identity_check(P, T, gamma, K, A, B):
    """Largest deviation among the scaling identities linking the two matrix conditions.

    With ``W = gamma^2 I - T``, ``M = W^-1/2 (T-P) W^-1/2``, ``C = W^-1/2 A`` and
    ``D = W^-1/2 B K``, checks

    * ``W^1/2 (I + M) W^1/2 = gamma^2 I - P``
    * ``W^1/2 (I + M^-1) W^1/2 = W (T-P)^-1 (gamma^2 I - P)``
    * ``W^1/2 (2I + M + M^-1) W^1/2 = (gamma^2 I - P)(T-P)^-1(gamma^2 I - P)``
    * ``W^1/2 (I +/- D C^-1) W^-1/2 = I +/- B K A^-1``
    * the scaled CDM matrices equal the condition-(ii) matrices, both signs.

    Deviations are entrywise, relative to ``max(1, max|rhs|)``.
    """
    P, T = la.as_symmetric(P, "P"), la.as_symmetric(T, "T")
    A, B, K = la.as_matrix(A, "A"), la.as_matrix(B, "B"), la.as_matrix(K, "K")
    n = P.shape[0]
    g2 = float(gamma) ** 2
    I = np.eye(n)
    if not (la.psd_margin(P) > 0 and la.psd_margin(T - P) > 0 and la.psd_margin(g2 * I - T) > 0):
        raise InvalidArgumentError("appendix identities need 0 < P < T < gamma^2 I")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= la.SINGULAR_RTOL * s[0]:
        raise InvalidArgumentError("A must be invertible")
    W = g2 * I - T
    Wh = la.sym_sqrt(W)
    Wmh = la.sym_sqrt(W, inverse=True)
    TP = T - P
    TPinv = np.linalg.inv(TP)
    M = Wmh @ TP @ Wmh
    Minv = np.linalg.inv(M)
    C = Wmh @ A
    D = Wmh @ B @ K
    E = D @ np.linalg.inv(C)
    G = g2 * I - P
    BKAinv = B @ K @ np.linalg.inv(A)

    pairs = [
        (Wh @ (I + M) @ Wh, G),
        (Wh @ (I + Minv) @ Wh, W @ TPinv @ G),
        (Wh @ (2 * I + M + Minv) @ Wh, G @ TPinv @ G),
    ]
    for sign in (1.0, -1.0):
        F = I + sign * E
        pairs.append((Wh @ F @ Wmh, I + sign * BKAinv))
        mdc = 2 * I + Minv + M - F @ (I + M) @ F.T
        H = I + sign * BKAinv
        pairs.append((Wh @ mdc @ Wh, G @ TPinv @ G - H @ G @ H.T))
    return float(max(np.max(np.abs(l - r)) / max(1.0, float(np.max(np.abs(r))))
                     for l, r in pairs))
