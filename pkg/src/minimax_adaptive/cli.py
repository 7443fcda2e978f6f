"""Command-line interface.

Every subcommand builds a report with four arrays (``verdict``, ``values``,
``margins``, ``assertions``), prints a short summary, writes its artifacts to
the output directory and exits with status 0 exactly when every assertion
passed.  Errors are reported as a JSON object on stderr with status 2.
"""

import argparse
import csv
import dataclasses
import json
import os
import sys

import numpy as np

from . import bellman as bm
from . import game
from . import riccati as rc
from . import value as vf
from .errors import InfeasibleGameError, InvalidArgumentError, MinimaxError

EXIT_OK, EXIT_FAILED, EXIT_ERROR = 0, 1, 2

EXAMPLE1_GAMMA = 2.5232

_TOP_KEYS = {"system", "gamma", "solver", "simulation", "output"}
_SYSTEM_KEYS = {"A", "B", "Q", "R"}
_SOLVER_KEYS = {"tol", "max_iter"}
_SIM_KEYS = {"x0", "sign", "adversary", "horizon"}
_ADV_KEYS = {"kind", "seed", "bound", "constant", "sign"}
_OUTPUT_KEYS = {"directory", "format"}
FORMATS = ("csv", "json")


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise InvalidArgumentError(f"{where} must be a JSON object")
    extra = sorted(set(d) - allowed)
    if extra:
        raise InvalidArgumentError(f"unknown key(s) in {where}: {', '.join(extra)}")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    spec: rc.GameSpec
    tol: float = rc.DEFAULT_TOL
    max_iter: int = rc.DEFAULT_MAX_ITER
    x0: tuple = (1.0,)
    sign: int = 1
    adversary: game.AdversaryPolicy = game.AdversaryPolicy()
    horizon: int = 50
    out_dir: str = "."
    fmt: str = "json"

    @classmethod
    def default(cls):
        """Example 1: ``A = B = Q = R = 1`` at ``gamma = 2.5232``."""
        return cls(spec=rc.GameSpec(1.0, 1.0, 1.0, 1.0, EXAMPLE1_GAMMA))

    @classmethod
    def from_dict(cls, d):
        _reject_unknown(d, _TOP_KEYS, "config")
        base = cls.default()
        sysd = d.get("system", {})
        _reject_unknown(sysd, _SYSTEM_KEYS, "system")
        mats = {k: sysd.get(k, getattr(base.spec, k)) for k in ("A", "B", "Q", "R")}
        spec = rc.GameSpec(gamma=d.get("gamma", base.spec.gamma), **mats)

        solver = d.get("solver", {})
        _reject_unknown(solver, _SOLVER_KEYS, "solver")
        tol = float(solver.get("tol", base.tol))
        max_iter = int(solver.get("max_iter", base.max_iter))
        if not (tol > 0 and max_iter >= 1):
            raise InvalidArgumentError("solver.tol must be positive and solver.max_iter >= 1")

        sim = d.get("simulation", {})
        _reject_unknown(sim, _SIM_KEYS, "simulation")
        x0 = tuple(float(v) for v in np.ravel(sim.get("x0", [1.0] * spec.n)))
        if len(x0) != spec.n:
            raise InvalidArgumentError(f"simulation.x0 must have length {spec.n}")
        sign = sim.get("sign", 1)
        if sign not in (1, -1):
            raise InvalidArgumentError("simulation.sign must be 1 or -1")
        adv = sim.get("adversary", {})
        _reject_unknown(adv, _ADV_KEYS, "simulation.adversary")
        constant = adv.get("constant")
        if constant is not None:
            constant = tuple(float(v) for v in np.ravel(constant))
            if len(constant) != spec.n:
                raise InvalidArgumentError(f"adversary constant must have length {spec.n}")
        adversary = game.AdversaryPolicy(kind=adv.get("kind", "zero"),
                                         bound=float(adv.get("bound", 1.0)),
                                         seed=int(adv.get("seed", 0)),
                                         constant=constant, sign=adv.get("sign"))
        if adversary.kind == "constant" and constant is None:
            raise InvalidArgumentError("adversary kind 'constant' needs a 'constant' vector")
        horizon = int(sim.get("horizon", base.horizon))
        if horizon < 1:
            raise InvalidArgumentError("simulation.horizon must be at least 1")

        out = d.get("output", {})
        _reject_unknown(out, _OUTPUT_KEYS, "output")
        fmt = out.get("format", base.fmt)
        if fmt not in FORMATS:
            raise InvalidArgumentError(f"output.format must be one of {FORMATS}")
        return cls(spec=spec, tol=tol, max_iter=max_iter, x0=x0, sign=sign,
                   adversary=adversary, horizon=horizon,
                   out_dir=str(out.get("directory", base.out_dir)), fmt=fmt)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise InvalidArgumentError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(d)

    def override(self, gamma=None, seed=None, horizon=None, out_dir=None, fmt=None, tol=None):
        cfg = self
        if gamma is not None:
            cfg = dataclasses.replace(cfg, spec=cfg.spec.with_gamma(gamma))
        if seed is not None:
            cfg = dataclasses.replace(cfg, adversary=dataclasses.replace(cfg.adversary, seed=seed))
        if horizon is not None:
            if horizon < 1:
                raise InvalidArgumentError("horizon must be at least 1")
            cfg = dataclasses.replace(cfg, horizon=horizon)
        if out_dir is not None:
            cfg = dataclasses.replace(cfg, out_dir=out_dir)
        if fmt is not None:
            cfg = dataclasses.replace(cfg, fmt=fmt)
        if tol is not None:
            if not tol > 0:
                raise InvalidArgumentError("tol must be positive")
            cfg = dataclasses.replace(cfg, tol=tol)
        return cfg


# -- reports ----------------------------------------------------------------

def _num(v):
    """JSON-friendly number or nested list."""
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


class Report:
    def __init__(self, command):
        self.command = command
        self.verdict = []
        self.values = []
        self.margins = []
        self.assertions = []

    def value(self, name, v):
        self.values.append({"name": name, "value": _num(v)})

    def margin(self, name, v):
        self.margins.append({"name": name, "value": _num(v)})

    def check(self, name, actual, expected=None, tol=None, passed=None, message=""):
        """Record an assertion; numeric ones pass when ``|actual - expected| <= tol``."""
        if passed is None:
            passed = abs(float(actual) - float(expected)) <= tol
        entry = {"name": name, "actual": _num(actual), "expected": _num(expected),
                 "tol": tol, "passed": bool(passed)}
        if message:
            entry["message"] = message
        self.assertions.append(entry)
        return passed

    @property
    def ok(self):
        return all(a["passed"] for a in self.assertions)

    def to_dict(self):
        return {"command": self.command, "verdict": self.verdict, "values": self.values,
                "margins": self.margins, "assertions": self.assertions}

    def rows(self):
        yield ["section", "name", "value", "expected", "tol", "passed"]
        for v in self.verdict:
            yield ["verdict", v["name"], v["value"], "", "", ""]
        for sec, items in (("value", self.values), ("margin", self.margins)):
            for it in items:
                yield [sec, it["name"], _cell(it["value"]), "", "", ""]
        for a in self.assertions:
            yield ["assertion", a["name"], _cell(a["actual"]), _cell(a["expected"]),
                   _cell(a["tol"]), "true" if a["passed"] else "false"]

    def summary(self):
        lines = []
        for v in self.verdict:
            lines.append(f"verdict {v['name']}: {v['value']}")
        for it in self.values + self.margins:
            lines.append(f"{it['name']} = {_cell(it['value'])}")
        if self.assertions:
            w = max(len(a["name"]) for a in self.assertions)
            for a in self.assertions:
                status = "PASS" if a["passed"] else "FAIL"
                line = f"{status} {a['name']:<{w}}  actual={_cell(a['actual'])}"
                if a["expected"] is not None:
                    diff = ""
                    if isinstance(a["actual"], (int, float)) and isinstance(a["expected"], (int, float)):
                        diff = f"  diff={float(a['actual']) - float(a['expected']):+.3e}"
                    line += f"  expected={_cell(a['expected'])}  tol={_cell(a['tol'])}{diff}"
                if a.get("message"):
                    line += f"  ({a['message']})"
                lines.append(line)
            failed = sum(not a["passed"] for a in self.assertions)
            lines.append(f"{len(self.assertions) - failed}/{len(self.assertions)} assertions passed")
        return "\n".join(lines)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return json.dumps(v)
    return str(v)


def _open_out(cfg, name):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def write_report(report, cfg):
    if cfg.fmt == "json":
        path = _open_out(cfg, f"{report.command}.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    else:
        path = _open_out(cfg, f"{report.command}.csv")
        write_rows(path, report.rows())
    return path


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in rows:
            w.writerow(row)


def _feasibility_report(report, feas):
    report.verdict.append({"name": "feasibility", "value": feas.verdict})
    report.verdict.append({"name": "reason", "value": feas.reason})
    sol = feas.solution
    if sol is not None:
        for name in ("P", "S", "T", "K"):
            report.value(name, getattr(sol, name))
        report.value("iterations", sol.iterations)
        report.value("riccati_residual", sol.residual)
    if feas.condition_ii is not None:
        report.margin("condition_ii_plus", feas.condition_ii.margin_plus)
        report.margin("condition_ii_minus", feas.condition_ii.margin_minus)
    if feas.lower_bound is not None:
        report.margin("lower_bound", feas.lower_bound.margin)


def _scalar(M):
    return float(np.asarray(M).reshape(-1)[0])


# -- commands -------------------------------------------------------------

def cmd_solve(cfg, args):
    report = Report("solve")
    feas = rc.classify(cfg.spec, tol=cfg.tol, max_iter=cfg.max_iter)
    _feasibility_report(report, feas)
    if feas.solution is None:
        raise rc.RiccatiInfeasibleError(feas.reason)
    return report


def _sweep_rows(cfg, lo, hi, steps):
    yield ["gamma", "verdict", "lower_bound_margin", "condition_ii_plus", "condition_ii_minus"]
    for g in np.linspace(lo, hi, steps):
        feas = rc.classify(cfg.spec.with_gamma(float(g)), tol=cfg.tol, max_iter=cfg.max_iter)
        lb = "" if feas.lower_bound is None else repr(feas.lower_bound.margin)
        c2 = feas.condition_ii
        yield [repr(float(g)), feas.verdict, lb,
               "" if c2 is None else repr(c2.margin_plus),
               "" if c2 is None else repr(c2.margin_minus)]


def cmd_gamma(cfg, args):
    report = Report("gamma")
    lo, hi = args.bracket
    s = cfg.spec
    g = rc.gamma_search(s.A, s.B, s.Q, s.R, args.criterion, bracket=(lo, hi),
                        tol=args.search_tol, riccati_tol=cfg.tol)
    report.verdict.append({"name": "criterion", "value": args.criterion})
    report.value("gamma_star", g)
    path = _open_out(cfg, f"gamma_sweep_{args.criterion}.csv")
    write_rows(path, _sweep_rows(cfg, lo, hi, args.sweep_steps))
    report.value("sweep_csv", os.path.basename(path))
    return report


def cmd_example1(cfg, args):
    """Full Example-1 pipeline with its golden numbers."""
    report = Report("example1")
    spec = cfg.spec
    feas = rc.classify(spec, tol=cfg.tol, max_iter=cfg.max_iter)
    _feasibility_report(report, feas)
    report.check("verdict_certified", feas.verdict, "certified",
                 passed=feas.verdict == rc.VERDICT_CERTIFIED,
                 message="" if feas.verdict == rc.VERDICT_CERTIFIED
                 else f"gamma={spec.gamma} is not certified: {feas.reason}")
    sol = feas.solution
    if sol is None:
        return report
    P, T, K = _scalar(sol.P), _scalar(sol.T), _scalar(sol.K)
    g2 = spec.gamma**2
    fine, coarse = 1e-3, 1e-2
    report.check("P", P, 1.6985, fine)
    report.check("T", T, 3.3165, fine)
    report.check("K", K, 0.6985, fine)
    report.check("K_printed", K, 0.698, coarse)
    g_c2 = rc.gamma_search(spec.A, spec.B, spec.Q, spec.R, "condition_ii", riccati_tol=cfg.tol)
    g_lb = rc.gamma_search(spec.A, spec.B, spec.Q, spec.R, "lower_bound", riccati_tol=cfg.tol)
    report.check("gamma_star_condition_ii", g_c2, 2.5232, fine)
    report.check("gamma_star_lower_bound", g_lb, 2.01, coarse)
    # value-function and control-law coefficients as printed
    report.check("coef_P", P, 1.70, coarse)
    report.check("coef_T", T, 3.32, coarse)
    report.check("coef_gamma2", g2, 6.37, coarse)
    report.check("coef_gamma4_over_TP", g2 * g2 / (T - P), 25.05, coarse)
    report.check("coef_threshold", (T - P) / g2, 0.25, coarse)
    report.check("law_gain_scale", g2 / (T - P), 3.93, coarse)
    report.check("law_K", K, 0.698, coarse)
    return report


def figure1_curve(cf, z_min, z_max, steps):
    """``(z, v_star(1, [[|z|, z], [z, |z|]]))`` on an even grid."""
    if steps < 2:
        raise InvalidArgumentError("figure1 needs at least 2 steps")
    if not z_min < z_max:
        raise InvalidArgumentError("figure1 needs z_min < z_max")
    zs = np.linspace(z_min, z_max, steps)
    Zs = np.array([vf.figure_z(z) for z in zs])
    vals = vf.v_star(cf, np.ones((steps, 1)), Zs)
    return zs, np.asarray(vals)


def cmd_figure1(cfg, args):
    report = Report("figure1")
    if cfg.spec.n != 1:
        raise InvalidArgumentError("figure1 is defined for scalar systems")
    cf = vf.ClosedFormValue.from_spec(cfg.spec, tol=cfg.tol, max_iter=cfg.max_iter)
    zs, vals = figure1_curve(cf, args.z_min, args.z_max, args.steps)
    path = _open_out(cfg, "figure1.csv")
    write_rows(path, [["z", "V"]] + [[repr(float(z)), repr(float(v))] for z, v in zip(zs, vals)])
    report.value("csv", os.path.basename(path))
    P, T = _scalar(cf.sol.P), _scalar(cf.sol.T)
    thr = vf.branch_threshold(cf)
    report.value("threshold", thr)
    k = int(np.argmax(vals))
    if zs[0] <= 0.0 <= zs[-1]:
        report.check("max_at_zero", float(zs[k]), 0.0, float(zs[1] - zs[0]) / 2)
        report.check("max_equals_T", float(vals[k]), T, 1e-2)
        report.check("max_golden", float(vals[k]), 3.32, 1e-2)
    plateau = np.abs(zs) >= thr
    if np.any(plateau):
        dev = float(np.max(np.abs(vals[plateau] - P)))
        report.check("plateau_equals_P", dev, 0.0, 1e-2)
        report.check("plateau_golden", float(np.mean(vals[plateau])), 1.70, 1e-2)
    mirror = vf.v_star(cf, np.ones((zs.size, 1)), np.array([vf.figure_z(-z) for z in zs]))
    report.check("symmetric", float(np.max(np.abs(mirror - vals))), 0.0, 1e-12)
    return report


def cmd_simulate(cfg, args):
    report = Report("simulate")
    feas = rc.classify(cfg.spec, tol=cfg.tol, max_iter=cfg.max_iter)
    report.verdict.append({"name": "feasibility", "value": feas.verdict})
    if feas.verdict == rc.VERDICT_INFEASIBLE:
        raise InfeasibleGameError(f"refusing to simulate an infeasible game: {feas.reason}")
    sol = feas.solution
    cf = vf.ClosedFormValue(cfg.spec, sol)
    traj = game.simulate(cfg.spec, sol, np.array(cfg.x0), cfg.sign, cfg.adversary, cfg.horizon)
    path = _open_out(cfg, "trajectory.csv")
    game.write_trajectory_csv(traj, path)
    diss = game.dissipation_check(traj, cf)
    report.value("csv", os.path.basename(path))
    report.value("bound", diss.bound)
    report.value("final_payoff", traj.running_payoff[-1])
    report.margin("dissipation_slack", diss.worst_slack)
    report.verdict.append({"name": "dissipation", "value": "ok" if diss.ok else "violated"})
    report.check("dissipation", diss.worst_slack, 0.0, 1e-6, passed=diss.ok)
    return report


VERIFY_SUITES = ("bellman", "lemmas", "identities", "all")


def random_cdm_instance(rng):
    """Random ``(C, D, M)`` with ``n <= 3``, invertible ``C`` and ``M > 0``."""
    n = int(rng.integers(1, 4))
    C = rng.standard_normal((n, n)) + 2.0 * np.eye(n) * rng.choice([-1.0, 1.0])
    D = rng.standard_normal((n, n)) * rng.uniform(0.0, 1.5)
    L = rng.standard_normal((n, n))
    M = (L @ L.T + 0.1 * np.eye(n)) * rng.uniform(0.1, 3.0)
    return C, D, M


def random_admissible_triple(rng):
    """Scalar ``(P, T, gamma)`` with ``0 < P < T < gamma^2`` plus random ``K``, ``A``, ``B``."""
    g = rng.uniform(0.5, 5.0)
    T = rng.uniform(0.01, 0.99) * g * g
    P = rng.uniform(0.01, 0.99) * T
    A = rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 3.0)
    return P, T, g, rng.normal(), A, rng.normal()


def _suite_bellman(cfg, args, report):
    feas = rc.classify(cfg.spec, tol=cfg.tol, max_iter=cfg.max_iter)
    if feas.verdict != rc.VERDICT_CERTIFIED:
        report.check("bellman_certified", feas.verdict, "certified", passed=False,
                     message="the fixed-point check needs condition (ii)")
        return
    cf = vf.ClosedFormValue(cfg.spec, feas.solution)
    c2 = feas.condition_ii
    marginal = min(c2.margin_plus, c2.margin_minus) < 1e-2
    limit = 5e-3 if marginal else 1e-3
    grid = bm.SearchGrid(u_steps=args.grid_steps, v_steps=args.grid_steps)
    states = bm.sample_scalar_states(args.states, seed=cfg.adversary.seed)
    res = bm.fixed_point_residual(cf, grid, states)
    report.margin("bellman_fixed_point_residual", res)
    report.check("bellman_fixed_point", res, 0.0, limit)


def _suite_lemmas(cfg, args, report):
    rng = np.random.default_rng(cfg.adversary.seed)
    disagree = 0
    feasible = 0
    for k in range(args.draws):
        C, D, M = random_cdm_instance(rng)
        ii = bm.cdm_check_ii(C, D, M)
        brute = bm.cdm_check_i_bruteforce(C, D, M, trials=100, seed=k)
        feasible += ii.feasible
        disagree += ii.feasible != brute.holds
    report.value("cdm_draws", args.draws)
    report.value("cdm_feasible", feasible)
    report.check("cdm_disagreements", disagree, 0, 0)


def _suite_identities(cfg, args, report):
    rng = np.random.default_rng(cfg.adversary.seed)
    worst = 0.0
    for _ in range(args.draws):
        worst = max(worst, bm.appendix_identity_check(*random_admissible_triple(rng)))
    try:
        sol = rc.solve_riccati(cfg.spec, tol=cfg.tol, max_iter=cfg.max_iter)
        own = bm.appendix_identity_check(sol.P, sol.T, cfg.spec.gamma, sol.K,
                                         cfg.spec.A, cfg.spec.B)
        report.margin("identity_deviation_config", own)
        worst = max(worst, own)
    except MinimaxError as exc:
        report.value("identity_config_skipped", str(exc))
    report.margin("identity_deviation_max", worst)
    report.check("identities", worst, 0.0, 1e-10)


def cmd_verify(cfg, args):
    report = Report("verify")
    suites = ("bellman", "lemmas", "identities") if args.suite == "all" else (args.suite,)
    report.verdict.append({"name": "suites", "value": ",".join(suites)})
    for s in suites:
        {"bellman": _suite_bellman, "lemmas": _suite_lemmas,
         "identities": _suite_identities}[s](cfg, args, report)
    return report


COMMANDS = {"solve": cmd_solve, "gamma": cmd_gamma, "example1": cmd_example1,
            "figure1": cmd_figure1, "simulate": cmd_simulate, "verify": cmd_verify}


def build_parser():
    # SUPPRESS keeps a subparser from overwriting flags given before the command
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=FORMATS, help="report format")
    common.add_argument("--seed", type=int, metavar="U64", help="random seed")
    common.add_argument("--tol", type=float, metavar="REAL", help="Riccati solver tolerance")
    common.add_argument("--gamma", type=float, help="override gamma")
    common.add_argument("--horizon", type=int, help="override simulation horizon")

    p = argparse.ArgumentParser(prog="minimax-adaptive", parents=[common],
                                description="Minimax adaptive control for a plant with unknown sign.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="Riccati synthesis and feasibility verdict")
    g = sub.add_parser("gamma", parents=[common], help="smallest gamma meeting a criterion")
    g.add_argument("--criterion", choices=rc.CRITERIA, default="condition_ii")
    g.add_argument("--bracket", nargs=2, type=float, default=(1.0, 100.0), metavar=("LO", "HI"))
    g.add_argument("--search-tol", type=float, default=1e-6)
    g.add_argument("--sweep-steps", type=int, default=100)
    sub.add_parser("example1", parents=[common], help="reproduce Example 1")
    f = sub.add_parser("figure1", parents=[common], help="value-function curve data")
    f.add_argument("--z-min", type=float, default=-0.5)
    f.add_argument("--z-max", type=float, default=0.5)
    f.add_argument("--steps", type=int, default=101)
    sub.add_parser("simulate", parents=[common], help="closed-loop game simulation")
    v = sub.add_parser("verify", parents=[common], help="numerical verification suites")
    v.add_argument("--suite", choices=VERIFY_SUITES, default="all")
    v.add_argument("--draws", type=int, default=1000, help="random instances per battery")
    v.add_argument("--states", type=int, default=100, help="sampled states for the Bellman check")
    v.add_argument("--grid-steps", type=int, default=401, help="u and v grid size")
    return p


def run(argv=None, stdout=None, stderr=None):
    """Parse ``argv``, run the command and return ``(exit_code, report_or_None)``."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    opt = {k: getattr(args, k, None) for k in ("config", "gamma", "seed", "horizon", "out",
                                                "format", "tol")}
    try:
        cfg = RunConfig.load(opt["config"]) if opt["config"] else RunConfig.default()
        cfg = cfg.override(gamma=opt["gamma"], seed=opt["seed"], horizon=opt["horizon"],
                           out_dir=opt["out"], fmt=opt["format"], tol=opt["tol"])
        report = COMMANDS[args.command](cfg, args)
        path = write_report(report, cfg)
    except (MinimaxError, ValueError) as exc:
        err = exc.to_dict() if isinstance(exc, MinimaxError) else {
            "error": "invalid-argument", "message": str(exc)}
        err["command"] = args.command
        print(json.dumps(err), file=stderr)
        return EXIT_ERROR, None
    except OSError as exc:
        err = {"error": "io-error", "message": exc.strerror or str(exc),
               "path": exc.filename, "command": args.command}
        print(json.dumps(err), file=stderr)
        return EXIT_ERROR, None
    print(report.summary(), file=stdout)
    print(f"report: {path}", file=stdout)
    return (EXIT_OK if report.ok else EXIT_FAILED), report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
