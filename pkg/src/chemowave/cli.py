"""Batch front-end: speeds | wave | evolve | verify | eig | sweep.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import __version__, kernels
from .config import MODES, ConfigError, ExperimentConfig, load_config, schema_document
from .envelope import build_envelope, membership, verify_all
from .errors import (BudgetExceeded, DomainError, Divergence, InadmissibleParameters, NoConstruction,
                     NoRoot, NotApplicable, WindowUndefined)
from .field import Grid, Profile, solve_field_ode
from .params import ModelParams, admissible_window, chi_star, mu_from_speed
from .spectra import (EigenProblem, dirichlet_length, neumann_dirichlet_length,
                      nonexistence_certificate, principal_eigen)
from .wave import default_grid, evolve_coupled, fixed_point_wave, front_position, front_speed

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3

COLUMNS = {
    "speeds": ["chi", "tau", "a", "b", "chi_star", "mu_star2", "mu_star", "c_star", "c_star2",
               "status", "error"],
    "wave": ["chi", "tau", "c", "mu", "left_state", "decay_rate", "decay_ratio", "residual",
             "residual_tolerance", "outer_iterations", "outside_theory", "status", "error"],
    "evolve": ["t", "sup_u", "sup_v", "distance", "front"],
    "verify": ["chi", "mu", "verifier", "numeric", "analytic", "tolerance", "passed"],
    "eig": ["kind", "a", "c", "bc", "L", "eps", "lambda0", "lam", "bracket_lo", "bracket_hi",
            "growth_rate", "premise", "contradiction", "status", "error"],
}
SWEEP_PREFIX = ["row", "sweep_chi", "sweep_tau", "sweep_c"]


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool


@dataclass
class RunResult:
    columns: List[str]
    rows: List[dict] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    profiles: Dict[str, Profile] = field(default_factory=dict)
    solver_failure: bool = False
    timings: Dict[str, float] = field(default_factory=dict)

    def check(self, name, value, tolerance, passed):
        self.checks.append(Check(name, float(value), float(tolerance), bool(passed)))


SOLVER_ERRORS = (BudgetExceeded, Divergence, NoRoot)


def _grid_from(cfg: ExperimentConfig, x_min: float, x_max: float, dx: float) -> Grid:
    g = cfg.section("grid")
    lo = x_min if g["x_min"] is None else float(g["x_min"])
    hi = x_max if g["x_max"] is None else float(g["x_max"])
    return Grid.with_spacing(lo, hi, dx if g["dx"] is None else float(g["dx"]))


# ---- per-row tasks (top level so sweeps can pickle them) ----

def speeds_row(p: ModelParams) -> dict:
    row = {"chi": p.chi, "tau": p.tau, "a": p.a, "b": p.b}
    try:
        row["chi_star"] = chi_star(p)
    except DomainError as e:
        row["chi_star"] = None
        row["error"] = str(e)
    try:
        w = admissible_window(p)
        row.update(mu_star2=w.mu_star2, mu_star=w.mu_star, c_star=w.c_star,
                   c_star2=w.c_star2, status="ok")
    except (WindowUndefined, DomainError) as e:
        row.update(status="undefined", error=str(e))
    return row


def _wave_speed_choice(p: ModelParams, c) -> float:
    if c is not None and c != "mid":
        return float(c)
    try:
        w = admissible_window(p)
    except WindowUndefined as e:
        raise InadmissibleParameters(f"wave.c = 'mid' needs an admissible window: {e}") from e
    if w.unbounded:
        raise InadmissibleParameters("wave.c = 'mid' needs a bounded window")
    return 0.5 * (w.c_star + w.c_star2)


def wave_row(tree: dict, chi: float, tau: float, c) -> dict:
    cfg = ExperimentConfig(tree)
    p0 = cfg.params
    p = ModelParams(p0.a, p0.b, chi, tau)
    row = {"chi": chi, "tau": tau}
    try:
        c = _wave_speed_choice(p, c)
        row["c"] = c
        w = _solve_wave(cfg, p, c)
    except (InadmissibleParameters, WindowUndefined, DomainError) as e:
        row.update(status="inadmissible", error=str(e))
        return row
    except SOLVER_ERRORS as e:
        row.update(status="nonconvergence", error=str(e))
        return row
    row.update(mu=w.mu, left_state=w.left_state, decay_rate=w.decay_rate,
               decay_ratio=w.decay_ratio, residual=w.residual_norm,
               residual_tolerance=w.residual_tolerance, outer_iterations=w.outer_iterations,
               outside_theory=w.outside_theory, status="ok")
    return row


def eig_row(tree: dict, chi: float, tau: float, c) -> dict:
    cfg = ExperimentConfig(tree)
    e = cfg.section("eig")
    c = float(e["c"] if c is None else c)
    row = {"kind": "construction", "a": cfg.params.a, "c": c, "bc": e["bc"]}
    try:
        lam0, L = _construction(cfg.params.a, c, e["bc"], e["lambda0"])
        r = principal_eigen(EigenProblem(cfg.params.a, c, L, e["bc"]), int(e["n"]))
    except (NoConstruction, DomainError) as err:
        row.update(status="no-construction", error=str(err))
        return row
    except SOLVER_ERRORS as err:
        row.update(status="nonconvergence", error=str(err))
        return row
    row.update(L=L, lambda0=lam0, lam=r.lam, bracket_lo=r.bracket[0], bracket_hi=r.bracket[1],
               growth_rate=r.growth_rate, status="ok")
    return row


def _sweep_task(args):
    task, tree, chi, tau, c = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            if task == "speeds":
                p0 = ExperimentConfig(tree).params
                return speeds_row(ModelParams(p0.a, p0.b, chi, tau))
            if task == "wave":
                return wave_row(tree, chi, tau, c)
            return eig_row(tree, chi, tau, c)
        except Exception as e:  # recorded per row, never aborts the sweep
            return {"status": "error", "error": f"{type(e).__name__}: {e}"}


# ---- modes ----

def _solve_wave(cfg: ExperimentConfig, p: ModelParams, c: float):
    t = cfg.tol
    s = cfg.section("wave")
    g = cfg.section("grid")
    grid = None
    if g["x_min"] is not None or g["x_max"] is not None:
        env = build_envelope(p, mu_from_speed(c, p), check=not s["probe"])
        base = default_grid(p, c, env, g["dx"])
        grid = _grid_from(cfg, base.x_min, base.x_max, base.dx)
    return fixed_point_wave(p, c, grid, tol_outer=t["outer"], tol_inner=t["inner"],
                            k_max=int(s["k_max"]), t_max=float(s["t_max"]), dx=g["dx"],
                            max_points=int(s["max_points"]), probe=bool(s["probe"]))


def run_speeds(cfg: ExperimentConfig) -> RunResult:
    res = RunResult(COLUMNS["speeds"])
    p0 = cfg.params
    chis = [p0.chi if v is None else v for v in cfg.ranges()["chi"]]
    two_sqrt_a = 2 * math.sqrt(p0.a)
    for chi in chis:
        row = speeds_row(ModelParams(p0.a, p0.b, float(chi), p0.tau))
        res.rows.append(row)
        if row["status"] == "ok":
            res.check(f"window_ordered[chi={chi:g}]", row["c_star2"] - row["c_star"], 0.0,
                      row["c_star"] < row["c_star2"] and row["mu_star2"] < row["mu_star"])
            res.check(f"c_star_above_kpp[chi={chi:g}]", row["c_star"] - two_sqrt_a, 1e-12,
                      row["c_star"] >= two_sqrt_a - 1e-12)
    return res


def run_wave(cfg: ExperimentConfig) -> RunResult:
    res = RunResult(COLUMNS["wave"])
    p = cfg.params
    t = cfg.tol
    c = _wave_speed_choice(p, cfg.section("wave")["c"])
    w = _solve_wave(cfg, p, c)
    res.rows.append({"chi": p.chi, "tau": p.tau, "c": c, "mu": w.mu, "left_state": w.left_state,
                     "decay_rate": w.decay_rate, "decay_ratio": w.decay_ratio,
                     "residual": w.residual_norm, "residual_tolerance": w.residual_tolerance,
                     "outer_iterations": w.outer_iterations,
                     "outside_theory": w.outside_theory, "status": "ok"})
    ab = p.a / p.b
    res.check("left_state", abs(w.left_state - ab) / ab, t["left_state_rel"],
              abs(w.left_state - ab) <= t["left_state_rel"] * ab)
    res.check("decay_rate", abs(w.decay_rate - w.mu) / w.mu, t["decay_rate_rel"],
              abs(w.decay_rate - w.mu) <= t["decay_rate_rel"] * w.mu)
    res.check("decay_ratio", abs(w.decay_ratio - 1), t["decay_ratio_abs"],
              abs(w.decay_ratio - 1) <= t["decay_ratio_abs"])
    res.check("stationary_residual", w.residual_norm, w.residual_tolerance,
              w.residual_norm <= w.residual_tolerance)
    res.check("in_envelope", float(not w.in_envelope), 0.0, w.in_envelope)
    res.profiles.update(U=w.U, V=w.V)
    return res


def _initial(cfg: ExperimentConfig, p: ModelParams):
    e = cfg.section("evolve")
    ab = p.a / p.b
    if e["initial"] == "step":
        g = _grid_from(cfg, 0.0, 250.0, 0.1)
        u0 = np.where(g.x <= g.x_min + float(e["step_width"]), ab, 0.0)
        return Profile(g, u0)
    g = _grid_from(cfg, 0.0, 100.0, 0.1)
    rng = np.random.default_rng(int(cfg.tree["seed"]))
    ell = g.x_max - g.x_min
    k = np.arange(1, 9)
    coef = rng.uniform(-1, 1, size=(2, k.size))
    arg = 2 * math.pi * np.outer(g.x - g.x_min, k) / ell
    eta = np.cos(arg) @ coef[0] + np.sin(arg) @ coef[1]
    eta *= float(e["perturbation"]) / max(np.max(np.abs(eta)), 1e-300)
    return Profile(g, float(e["amplitude"]) * ab * (1 + eta))


def run_evolve(cfg: ExperimentConfig) -> RunResult:
    res = RunResult(COLUMNS["evolve"])
    p = cfg.params
    e = cfg.section("evolve")
    t = cfg.tol
    c = float(e["c"])
    u0 = _initial(cfg, p)
    traj = evolve_coupled(u0, p, c, float(e["t_end"]), float(e["dt"]),
                          record_every=float(e["record_every"]))
    ab = p.a / p.b
    dist = traj.distance_to(ab)
    level = float(e["front_level"])
    for k, s in enumerate(traj.states):
        res.rows.append({"t": s.t, "sup_u": traj.sup_u[k], "sup_v": traj.sup_v[k],
                         "distance": dist[k], "front": front_position(s.u, level)})
    if e["initial"] == "perturbed" and p.bounded_regime(c):
        bound = p.uniform_bound(c, u0.sup())
        excess = float(traj.sup_u.max() - bound)
        res.check("sup_bound", excess, t["bound_abs"], excess <= t["bound_abs"])
    if e["initial"] == "perturbed" and p.stable_regime(c) and u0.values.min() > 0:
        res.check("stability", dist[-1], t["stability_abs"], dist[-1] <= t["stability_abs"])
    if e["initial"] == "step":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            speed = front_speed(traj, level) + c
        floor = 2 * math.sqrt(p.a) * (1 - t["front_rel"])
        res.check("spreading_speed", speed, floor, speed >= floor)
    res.profiles.update(u=traj.states[-1].u, v=traj.states[-1].v)
    return res


def run_verify(cfg: ExperimentConfig) -> RunResult:
    res = RunResult(COLUMNS["verify"])
    p = cfg.params
    v = cfg.section("verify")
    w = admissible_window(p)
    p_eval = ModelParams(p.a, float(v["b_scale"]) * p.b, p.chi, p.tau)
    dx = cfg.section("grid")["dx"] or 0.05
    for f in v["fractions"]:
        mu = w.mu_star2 + float(f) * (w.mu_star - w.mu_star2)
        env = build_envelope(p, mu)
        grid = env.default_grid(dx)
        env = build_envelope(p, mu, grid=grid)
        u = env.sample(grid, "U_plus")
        ok = membership(u, env)
        res.check(f"membership[mu={mu:.6g}]", float(not ok), 0.0, ok)
        for r in verify_all(env, u, p_eval):
            res.rows.append({"chi": p.chi, "mu": mu, "verifier": r.name, "numeric": r.numeric,
                             "analytic": r.analytic, "tolerance": r.tolerance,
                             "passed": r.passed})
            res.check(f"{r.name}[mu={mu:.6g}]", r.numeric, r.tolerance, r.passed)
    return res


def _construction(a: float, c: float, bc: str, lambda0: Optional[float]):
    if bc == "DD":
        lam0 = (a - c * c / 4) / 2 if lambda0 is None else float(lambda0)
        return lam0, dirichlet_length(a, c, lam0)
    lam0 = 0.5 * (max(0.0, a - c * c / 4) + a) if lambda0 is None else float(lambda0)
    return lam0, neumann_dirichlet_length(a, c, lam0)


def synthetic_front(p: ModelParams, c: float, x_min: float = -40.0, x_max: float = 60.0,
                    dx: float = 0.025):
    """Logistic-shaped profile (a/b)/(1 + e^x) with its field: a claimed wave at speed c."""
    from types import SimpleNamespace
    g = Grid.with_spacing(x_min, x_max, dx)
    U = Profile(g, (p.a / p.b) / (1 + np.exp(g.x)))
    return SimpleNamespace(U=U, V=solve_field_ode(U, p.tau, c), c=c)


def run_eig(cfg: ExperimentConfig) -> RunResult:
    res = RunResult(COLUMNS["eig"])
    p = cfg.params
    e = cfg.section("eig")
    t = cfg.tol
    c = float(e["c"])
    lam0, L = _construction(p.a, c, e["bc"], e["lambda0"])
    r = principal_eigen(EigenProblem(p.a, c, L, e["bc"]), int(e["n"]))
    res.rows.append({"kind": "construction", "a": p.a, "c": c, "bc": e["bc"], "L": L,
                     "lambda0": lam0, "lam": r.lam, "bracket_lo": r.bracket[0],
                     "bracket_hi": r.bracket[1], "growth_rate": r.growth_rate, "status": "ok"})
    res.check("eigenvalue", abs(r.lam - lam0), t["eig_abs"], abs(r.lam - lam0) <= t["eig_abs"])
    res.check("growth_rate", r.cross_check_gap, t["eig_abs"], r.cross_check_gap <= t["eig_abs"])
    res.check("positive_eigenfunction", float(not r.positive), 0.0, r.positive)
    res.profiles["phi"] = r.phi
    if e["certificate"]:
        cert = nonexistence_certificate(synthetic_front(p, c), p, tuple(e["eps"]))
        if not cert.applicable:
            res.rows.append({"kind": "certificate", "a": p.a, "c": c, "status": "not-applicable",
                             "error": cert.reason})
        for ent in cert.entries:
            res.rows.append({"kind": "certificate", "a": p.a, "c": c, "bc": cert.route,
                             "L": cert.L, "eps": ent.eps, "lambda0": cert.lambda0,
                             "lam": ent.lambda_eps, "bracket_lo": ent.bracket[0],
                             "bracket_hi": ent.bracket[1],
                             "premise": ent.premise_positive and ent.premise_boundary,
                             "contradiction": ent.contradiction, "status": "ok"})
            res.check(f"contradiction[eps={ent.eps:g}]", ent.lambda_eps, 0.0, ent.contradiction)
        for eps, why in cert.inconclusive:
            res.rows.append({"kind": "certificate", "a": p.a, "c": c, "eps": eps,
                             "status": "inconclusive", "error": why})
            res.check(f"contradiction[eps={eps:g}]", float("nan"), 0.0, False)
    return res


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> RunResult:
    task = cfg.section("sweep")["task"]
    rng = cfg.ranges()
    res = RunResult(SWEEP_PREFIX + COLUMNS[task])
    combos = list(itertools.product(rng["chi"], rng["tau"], rng["c"]))
    jobs = [(task, cfg.tree, float(chi), float(tau), c) for chi, tau, c in combos]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_sweep_task, j) for j in jobs]
            out = []
            for f in futs:
                try:
                    out.append(f.result())
                except BrokenProcessPool as e:  # a worker died (e.g. out of memory)
                    out.append({"status": "nonconvergence", "error": f"worker failed: {e}"})
    else:
        out = [_sweep_task(j) for j in jobs]
    for i, ((chi, tau, c), row) in enumerate(zip(combos, out)):
        row = dict(row)
        row.update(row=i, sweep_chi=chi, sweep_tau=tau, sweep_c=c)
        res.rows.append(row)
        if row.get("status") == "nonconvergence":
            res.solver_failure = True
    return res


RUNNERS = {"speeds": run_speeds, "wave": run_wave, "evolve": run_evolve,
           "verify": run_verify, "eig": run_eig}


# ---- output ----

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(columns: List[str], rows: List[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in columns])
    return buf.getvalue()


def _write(path: str, text: str) -> str:
    with open(path, "w") as f:
        f.write(text)
    return hashlib.sha256(text.encode()).hexdigest()


def _profile_text(name: str, prof: Profile, digest: str) -> str:
    lines = [f"# profile {name} config_sha256={digest}", "# x value"]
    lines += [f"{x!r} {v!r}" for x, v in zip(prof.x.tolist(), prof.values.tolist())]
    return "\n".join(lines) + "\n"


def _plot_script(names: List[str]) -> str:
    out = ["set terminal pngcairo size 900,600", "set xlabel 'x'"]
    for n in names:
        out += [f"set output '{n}.png'", f"plot '{n}.dat' using 1:2 with lines title '{n}'"]
    return "\n".join(out) + "\n"


def write_outputs(out_dir: str, cfg: ExperimentConfig, res: RunResult, exit_code: int,
                  error: Optional[str] = None) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    digest = cfg.digest()
    files = {}
    files["results.csv"] = _write(os.path.join(out_dir, "results.csv"),
                                  _csv_text(res.columns, res.rows))
    files["checks.csv"] = _write(os.path.join(out_dir, "checks.csv"), _csv_text(
        ["check", "value", "tolerance", "passed"],
        [{"check": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed}
         for c in res.checks]))
    for name, prof in sorted(res.profiles.items()):
        files[f"{name}.dat"] = _write(os.path.join(out_dir, f"{name}.dat"),
                                      _profile_text(name, prof, digest))
    if res.profiles and cfg.section("output")["plot"]:
        files["plot.gp"] = _write(os.path.join(out_dir, "plot.gp"),
                                  _plot_script(sorted(res.profiles)))
    files["schema.json"] = _write(os.path.join(out_dir, "schema.json"),
                                  json.dumps(schema_document(), indent=2, sort_keys=True) + "\n")
    manifest = {
        "package": "chemowave", "version": __version__, "backend": kernels.BACKEND,
        "mode": cfg.mode, "config": cfg.tree, "config_sha256": digest,
        "exit_code": exit_code, "error": error, "files": files,
        "timings": res.timings, "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=str)
        f.write("\n")
    return manifest


def run(cfg: ExperimentConfig, out_dir: str, workers: int = 1) -> int:
    t0 = time.perf_counter()
    error = None
    mode = cfg.mode
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = run_sweep(cfg, workers) if mode == "sweep" else RUNNERS[mode](cfg)
        if res.solver_failure:
            code = EXIT_SOLVER
        else:
            code = EXIT_OK if all(c.passed for c in res.checks) else EXIT_FAIL
    except SOLVER_ERRORS as e:
        res = RunResult(COLUMNS.get(mode, []))
        code, error = EXIT_SOLVER, f"{type(e).__name__}: {e}"
    res.timings["wall"] = time.perf_counter() - t0
    write_outputs(out_dir, cfg, res, code, error)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chemowave", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"chemowave {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for m in MODES:
        sp = sub.add_parser(m)
        sp.add_argument("--config", metavar="PATH", help="YAML configuration file")
        sp.add_argument("--out", metavar="DIR", default=f"chemowave-{m}", help="output directory")
        sp.add_argument("--workers", type=int, default=1, metavar="N",
                        help="worker processes for sweeps")
        sp.add_argument("--tol-override", action="append", default=[], metavar="K=V",
                        help="override tolerances.K")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (dotted path)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if args.workers < 1:
        print("chemowave: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.mode, args.set, args.tol_override)
        code = run(cfg, args.out, args.workers)
    except (ConfigError, InadmissibleParameters, WindowUndefined, NoConstruction,
            NotApplicable, DomainError) as e:
        print(f"chemowave: {e}", file=sys.stderr)
        return EXIT_USAGE
    status = {EXIT_OK: "pass", EXIT_FAIL: "check failed", EXIT_SOLVER: "solver failure"}[code]
    print(f"chemowave {cfg.mode}: {status} -> {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
