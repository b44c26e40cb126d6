"""End-to-end acceptance criteria at their stated tolerances and runtime budgets.

Each test prints one [PASS]/[FAIL] line; the lines are repeated in the pytest
terminal summary.
"""
import math
import warnings

import numpy as np
import pytest

from chemowave.cli import synthetic_front
from chemowave.envelope import build_envelope, residual_tolerance, verify_all
from chemowave.field import Grid, Profile, solve_field_kernel, solve_field_ode
from chemowave.params import ModelParams, admissible_window, chi_star, denominator, mu_from_speed
from chemowave.spectra import (EigenProblem, neumann_dirichlet_length, nonexistence_certificate,
                               principal_eigen)
from chemowave.wave import evolve_coupled, fixed_point_wave, front_speed, stationary_residual
from oracles import crossing, kpp_front


def _smooth(seed, grid):
    rng = np.random.default_rng(seed)
    x = grid.x
    u = rng.uniform(0, 2) / (1 + np.exp(rng.uniform(0.5, 3) * (x - rng.uniform(-5, 5))))
    for _ in range(3):
        u += rng.uniform(0, 1) * np.exp(-((x - rng.uniform(-10, 10)) / rng.uniform(0.5, 3)) ** 2)
    return Profile(grid, u)


def test_criterion_01_exponential_field(criterion):
    cr = criterion(1, "exponential field identity", 1.0)
    a, tau, mu = 1.0, 0.5, 0.5
    c = mu + a / mu
    D = float(denominator(mu, a, tau))
    g = Grid(-40.0, 40.0, 4000)
    V = solve_field_ode(Profile(g, np.exp(-mu * g.x)), tau, c, decay=mu, left_rate=-mu)
    exact = np.exp(-mu * g.x) / D
    err = float(np.max(np.abs(V.values - exact) / exact))
    cr.check("D", D == pytest.approx(1.375), f"D={D!r}")
    cr.check("sup relative error", err <= 10 * g.dx**2, f"{err:.3e} <= {10 * g.dx**2:.3e}")
    cr.finish()


def test_criterion_02_field_cross_method(criterion):
    cr = criterion(2, "kernel vs tridiagonal field", 30.0)
    g = Grid(-20.0, 20.0, 801)
    tol = max(1e-3, 10 * g.dx**2)
    worst = 0.0
    for seed in range(20):
        u = _smooth(seed, g)
        worst = max(worst, float(np.max(np.abs(solve_field_ode(u, 0.5, 1.5).values
                                               - solve_field_kernel(u, 0.5, 1.5).values))))
    cr.check("20 inputs", worst <= tol, f"max diff {worst:.3e} <= {tol:.3e}")
    cr.finish()


def test_criterion_03_threshold_limit(criterion):
    cr = criterion(3, "threshold tends to b/2", 5.0)
    vals = [chi_star(ModelParams(1.0, 1.0, 0.0, t)) for t in (0.5, 0.1, 0.02, 0.004)]
    cr.check("monotone", all(x < y for x, y in zip(vals, vals[1:])),
             " ".join(f"{v:.6f}" for v in vals))
    cr.check("within 2% of b/2", abs(vals[-1] - 0.5) <= 0.02 * 0.5, f"{vals[-1]:.6f}")
    cr.finish()


def test_criterion_04_speed_window_limits(criterion):
    cr = criterion(4, "speed window limits", 10.0)
    ws = [admissible_window(ModelParams(1.0, 1.0, chi, 0.5)) for chi in (1e-1, 1e-2, 1e-3, 1e-4)]
    cs = [w.c_star for w in ws]
    cr.check("c* nonincreasing", all(y <= x + 1e-12 for x, y in zip(cs, cs[1:])),
             " ".join(f"{v:.6f}" for v in cs))
    cr.check("c* within 1% of 2", abs(cs[-1] - 2.0) <= 0.02, f"{cs[-1]:.6f}")
    cr.check("c** > 10", ws[-1].c_star2 > 10, f"{ws[-1].c_star2:.6g}")
    cr.finish()


def test_criterion_05_verifier_suite(criterion):
    cr = criterion(5, "super/sub verifier suite", 20.0)
    n_pass = n_sound = 0
    pairs = 0
    for chi in (0.05, 0.1, 0.15, 0.2, 0.25):
        p = ModelParams(1.0, 1.0, chi, 0.5)
        w = admissible_window(p)
        weak = ModelParams(p.a, p.b / 10, p.chi, p.tau)
        for f in (0.3, 0.7):
            pairs += 1
            mu = w.mu_star2 + f * (w.mu_star - w.mu_star2)
            env = build_envelope(p, mu)
            g = env.default_grid(0.05)
            env = build_envelope(p, mu, grid=g)
            u = env.sample(g, "U_plus")
            tol = residual_tolerance(g.dx, env.constants.C0)
            reps = verify_all(env, u)
            n_pass += all(r.passed and r.tolerance <= tol for r in reps) and len(reps) == 4
            n_sound += not all(r.passed for r in verify_all(env, u, weak))
    cr.check("all four pass", n_pass == pairs == 10, f"{n_pass}/{pairs} pairs")
    cr.check("fails at b/10", n_sound == pairs, f"{n_sound}/{pairs} pairs rejected")
    cr.finish()


def test_criterion_06_wave_construction(criterion):
    cr = criterion(6, "fixed-point wave", 180.0)
    p = ModelParams(1.0, 1.0, 0.01, 0.5)
    w = admissible_window(p)
    c = 0.5 * (w.c_star + w.c_star2)
    W = fixed_point_wave(p, c, tol_inner=1e-12, tol_outer=1e-10)
    mu = mu_from_speed(c, p)
    cr.check("left state", 0.99 <= W.left_state <= 1.01, f"{W.left_state:.8f}")
    cr.check("decay rate", abs(W.decay_rate - mu) <= 0.02 * mu,
             f"{W.decay_rate:.6g} vs {mu:.6g}")
    cr.check("residual", W.residual_norm <= W.residual_tolerance,
             f"{W.residual_norm:.3e} <= {W.residual_tolerance:.3e}")
    W2 = fixed_point_wave(p, c, dx=W.U.grid.dx / 2, tol_inner=1e-12, tol_outer=1e-10)
    ratio = W.residual_norm / stationary_residual(W2.U, p, c, mu)
    cr.check("refinement", ratio >= 3.5, f"ratio {ratio:.2f} at dx={W.U.grid.dx:.4g}")
    cr.finish()


def test_criterion_07_kpp_oracle(criterion):
    cr = criterion(7, "KPP shooting oracle", 60.0)
    W = fixed_point_wave(ModelParams(1.0, 1.0, 0.0, 0.5), 2.5)
    xo, Uo = kpp_front(2.5)
    x = W.U.x - crossing(W.U.x, W.U.values, 0.5)
    m = (x > xo[0]) & (x < xo[-1])
    err = float(np.max(np.abs(np.interp(x[m], xo, Uo) - W.U.values[m])))
    cr.check("sup error", err <= 1e-3, f"{err:.3e}")
    cr.finish()


def _perturbed(seed, g, amp=3.0, size=0.1):
    rng = np.random.default_rng(seed)
    k = np.arange(1, 9)
    arg = 2 * math.pi * np.outer(g.x - g.x_min, k) / (g.x_max - g.x_min)
    eta = np.cos(arg) @ rng.uniform(-1, 1, 8) + np.sin(arg) @ rng.uniform(-1, 1, 8)
    eta *= size / np.max(np.abs(eta))
    return Profile(g, amp * (1 + eta))


P = ModelParams(1.0, 1.0, 0.1, 0.5)
C_EVOLVE = 1.0


def test_criterion_08_sup_bound(criterion):
    cr = criterion(8, "uniform bound", 120.0)
    cr.check("hypothesis", P.bounded_regime(C_EVOLVE))
    u0 = _perturbed(0, Grid(0.0, 100.0, 1001))
    tr = evolve_coupled(u0, P, C_EVOLVE, 100.0, 0.05, record_every=0.5)
    bound = P.uniform_bound(C_EVOLVE, u0.sup())
    top = float(tr.sup_u.max())
    cr.check("sup u", top <= bound + 1e-3, f"{top:.6f} <= {bound:.6f} + 1e-3")
    cr.finish()


def test_criterion_09_stability(criterion):
    cr = criterion(9, "stability of a/b", 180.0)
    cr.check("hypothesis", P.stable_regime(C_EVOLVE))
    u0 = _perturbed(1, Grid(0.0, 100.0, 1001))
    cr.check("inf u0 > 0", u0.values.min() > 0)
    tr = evolve_coupled(u0, P, C_EVOLVE, 200.0, 0.05, record_every=10.0)
    d = float(tr.distance_to(P.a / P.b)[-1])
    cr.check("distance at t=200", d <= 1e-3, f"{d:.3e}")
    cr.finish()


def test_criterion_10_eigen_closed_form(criterion):
    cr = criterion(10, "principal eigenvalue closed forms", 10.0)
    r = principal_eigen(EigenProblem(1.0, 0.0, 2 * math.pi, "DD"), 2000)
    cr.check("Dirichlet", abs(r.lam - 0.75) <= 1e-4, f"{r.lam:.10f}")
    L = neumann_dirichlet_length(1.0, -1.0, 0.9)
    cr.check("length", abs(L - 2.66393) <= 1e-4, f"L={L:.10f}")
    r = principal_eigen(EigenProblem(1.0, -1.0, L, "ND"), 2000)
    cr.check("Neumann-Dirichlet", abs(r.lam - 0.9) <= 1e-3, f"{r.lam:.10f}")
    cr.finish()


def test_criterion_11_certificate(criterion):
    cr = criterion(11, "nonexistence certificate below 2 sqrt(a)", 30.0)
    p = ModelParams(1.0, 1.0, 0.1, 0.5)
    cert = nonexistence_certificate(synthetic_front(p, 1.0), p, eps=(1e-2, 1e-3))
    cr.check("applicable", cert.applicable and cert.route == "DD", cert.route)
    for e in cert.entries:
        cr.check(f"eps={e.eps:g}", e.contradiction,
                 f"lambda={e.lambda_eps:.6f} > 0 while the profile claims lambda <= 0")
    cr.check("both eps", len(cert.entries) == 2 and cert.contradiction)
    cr.finish()


@pytest.mark.parametrize("chi", [0.0, 0.01])
def test_criterion_12_front_speed(criterion, chi):
    cr = criterion(12, f"spreading speed floor (chi={chi:g})", 300.0)
    p = ModelParams(1.0, 1.0, chi, 0.5)
    g = Grid.with_spacing(0.0, 250.0, 0.1)
    u0 = Profile(g, np.where(g.x <= 10.0, 1.0, 0.0))
    tr = evolve_coupled(u0, p, 0.0, 100.0, 0.05, record_every=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        s = front_speed(tr, 1e-2)
    cr.check("speed", s >= 2 * math.sqrt(p.a) * 0.95, f"{s:.4f} >= 1.9")
    cr.finish()
