"""Frozen-field relaxation, Picard fixed point, coupled evolution, diagnostics.

Time stepping is linearly implicit: diffusion, advection and the
linearised reaction are all taken at the new level,

    (I - dt A - dt diag(r - kappa U^n)) U^{n+1} = U^n,

with A the diffusion-advection stencil (centered where the cell Peclet
number is at most one, upwind elsewhere).  For dt max(r, 0) < 1 the matrix
is an M-matrix, so positivity and the comparison principle carry over to
the discrete level and the stationary state does not depend on dt.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .envelope import Envelope, build_envelope, membership, residual, residual_tolerance
from .errors import BudgetExceeded, DomainError, Divergence, InadmissibleParameters, NoRoot
from .field import Grid, Profile, field_derivative, solve_field_ode
from .params import ModelParams, is_admissible, mu_from_speed


def advection_weights(beta: np.ndarray, dx: float, left: str = "neumann",
                      right: str = "dirichlet"):
    """Nonnegative weights (al, au) with (A U)_i = al_i (U_{i-1}-U_i) + au_i (U_{i+1}-U_i).

    A discretises U'' + beta U'.  Centered differences where |beta| dx/2 <= 1,
    first-order upwind otherwise.  Neumann ends use a mirrored ghost point.
    """
    beta = np.asarray(beta, dtype=float)
    d2 = 1.0 / dx**2
    cen = np.abs(beta) * dx <= 2.0
    al = np.where(cen, d2 - beta / (2 * dx), d2 + np.maximum(-beta, 0.0) / dx)
    au = np.where(cen, d2 + beta / (2 * dx), d2 + np.maximum(beta, 0.0) / dx)
    al, au = np.maximum(al, 0.0), np.maximum(au, 0.0)  # round-off at |beta| dx = 2
    if left == "neumann":
        al[0], au[0] = 0.0, 2 * d2
    if right == "neumann":
        al[-1], au[-1] = 2 * d2, 0.0
    return al, au


def default_dx(p: ModelParams, c: float, C0: float, dx_max: float = 0.05) -> float:
    """Spacing keeping the cell Peclet number below one (|V'| <= C0/2)."""
    return min(dx_max, 1.8 / (abs(c) + p.chi * C0 + 1e-300))


def default_grid(p: ModelParams, c: float, env: Envelope, dx: Optional[float] = None) -> Grid:
    L = max(40.0, 20.0 / env.constants.mu)
    return Grid.with_spacing(-L, L, dx or default_dx(p, c, env.constants.C0))


def _stable_dt(dt: Optional[float], r: np.ndarray, dt_cap: float = 0.5) -> float:
    rmax = float(np.max(r, initial=0.0))
    lim = 0.9 / rmax if rmax > 0 else math.inf
    if dt is None:
        return min(dt_cap, lim)
    if dt > lim:
        warnings.warn(f"dt={dt} exceeds the positivity bound {lim:.3g}; reduced",
                      RuntimeWarning, stacklevel=3)
        return lim
    return dt


@dataclass
class FrozenOperator:
    """Time-independent coefficients of the frozen-field equation."""

    grid: Grid
    beta: np.ndarray
    r: np.ndarray
    kappa: float
    V: Profile
    Vp: Profile

    @classmethod
    def build(cls, u_frozen: Profile, p: ModelParams, c: float,
              decay: Optional[float] = None) -> "FrozenOperator":
        V = solve_field_ode(u_frozen, p.tau, c, decay=decay)
        Vp = field_derivative(V)
        beta = c - p.chi * Vp.values
        r = p.a - p.chi * (V.values - p.tau * c * Vp.values)
        return cls(u_frozen.grid, beta, r, p.b - p.chi, V, Vp)


def _imex_steps(U, op: FrozenOperator, dt, nsteps, right_val):
    """Implicit diffusion, explicit upwind advection and explicit reaction."""
    h = op.grid.dx
    n = op.grid.n
    lo = np.full(n, -dt / h**2)
    up = np.full(n, -dt / h**2)
    di = np.full(n, 1 + 2 * dt / h**2)
    up[0] = -2 * dt / h**2
    lo[-1] = up[-1] = 0.0
    di[-1] = 1.0
    b = op.beta
    for _ in range(nsteps):
        fw = np.zeros(n)
        bw = np.zeros(n)
        fw[:-1] = (U[1:] - U[:-1]) / h
        bw[1:] = (U[1:] - U[:-1]) / h
        adv = np.where(b > 0, b * fw, b * bw)
        adv[0] = 0.0
        rhs = U + dt * (adv + (op.r - op.kappa * U) * U)
        rhs[-1] = right_val
        U = np.maximum(kernels.thomas(lo, di, up, rhs), 0.0)
    return U


def evolve_frozen(u_frozen: Profile, U0: Profile, p: ModelParams, c: float, t_end: float,
                  dt: Optional[float] = None, *, decay: Optional[float] = None,
                  right_value: Optional[float] = None, scheme: str = "implicit",
                  op: Optional[FrozenOperator] = None) -> Profile:
    """Evolve U_t = U'' + (c - chi V')U' + (a - chi(V - tau c V') - (b-chi)U)U.

    V, V' come from u_frozen once.  Neumann at x_min; Dirichlet at x_max,
    pinned to ``right_value`` (default: U0 at x_max).
    scheme="imex" uses explicit upwind advection and explicit reaction with
    the CFL step 0.4 min(2 dx^2, dx/(|c| + chi |V'|)).
    """
    op = op or FrozenOperator.build(u_frozen, p, c, decay)
    rv = float(U0.values[-1]) if right_value is None else float(right_value)
    U = np.array(U0.values)
    if t_end <= 0:
        return Profile(U0.grid, U)
    h = op.grid.dx
    if scheme == "imex":
        lim = 0.4 * min(2 * h * h, h / (abs(c) + p.chi * np.max(np.abs(op.Vp.values)) + 1e-300))
        if dt is None or dt > lim:
            if dt is not None:
                warnings.warn(f"dt={dt} above the explicit bound {lim:.3g}; reduced",
                              RuntimeWarning, stacklevel=2)
            dt = lim
        nsteps = int(math.ceil(t_end / dt))
        return Profile(U0.grid, _imex_steps(U, op, t_end / nsteps, nsteps, rv))
    if scheme != "implicit":
        raise DomainError(f"unknown scheme {scheme!r}")
    dt = _stable_dt(dt, op.r)
    nsteps = int(math.ceil(t_end / dt - 1e-9))
    al, au = advection_weights(op.beta, h)
    U = kernels.implicit_steps(U, al, au, op.r, op.kappa, t_end / nsteps, nsteps,
                               False, 0.0, True, rv)
    return Profile(U0.grid, U)


@dataclass
class LimitRun:
    """Outcome of relaxing the frozen problem from U+."""

    U: Profile
    t: float
    increments: List[float]
    converged: bool
    sandwich_violation: float = 0.0
    monotone_violation: float = 0.0


def relax(u: Profile, p: ModelParams, c: float, env: Envelope, tol: float = 1e-8, *,
          t_max: float = 1e3, dt: Optional[float] = None, checkpoint: float = 1.0,
          track: bool = True, U_start: Optional[Profile] = None) -> LimitRun:
    """Evolve from U+ (or U_start) until the sup change over one checkpoint is below tol."""
    g = u.grid
    op = FrozenOperator.build(u, p, c, decay=env.constants.mu)
    dt = _stable_dt(dt, op.r)
    nsub = max(1, int(math.ceil(checkpoint / dt - 1e-9)))
    h = checkpoint / nsub
    al, au = advection_weights(op.beta, g.dx)
    Up = env.U_plus(g.x)
    Ulow = env.U_minus_delta(g.x)
    U = Up.copy() if U_start is None else np.array(U_start.values)
    rv = float(Up[-1])
    incs = []
    sand = mono = 0.0
    t = 0.0
    while t < t_max - 1e-12:
        Un = kernels.implicit_steps(U, al, au, op.r, op.kappa, h, nsub, False, 0.0, True, rv)
        t += checkpoint
        diff = float(np.max(np.abs(Un - U)))
        incs.append(diff)
        if track:
            mono = max(mono, float(np.max(Un - U)))
            sand = max(sand, float(np.max(Un - Up)), float(np.max(Ulow - Un)))
        U = Un
        if not np.all(np.isfinite(U)):
            raise Divergence("non-finite values in frozen relaxation", t=t)
        if diff < tol:
            return LimitRun(Profile(g, U), t, incs, True, sand, mono)
    raise BudgetExceeded(f"no stationary limit within t_max={t_max} (last change {incs[-1]:.3g})",
                         last=Profile(g, U), history=incs)


def long_time_limit(u: Profile, p: ModelParams, c: float, tol: float = 1e-8, *,
                    env: Optional[Envelope] = None, t_max: float = 1e3,
                    dt: Optional[float] = None) -> Profile:
    """lim_{t->inf} U(x, t; U+) for the field frozen at u."""
    if env is None:
        env = build_envelope(p, mu_from_speed(c, p), grid=u.grid)
    return relax(u, p, c, env, tol, t_max=t_max, dt=dt, track=False).U


@dataclass
class WaveProfile:
    U: Profile
    V: Profile
    c: float
    mu: float
    residual_norm: float
    left_state: float
    decay_ratio: float
    residual_tolerance: float = 0.0
    decay_rate: float = float("nan")
    outer_iterations: int = 0
    history: List[float] = field(default_factory=list)
    inner_times: List[float] = field(default_factory=list)
    sandwich_violation: float = 0.0
    monotone_violation: float = 0.0
    in_envelope: bool = True
    outside_theory: bool = False


def stationary_residual(U: Profile, p: ModelParams, c: float, mu: Optional[float] = None,
                        skip: int = 2) -> float:
    """sup |L U| with V = V(U), fourth-order stencils, ends excluded."""
    r = residual(U, U, p, c, decay=mu, order=4).values
    return float(np.max(np.abs(r[skip:-skip])))


def fixed_point_wave(p: ModelParams, c: float, grid: Optional[Grid] = None,
                     tol_outer: float = 1e-6, tol_inner: float = 1e-8, *,
                     k_max: int = 200, t_max: float = 1e3, dt: Optional[float] = None,
                     dx: Optional[float] = None, max_points: int = 2_000_000,
                     probe: bool = False) -> WaveProfile:
    """Picard iteration u_{k+1} = U(.; u_k) from u_0 = U+.

    probe=True runs speeds whose (p, mu) violates the constraint pair (e.g. c > c**)
    instead of raising; such results carry outside_theory=True.

    The default grid needs |c| dx < 2 and a half-width of 20/mu, so its size grows
    like c^2; grids above max_points raise BudgetExceeded before allocation.
    """
    try:
        mu = mu_from_speed(c, p)
    except NoRoot as e:
        raise InadmissibleParameters(str(e)) from e
    outside = not is_admissible(p, mu)
    if outside and not probe:
        raise InadmissibleParameters(f"c={c} (mu={mu:.6g}) violates the constraint pair")
    env = build_envelope(p, mu, check=not outside)
    if grid is None:
        L = max(40.0, 20.0 / env.constants.mu)
        h = dx or default_dx(p, c, env.constants.C0)
        need = int(2 * L / h) + 1
        if need > max_points:
            raise BudgetExceeded(f"c={c:.6g} needs a grid of {need} points (> {max_points}); "
                                 "choose a slower speed or pass dx")
        grid = default_grid(p, c, env, dx)
    env = build_envelope(p, mu, grid=grid, check=not outside)
    u = env.sample(grid, "U_plus")
    hist, times = [], []
    sand = mono = 0.0
    for k in range(1, k_max + 1):
        run = relax(u, p, c, env, tol_inner, t_max=t_max, dt=dt)
        times.append(run.t)
        sand = max(sand, run.sandwich_violation)
        mono = max(mono, run.monotone_violation)
        diff = float(np.max(np.abs(run.U.values - u.values)))
        hist.append(diff)
        u = run.U
        if diff < tol_outer:
            break
    else:
        raise BudgetExceeded(f"Picard iteration did not converge in {k_max} steps",
                             last=u, history=hist)
    V = solve_field_ode(u, p.tau, c, decay=mu)
    return WaveProfile(
        U=u, V=V, c=c, mu=mu,
        residual_norm=stationary_residual(u, p, c, mu),
        left_state=left_state(u),
        decay_ratio=decay_ratio(u, mu),
        residual_tolerance=residual_tolerance(grid.dx, env.constants.C0),
        decay_rate=decay_rate(u),
        outer_iterations=k, history=hist, inner_times=times,
        sandwich_violation=sand, monotone_violation=mono,
        in_envelope=membership(u, env, tol=max(1e-10, 10 * tol_inner)),
        outside_theory=outside,
    )


def _window(n: int, window: float, exclude: int):
    i1 = n - exclude
    i0 = max(0, i1 - int(math.ceil(window * n)))
    return i0, i1


def decay_rate(U: Profile, window: float = 0.25, exclude: int = 5) -> float:
    """-slope of a least-squares fit of ln U over the rightmost window."""
    i0, i1 = _window(U.grid.n, window, exclude)
    v = U.values[i0:i1]
    if np.any(v <= 0):
        raise DomainError("decay fit needs U > 0 on the window")
    slope = np.polyfit(U.grid.x[i0:i1], np.log(v), 1)[0]
    return float(-slope)


def decay_ratio(U: Profile, mu: float, window: float = 0.25, exclude: int = 5) -> float:
    """Median of U e^{mu x} over the decay window."""
    i0, i1 = _window(U.grid.n, window, exclude)
    return float(np.median(U.values[i0:i1] * np.exp(mu * U.grid.x[i0:i1])))


def left_state(U: Profile, fraction: float = 0.1) -> float:
    """Median of U over the leftmost fraction of the grid."""
    m = max(3, int(fraction * U.grid.n))
    return float(np.median(U.values[:m]))


@dataclass(frozen=True)
class EvolutionState:
    u: Profile
    v: Profile
    t: float
    dt: float


@dataclass
class Trajectory:
    states: List[EvolutionState]
    times: np.ndarray
    sup_u: np.ndarray
    sup_v: np.ndarray
    params: ModelParams
    c: float

    def distance_to(self, level: float) -> np.ndarray:
        """|u - level|_inf + |v - level|_inf at recorded times."""
        return np.array([np.max(np.abs(s.u.values - level)) + np.max(np.abs(s.v.values - level))
                         for s in self.states])


def evolve_coupled(u0: Profile, p: ModelParams, c: float, t_end: float, dt: float = 0.05, *,
                   record_every: float = 1.0, blowup: float = 1e6) -> Trajectory:
    """Coupled evolution: v re-solved from u each step, then one implicit step in u.

    Neumann conditions for u and v at both ends.
    """
    if np.any(u0.values < 0):
        raise DomainError("u0 must be nonnegative")
    g = u0.grid
    u = np.array(u0.values)
    nsteps = int(math.ceil(t_end / dt - 1e-9))
    dt = t_end / nsteps if nsteps else dt
    every = max(1, int(round(record_every / dt))) if nsteps else 1
    states, times, su, sv = [], [], [], []

    def record(t, u, V):
        states.append(EvolutionState(Profile(g, u), V, t, dt))
        times.append(t)
        su.append(float(np.max(np.abs(u))))
        sv.append(float(np.max(np.abs(V.values))))

    V = solve_field_ode(Profile(g, u), p.tau, c)
    record(0.0, u, V)
    kappa = p.b - p.chi
    for k in range(1, nsteps + 1):
        Vp = field_derivative(V).values
        r = p.a - p.chi * (V.values - p.tau * c * Vp)
        h = _stable_dt(dt, r)
        sub = int(math.ceil(dt / h - 1e-9))
        al, au = advection_weights(c - p.chi * Vp, g.dx, "neumann", "neumann")
        u = kernels.implicit_steps(u, al, au, r, kappa, dt / sub, sub, False, 0.0, False, 0.0)
        sup = float(np.max(u))
        if not math.isfinite(sup) or sup > blowup:
            raise Divergence(f"|u| exceeded {blowup:g} at t={k * dt:.4g}", t=k * dt, sup=sup)
        V = solve_field_ode(Profile(g, u), p.tau, c)
        if k % every == 0 or k == nsteps:
            record(k * dt, u, V)
    return Trajectory(states, np.array(times), np.array(su), np.array(sv), p, c)


def front_position(u: Profile, level: float) -> float:
    """max{x : u(x) >= level}, linearly interpolated; nan if u < level everywhere."""
    v = u.values
    idx = np.nonzero(v >= level)[0]
    if idx.size == 0:
        return float("nan")
    i = idx[-1]
    x = u.grid.x
    if i == len(v) - 1:
        return float(x[-1])
    return float(x[i] + (v[i] - level) / (v[i] - v[i + 1]) * (x[i + 1] - x[i]))


def front_speed(traj: Trajectory, level: float = 1e-2, fraction: float = 0.5) -> float:
    """Least-squares slope of the level-set position over the last fraction of the window."""
    t = traj.times
    xf = np.array([front_position(s.u, level) for s in traj.states])
    sel = (t >= t[-1] - fraction * (t[-1] - t[0])) & np.isfinite(xf)
    if sel.sum() < 2:
        raise DomainError("not enough front positions to fit a speed")
    g = traj.states[0].u.grid
    if np.nanmax(xf[sel]) > g.x_max - 0.05 * (g.x_max - g.x_min):
        warnings.warn("front reached the right end of the domain; speed is truncated",
                      RuntimeWarning, stacklevel=2)
    return float(np.polyfit(t[sel], xf[sel], 1)[0])
