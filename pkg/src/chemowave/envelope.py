"""Sub/super-solution envelope for the frozen-field problem.

For an admissible wave number mu the envelope is

    U+ = min(C0, phi),  V+ = min(C0, phi/D),  U- = max(0, phi - d phi~),

with phi = exp(-mu x), phi~ = exp(-mu~ x).  The verifiers evaluate the
operator

    L U = U'' + (c - chi V') U' + (a - chi (V - tau c V') - (b - chi) U) U

on a grid (numeric route) and also the closed-form lower/upper bounds that
make each inequality hold (analytic route).  A verifier passes only when
both routes agree with the expected sign.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import DomainError, InadmissibleParameters
from .field import Grid, Profile, field_derivative, solve_field_ode
from .params import ModelParams, denominator, is_admissible, mu_max, wave_speed

_EXP_CAP = 700.0


def _exp(z):
    return np.exp(np.minimum(z, _EXP_CAP))


@dataclass(frozen=True)
class EnvelopeConstants:
    mu: float
    c: float
    D: float
    C0: float
    C_tilde0: float
    mu_tilde: float
    d: float
    d0: float
    A0: float
    A1: float
    A2: float
    a_lower: float
    a_upper: float
    delta: float
    x_delta: float


def c_tilde0(p: ModelParams, c: float) -> float:
    """a/(b - chi (1 + tau c/2))."""
    den = p.b - p.chi * (1 + p.tau * c / 2)
    if den <= 0:
        raise InadmissibleParameters("b <= chi (1 + tau c/2)")
    return p.a / den


def mu_tilde_bounds(p: ModelParams, mu: float) -> tuple:
    """Open interval (mu, upper) for the second exponent."""
    D = float(denominator(mu, p.a, p.tau))
    upper = min(mu_max(p.a, p.tau), 2 * mu, mu + 1.0 / (mu + math.sqrt(D)))
    return mu, upper


def _a_constants(p: ModelParams, mu: float, mu_t: float, c: float, D: float):
    chi, b = p.chi, p.b
    sD = math.sqrt(D)
    A0 = (mu_t - mu) * (p.a - mu * mu_t) / mu
    A1 = chi * ((p.tau * c + mu) / sD + mu * (p.tau * c + mu) / D) + chi / D + (b - chi)
    A2 = (b - chi) + chi / D - chi * ((p.tau * c + mu_t) / sD + mu * (p.tau * c + mu_t) / D)
    return A0, A1, A2


@dataclass(frozen=True)
class Envelope:
    """Envelope functions and constants for (p, mu)."""

    params: ModelParams
    constants: EnvelopeConstants

    def phi(self, x):
        return _exp(-self.constants.mu * np.asarray(x, dtype=float))

    def phi_tilde(self, x):
        return _exp(-self.constants.mu_tilde * np.asarray(x, dtype=float))

    def U_plus(self, x):
        return np.minimum(self.constants.C0, self.phi(x))

    def V_plus(self, x):
        return np.minimum(self.constants.C0, self.phi(x) / self.constants.D)

    def U_minus(self, x):
        x = np.asarray(x, dtype=float)
        k = self.constants
        # written as phi (1 - d exp(-(mu~ - mu) x)) to avoid overflow on the left
        w = 1.0 - k.d * _exp(-(k.mu_tilde - k.mu) * x)
        return np.where(x > k.a_lower, np.maximum(self.phi(x) * w, 0.0), 0.0)

    def U_minus_at(self, x: float) -> float:
        return float(self.U_minus(np.array([x]))[0])

    def U_minus_delta(self, x):
        x = np.asarray(x, dtype=float)
        k = self.constants
        return np.where(x <= k.x_delta, self.U_minus_at(k.x_delta), self.U_minus(x))

    def sample(self, grid: Grid, name: str) -> Profile:
        f = {"phi": self.phi, "U_plus": self.U_plus, "V_plus": self.V_plus,
             "U_minus": self.U_minus, "U_minus_delta": self.U_minus_delta}[name]
        return Profile(grid, f(grid.x))

    def default_grid(self, dx: float = 0.05) -> Grid:
        L = max(40.0, 20.0 / self.constants.mu)
        return Grid.with_spacing(-L, L, dx)

    def with_delta(self, delta: float) -> "Envelope":
        k = self.constants
        return Envelope(self.params, replace(k, delta=delta, x_delta=k.a_lower + delta))


def build_envelope(p: ModelParams, mu: float, C0_opt: Optional[float] = None, *,
                   grid: Optional[Grid] = None, delta: Optional[float] = None,
                   d: Optional[float] = None, mu_tilde: Optional[float] = None,
                   check: bool = True) -> Envelope:
    """Envelope constants for an admissible (p, mu).

    C0 = max(C0_opt, C~0); mu~ is the midpoint of its admissible interval;
    d = max(d0, 1 + 1e-6) (1 + 1e-3) unless given (must be >= d0);
    delta defaults to the grid spacing (0.01 without a grid).
    """
    if mu <= 0:
        raise DomainError("mu must be positive")
    if check and not is_admissible(p, mu):
        raise InadmissibleParameters(f"(chi={p.chi}, mu={mu}) violates the constraint pair")
    c = wave_speed(mu, p.a)
    D = float(denominator(mu, p.a, p.tau))
    if D <= 0:
        raise InadmissibleParameters("D(mu) <= 0")
    Ct0 = c_tilde0(p, c)
    C0 = Ct0 if C0_opt is None else max(float(C0_opt), Ct0)
    lo, hi = mu_tilde_bounds(p, mu)
    if not hi > lo:
        raise InadmissibleParameters("empty interval for the second exponent")
    mu_t = 0.5 * (lo + hi) if mu_tilde is None else float(mu_tilde)
    if not lo < mu_t < hi:
        raise InadmissibleParameters(f"mu~={mu_t} outside ({lo}, {hi})")
    A0, A1, A2 = _a_constants(p, mu, mu_t, c, D)
    d0 = max(1.0, A1 / A0, C0 ** ((mu - mu_t) / mu))
    if d is None:
        d = max(d0, 1 + 1e-6) * (1 + 1e-3)
    elif d < d0:
        raise InadmissibleParameters(f"d={d} below d0={d0}")
    a_lo = math.log(d) / (mu_t - mu)
    a_up = (math.log(d * mu_t) - math.log(mu)) / (mu_t - mu)
    if delta is None:
        delta = grid.dx if grid is not None else 0.01
    k = EnvelopeConstants(mu=mu, c=c, D=D, C0=C0, C_tilde0=Ct0, mu_tilde=mu_t, d=d, d0=d0,
                          A0=A0, A1=A1, A2=A2, a_lower=a_lo, a_upper=a_up,
                          delta=float(delta), x_delta=a_lo + float(delta))
    return Envelope(p, k)


def residual_tolerance(dx: float, C0: float) -> float:
    """50 dx^2 (1 + C0^2)."""
    return 50.0 * dx * dx * (1.0 + C0 * C0)


def _d1(U, h, order):
    d = np.empty_like(U)
    if order == 4:
        d[2:-2] = (-U[4:] + 8 * U[3:-1] - 8 * U[1:-3] + U[:-4]) / (12 * h)
        d[1] = (U[2] - U[0]) / (2 * h)
        d[-2] = (U[-1] - U[-3]) / (2 * h)
    else:
        d[1:-1] = (U[2:] - U[:-2]) / (2 * h)
    d[0] = (-3 * U[0] + 4 * U[1] - U[2]) / (2 * h)
    d[-1] = (3 * U[-1] - 4 * U[-2] + U[-3]) / (2 * h)
    return d


def _d2(U, h, order):
    d = np.empty_like(U)
    if order == 4:
        d[2:-2] = (-U[4:] + 16 * U[3:-1] - 30 * U[2:-2] + 16 * U[1:-3] - U[:-4]) / (12 * h * h)
        d[1] = (U[2] - 2 * U[1] + U[0]) / (h * h)
        d[-2] = (U[-1] - 2 * U[-2] + U[-3]) / (h * h)
    else:
        d[1:-1] = (U[2:] - 2 * U[1:-1] + U[:-2]) / (h * h)
    d[0] = (2 * U[0] - 5 * U[1] + 4 * U[2] - U[3]) / (h * h)
    d[-1] = (2 * U[-1] - 5 * U[-2] + 4 * U[-3] - U[-4]) / (h * h)
    return d


def field_of(u_field: Profile, p: ModelParams, c: float, decay: Optional[float] = None,
             left_rate: float = 0.0):
    """(V, V') for the frozen field."""
    V = solve_field_ode(u_field, p.tau, c, decay=decay, left_rate=left_rate)
    return V, field_derivative(V)


def residual(U: Profile, u_field: Profile, p: ModelParams, c: float, *,
             field=None, decay: Optional[float] = None, order: int = 2) -> Profile:
    """Sampled L U with V, V' from u_field.

    order=2 uses centered second-order stencils, order=4 fourth-order ones
    (used to measure the discretisation error of second-order solutions).
    ``field`` may carry a precomputed (V, V') pair.
    """
    if U.grid != u_field.grid:
        raise DomainError("U and u_field must share a grid")
    if order not in (2, 4):
        raise DomainError("order must be 2 or 4")
    V, Vp = field if field is not None else field_of(u_field, p, c, decay)
    h = U.grid.dx
    u = U.values
    v, vp = V.values, Vp.values
    out = (_d2(u, h, order) + (c - p.chi * vp) * _d1(u, h, order)
           + (p.a - p.chi * (v - p.tau * c * vp) - (p.b - p.chi) * u) * u)
    return Profile(U.grid, out)


@dataclass(frozen=True)
class VerifierReport:
    name: str
    numeric: float          # max residual (super) or min residual (sub) on the region
    analytic: float         # extreme of the closed-form bound on the region
    tolerance: float
    passed_numeric: bool
    passed_analytic: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.passed_numeric and self.passed_analytic


def _field_for(env: Envelope, u_field: Profile, p: ModelParams, field_pair):
    if field_pair is not None:
        return field_pair
    return field_of(u_field, p, env.constants.c, decay=env.constants.mu)


def verify_super_constant(env: Envelope, u_field: Profile, p: Optional[ModelParams] = None,
                          field=None) -> VerifierReport:
    """L(C0) <= 0: numeric residual, and (a - (b - chi(1 + tau c/2)) C0) C0 <= 0."""
    p = p or env.params
    k = env.constants
    g = u_field.grid
    Vpair = _field_for(env, u_field, p, field)
    C = Profile(g, np.full(g.n, k.C0))
    r = residual(C, u_field, p, k.c, field=Vpair).values
    tol = residual_tolerance(g.dx, k.C0)
    bound = (p.a - (p.b - p.chi * (1 + p.tau * k.c / 2)) * k.C0) * k.C0
    num = float(r.max())
    # bound is exactly zero at C0 = C~0; allow round-off only
    return VerifierReport("super_constant", num, float(bound), tol,
                          num <= tol, bound <= 1e-12 * (1 + k.C0**2), {"C0": k.C0})


def verify_super_phi(env: Envelope, u_field: Profile, p: Optional[ModelParams] = None,
                     field=None) -> VerifierReport:
    """L(phi) <= 0: numeric residual, and chi (G2 - (b - chi)/chi) phi^2 <= 0."""
    p = p or env.params
    k = env.constants
    g = u_field.grid
    Vpair = _field_for(env, u_field, p, field)
    ph = env.sample(g, "phi")
    r = residual(ph, u_field, p, k.c, field=Vpair).values
    tol = residual_tolerance(g.dx, k.C0)
    s = k.mu + p.tau * k.c
    G2 = s / math.sqrt(k.D) + k.mu * s / k.D
    coef = p.chi * G2 - (p.b - p.chi)
    bound = coef * ph.values ** 2
    num = float(r[1:-1].max())
    return VerifierReport("super_phi", num, float(bound.max()), tol,
                          num <= tol, coef <= 0.0, {"coefficient": coef, "G2": G2})


def verify_sub(env: Envelope, u_field: Profile, p: Optional[ModelParams] = None,
               field=None) -> VerifierReport:
    """L(U-) >= 0 on (a_lower + 2 dx, x_max].

    Analytic bound: A1 [(d A0/A1) e^{(2 mu - mu~) x} - 1] phi^2 + d A2 phi phi~.
    """
    p = p or env.params
    k = env.constants
    g = u_field.grid
    Vpair = _field_for(env, u_field, p, field)
    Um = env.sample(g, "U_minus")
    r = residual(Um, u_field, p, k.c, field=Vpair).values
    tol = residual_tolerance(g.dx, k.C0)
    region = g.x > k.a_lower + 2 * g.dx
    region[0] = False
    A0, A1, A2 = _a_constants(p, k.mu, k.mu_tilde, k.c, k.D)
    x = g.x[region]
    ph, pt = env.phi(x), env.phi_tilde(x)
    bound = A1 * ((k.d * A0 / A1) * np.exp((2 * k.mu - k.mu_tilde) * x) - 1) * ph**2 \
        + k.d * A2 * ph * pt
    num = float(r[region].min()) if region.any() else 0.0
    ana = float(bound.min()) if region.any() else 0.0
    ok_ana = ana >= 0.0 and A2 >= 0.0 and A1 > 0.0
    return VerifierReport("sub", num, ana, tol, num >= -tol, ok_ana,
                          {"A0": A0, "A1": A1, "A2": A2, "d": k.d, "d0": k.d0})


def verify_sub_shifted(env: Envelope, u_field: Profile, p: Optional[ModelParams] = None,
                       field=None) -> VerifierReport:
    """Constant m = U-(x_delta) is a sub-solution: reaction term >= 0 everywhere.

    Analytic: a - chi (1 + tau c/2) C~0 - (b - chi) m > 0, where the first
    part equals a (b - 2 chi (1 + tau c/2)) / (b - chi (1 + tau c/2)).
    """
    p = p or env.params
    k = env.constants
    g = u_field.grid
    V, Vp = _field_for(env, u_field, p, field)
    m = env.U_minus_at(k.x_delta)
    react = (p.a - p.chi * (V.values - p.tau * k.c * Vp.values) - (p.b - p.chi) * m) * m
    tol = residual_tolerance(g.dx, k.C0)
    half = 1 + p.tau * k.c / 2
    scalar = p.a - p.chi * half * k.C_tilde0
    closed = p.a * (p.b - 2 * p.chi * half) / (p.b - p.chi * half)
    printed = p.a * (p.b - 2 * p.chi * half) / (p.b - p.chi * (1 + p.tau * k.c))
    ana = scalar - (p.b - p.chi) * m
    details = {"m": m, "scalar": scalar, "closed_form": closed, "printed_form": printed,
               "C0_is_C_tilde0": k.C0 == k.C_tilde0, "delta_ok": k.delta <= 4 * g.dx}
    return VerifierReport("sub_shifted", float(react.min()), float(ana), tol,
                          float(react.min()) >= -tol, ana > 0.0, details)


def verify_all(env: Envelope, u_field: Profile, p: Optional[ModelParams] = None) -> list:
    """All four verifiers sharing one field solve."""
    p = p or env.params
    pair = field_of(u_field, p, env.constants.c, decay=env.constants.mu)
    return [f(env, u_field, p, field=pair) for f in
            (verify_super_constant, verify_super_phi, verify_sub, verify_sub_shifted)]


def membership(u: Profile, env: Envelope, tol: float = 1e-10) -> bool:
    """U- - tol <= u <= U+ + tol pointwise."""
    x = u.grid.x
    v = u.values
    return bool(np.all(v >= env.U_minus(x) - tol) and np.all(v <= env.U_plus(x) + tol))
