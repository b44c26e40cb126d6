"""Elliptic chemical field v'' + tau c v' - v = -u on a truncated line.

Two independent routes: a tridiagonal finite-difference solve and direct
quadrature of the heat-kernel representation

    V(x) = int_0^inf e^{-s} (4 pi s)^{-1/2} int exp(-(x-z)^2/4s) u(z + tau c s) dz ds.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial.laguerre import laggauss
from scipy.signal import fftconvolve

from . import kernels
from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform grid of n points on [x_min, x_max]."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise DomainError("grid needs n >= 3")
        if not self.x_max > self.x_min:
            raise DomainError("grid needs x_max > x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.x_min, self.x_max, self.n)
        x.flags.writeable = False
        return x

    @classmethod
    def with_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        n = int(math.ceil((x_max - x_min) / dx - 1e-9)) + 1
        return cls(x_min, x_max, max(n, 3))

    def refined(self) -> "Grid":
        """Same interval, half the spacing."""
        return Grid(self.x_min, self.x_max, 2 * self.n - 1)


class Profile:
    """Immutable samples of a function on a Grid."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        v = np.array(values, dtype=float)
        if v.shape != (grid.n,):
            raise DomainError(f"profile length {v.shape} does not match grid n={grid.n}")
        if not np.all(np.isfinite(v)):
            raise DomainError("profile values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", v)

    def __setattr__(self, name, value):
        raise AttributeError("Profile is immutable")

    @classmethod
    def from_function(cls, grid: Grid, f) -> "Profile":
        return cls(grid, f(grid.x))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"Profile(n={self.grid.n}, [{self.grid.x_min}, {self.grid.x_max}])"


def _field_matrix(grid: Grid, tau: float, c: float, left_rate: float, right_rate: float):
    n, h = grid.n, grid.dx
    k = tau * c
    lo = np.full(n, -1.0 / h**2 + k / (2 * h))
    up = np.full(n, -1.0 / h**2 - k / (2 * h))
    di = np.full(n, 2.0 / h**2 + 1.0)
    # ghost-point Robin closures v' = g v
    di[0] = 2.0 / h**2 + 2.0 * left_rate / h - k * left_rate + 1.0
    up[0] = -2.0 / h**2
    lo[0] = 0.0
    di[-1] = 2.0 / h**2 - 2.0 * right_rate / h - k * right_rate + 1.0
    lo[-1] = -2.0 / h**2
    up[-1] = 0.0
    return lo, di, up


def solve_field_ode(u: Profile, tau: float, c: float, decay: Optional[float] = None,
                    left_rate: float = 0.0) -> Profile:
    """Second-order centered solve of v'' + tau c v' - v = -u.

    Closures: v' = left_rate * v at x_min (0 gives Neumann) and
    v' = -decay * v at x_max when ``decay`` is given, else Neumann.
    """
    right_rate = 0.0 if decay is None else -float(decay)
    lo, di, up = _field_matrix(u.grid, tau, c, left_rate, right_rate)
    v = kernels.thomas(lo, di, up, u.values)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("field solve produced non-finite values")
    return Profile(u.grid, v)


def solve_field_kernel(u: Profile, tau: float, c: float, s_max: float = 40.0,
                       quad_n: int = 64, tol: float = 1e-12) -> Profile:
    """Quadrature of the kernel representation of V.

    Gauss-Laguerre in s (nodes beyond s_max dropped), trapezoid in z on the
    grid nodes over +-10 sqrt(s) around the shifted centre, u continued by
    its end values.  Nodes whose Gaussian width is below two cells use the
    substitution z = x + 2 sqrt(s) y with linear interpolation instead.
    """
    g = u.grid
    h = g.dx
    if math.exp(-s_max) > tol:
        warnings.warn(f"quadrature horizon s_max={s_max} leaves tail e^-s_max > {tol}",
                      RuntimeWarning, stacklevel=2)
    s_nodes, w_nodes = laggauss(quad_n)
    keep = s_nodes <= s_max
    s_nodes, w_nodes = s_nodes[keep], w_nodes[keep]
    shift_max = abs(tau * c) * float(s_nodes.max())
    half = 10.0 * math.sqrt(float(s_nodes.max()))
    pad = int(math.ceil((half + shift_max) / h)) + 2
    u_ext = np.concatenate([np.full(pad, u.values[0]), u.values, np.full(pad, u.values[-1])])
    x_ext = g.x_min + h * np.arange(-pad, g.n + pad)
    y, hy = np.linspace(-6.0, 6.0, 241, retstep=True)
    wy = hy * np.exp(-y * y) / math.sqrt(math.pi)
    wy[[0, -1]] *= 0.5
    V = np.zeros(g.n)
    for s, w in zip(s_nodes, w_nodes):
        xs = g.x + tau * c * s
        if math.sqrt(2 * s) < 2 * h:
            pts = xs[:, None] + 2.0 * math.sqrt(s) * y[None, :]
            V += w * (np.interp(pts, x_ext, u_ext) @ wy)
            continue
        # shifted Gaussian sampled on the grid: trapezoid in z without interpolation
        m = int(math.ceil((10.0 * math.sqrt(s) + abs(tau * c * s)) / h))
        z = h * np.arange(-m, m + 1) + tau * c * s
        ker = h * np.exp(-z * z / (4 * s)) / math.sqrt(4 * math.pi * s)
        conv = fftconvolve(u_ext, ker, mode="same")
        V += w * conv[pad:pad + g.n]
    return Profile(g, V)


def kernel_mass(s_max: float = 40.0, quad_n: int = 64, dx: float = 0.05) -> float:
    """Quadrature of the kernel applied to u = 1 (should be 1)."""
    g = Grid(-5.0, 5.0, int(round(10 / dx)) + 1)
    V = solve_field_kernel(Profile(g, np.ones(g.n)), 0.0, 0.0, s_max, quad_n, tol=1.0)
    return float(V.values[g.n // 2])


def field_derivative(V: Profile) -> Profile:
    """V' by fourth-order centered differences, lower order near the ends."""
    v = V.values
    h = V.grid.dx
    d = np.empty_like(v)
    d[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    d[1] = (v[2] - v[0]) / (2 * h)
    d[-2] = (v[-1] - v[-3]) / (2 * h)
    d[0] = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    d[-1] = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return Profile(V.grid, d)


@dataclass(frozen=True)
class FieldBoundsReport:
    v_negative: float
    v_above_vplus: float
    vp_above_bound: float
    v_sup_excess: float
    vp_sup_excess: float
    tolerance: float

    @property
    def max_violation(self) -> float:
        return max(self.v_negative, self.v_above_vplus, self.vp_above_bound,
                   self.v_sup_excess, self.vp_sup_excess)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def verify_field_bounds(u: Profile, V: Profile, Vp: Profile, env) -> FieldBoundsReport:
    """Check 0 <= V <= V+, |V'| <= (1/sqrt D + mu/D) phi and sup bounds."""
    x = u.grid.x
    k = env.constants
    vplus = env.V_plus(x)
    vp_bound = (1.0 / math.sqrt(k.D) + k.mu / k.D) * env.phi(x)
    usup = u.sup()
    tol = 10 * u.grid.dx**2 + 1e-8
    return FieldBoundsReport(
        v_negative=float(max(0.0, -V.values.min())),
        v_above_vplus=float(max(0.0, np.max(V.values - vplus))),
        vp_above_bound=float(max(0.0, np.max(np.abs(Vp.values) - vp_bound))),
        v_sup_excess=float(max(0.0, V.sup() - usup)),
        vp_sup_excess=float(max(0.0, Vp.sup() - usup)),
        tolerance=tol,
    )
