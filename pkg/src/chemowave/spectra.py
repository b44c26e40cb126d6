"""Principal eigenvalues of phi'' + (c + b1) phi' + (a + b2) phi on (0, L).

Boundary kinds: "DD" (Dirichlet at both ends) and "ND" (Neumann at 0,
Dirichlet at L).  The finite-difference matrix has nonnegative
off-diagonals when |c + b1| h/2 < 1, so its principal eigenvalue is simple
with a positive eigenvector.  It is computed by shifted inverse iteration
whose shift is the Collatz-Wielandt upper bound max (A x)_i / x_i; the
matching lower bound min (A x)_i / x_i brackets the eigenvalue at every
step.  An independent route fits the growth rate of ln |u(t)| for
u_t = A u.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from . import kernels
from .errors import BudgetExceeded, DomainError, NoConstruction, NotApplicable
from .field import Grid, Profile, field_derivative


def dirichlet_length(a: float, c: float, lambda0: float) -> float:
    """L with principal Dirichlet eigenvalue lambda0: L = 2 pi / sqrt(4a - 4 lambda0 - c^2)."""
    if c < 0:
        raise NoConstruction("the Dirichlet construction needs c >= 0")
    disc = c * c - 4 * a + 4 * lambda0
    if disc >= 0:
        raise NoConstruction("needs c^2 - 4a + 4 lambda0 < 0")
    return 2 * math.pi / math.sqrt(-disc)


def dirichlet_eigenfunction(a: float, c: float, lambda0: float):
    L = dirichlet_length(a, c, lambda0)
    return lambda x: np.exp(-c * np.asarray(x) / 2) * np.sin(math.pi * np.asarray(x) / L)


def _nd_roots(a, c, lambda0):
    if not c < 0:
        raise NoConstruction("the Neumann-Dirichlet construction needs c < 0")
    if not 0 < lambda0 < a:
        raise NoConstruction("needs 0 < lambda0 < a")
    delta = c * c - 4 * a + 4 * lambda0
    if delta <= 0:
        raise NoConstruction("needs 4a - 4 lambda0 < c^2")
    s = math.sqrt(delta)
    return (-c + s) / 2, (-c - s) / 2, s


def neumann_dirichlet_length(a: float, c: float, lambda0: float) -> float:
    """L = ln((-c + sqrt D)/(-c - sqrt D))/sqrt D with D = c^2 - 4a + 4 lambda0."""
    r1, r2, s = _nd_roots(a, c, lambda0)
    return math.log(r1 / r2) / s


def neumann_dirichlet_eigenfunction(a: float, c: float, lambda0: float):
    """phi(x) = -e^{r1 x} + (r1/r2) e^{r2 x}: phi'(0) = 0, phi(L) = 0."""
    r1, r2, _ = _nd_roots(a, c, lambda0)
    return lambda x: -np.exp(r1 * np.asarray(x)) + (r1 / r2) * np.exp(r2 * np.asarray(x))


@dataclass(frozen=True)
class EigenProblem:
    """phi'' + (c + b1) phi' + (a + b2) phi = lambda phi on (0, L).

    b1, b2: None, a scalar, a callable of x, or samples on a uniform grid of [0, L].
    """

    a: float
    c: float
    L: float
    bc: str = "DD"
    b1: object = None
    b2: object = None

    def __post_init__(self):
        if not self.L > 0:
            raise DomainError("L must be positive")
        if self.bc not in ("DD", "ND"):
            raise DomainError("bc must be 'DD' or 'ND'")
        for b in (self.b1, self.b2):
            if isinstance(b, np.ndarray) and not np.all(np.isfinite(b)):
                raise DomainError("perturbation coefficients must be finite")

    def coefficient(self, which: str, x: np.ndarray) -> np.ndarray:
        b = getattr(self, which)
        if b is None:
            return np.zeros_like(x)
        if callable(b):
            return np.asarray(b(x), dtype=float) * np.ones_like(x)
        b = np.asarray(b, dtype=float)
        if b.ndim == 0:
            return np.full_like(x, float(b))
        return np.interp(x, np.linspace(0.0, self.L, len(b)), b)


def _matrix(prob: EigenProblem, n: int):
    """Tridiagonal (lo, di, up) on the unknown nodes and the full grid."""
    g = Grid(0.0, prob.L, n)
    h = g.dx
    x = g.x
    beta = prob.c + prob.coefficient("b1", x)
    q = prob.a + prob.coefficient("b2", x)
    first = 0 if prob.bc == "ND" else 1
    idx = np.arange(first, n - 1)
    lo = 1 / h**2 - beta[idx] / (2 * h)
    up = 1 / h**2 + beta[idx] / (2 * h)
    di = -2 / h**2 + q[idx]
    if prob.bc == "ND":
        lo[0] = 0.0
        up[0] = 2 / h**2
    lo[0] = 0.0
    up[-1] = 0.0
    if np.any(lo[1:] <= 0) or np.any(up[:-1] <= 0):
        raise DomainError("grid too coarse: |c + b1| h / 2 must be below 1")
    return g, idx, lo, di, up


def _matvec(lo, di, up, v):
    y = di * v
    y[1:] += lo[1:] * v[:-1]
    y[:-1] += up[:-1] * v[1:]
    return y


@dataclass
class EigenResult:
    lam: float
    phi: Profile
    bracket: tuple
    iterations: int
    positive: bool
    growth_rate: Optional[float] = None
    cross_check_gap: Optional[float] = None
    notes: list = field(default_factory=list)

    def __iter__(self):
        yield self.lam
        yield self.phi


def principal_eigen(prob: EigenProblem, n: int = 2000, *, tol: float = 1e-10,
                    max_iter: int = 500, cross_check: bool = True,
                    cross_tol: float = 1e-4) -> EigenResult:
    """Principal eigenpair by Collatz-Wielandt shifted inverse iteration."""
    if n < 50:
        raise DomainError("n must be at least 50")
    g, idx, lo, di, up = _matrix(prob, n)
    m = len(idx)
    s = np.linspace(0, 1, m + 2)[1:-1] if prob.bc == "DD" else np.linspace(0, 1, m + 1)[:-1]
    v = np.sin(math.pi * s) if prob.bc == "DD" else np.cos(0.5 * math.pi * s)
    v = v / v.max()
    lo_b = hi_b = float("nan")
    best, stall = math.inf, 0
    for it in range(1, max_iter + 1):
        ratio = _matvec(lo, di, up, v) / v
        lo_b, hi_b = float(ratio.min()), float(ratio.max())
        width = hi_b - lo_b
        if width <= tol * max(1.0, abs(hi_b)):
            break
        # round-off floor of the ratios: stop once the bracket stops shrinking
        stall = stall + 1 if width > 0.5 * best else 0
        best = min(best, width)
        if stall >= 5 and width <= 1e3 * tol * max(1.0, abs(hi_b)):
            break
        sigma = hi_b + 1e-14 * max(1.0, abs(hi_b))
        w = kernels.thomas(-lo, sigma - di, -up, v)
        if not np.all(w > 0):
            w = np.abs(w)  # only round-off can produce a sign change here
        v = w / w.max()
    else:
        raise BudgetExceeded(f"eigen iteration did not converge (bracket {lo_b}, {hi_b})",
                             last=v)
    lam = 0.5 * (lo_b + hi_b)
    full = np.zeros(n)
    full[idx] = v
    full /= full.max()
    positive = bool(np.all(v > 0))
    res = EigenResult(lam, Profile(g, full), (lo_b, hi_b), it, positive)
    if not positive:
        warnings.warn("eigenvector changes sign: principal eigenvalue may not be simple",
                      RuntimeWarning, stacklevel=2)
    if cross_check:
        gr = growth_rate(prob, n)
        res.growth_rate = gr
        res.cross_check_gap = abs(gr - lam)
        if res.cross_check_gap > cross_tol:
            res.notes.append(f"growth-rate cross-check off by {res.cross_check_gap:.3g}")
    return res


def growth_rate(prob: EigenProblem, n: int = 2000, t_end: Optional[float] = None) -> float:
    """Slope of ln |u(t)|_2 for u_t = A u, u(0) = 1, over [t_end/2, t_end]."""
    g, idx, lo, di, up = _matrix(prob, n)
    m = len(idx)
    A = sparse.diags([lo[1:], di, up[:-1]], [-1, 0, 1], format="csc")
    if t_end is None:
        gap = (3.0 if prob.bc == "DD" else 2.0) * math.pi**2 / prob.L**2
        t_end = min(400.0, 36.0 / gap)
    sol = solve_ivp(lambda t, u: A @ u, (0.0, t_end), np.ones(m), method="BDF",
                    jac=A, t_eval=[0.5 * t_end, t_end], rtol=1e-9, atol=1e-300)
    if not sol.success:
        raise BudgetExceeded(f"growth-rate integration failed: {sol.message}")
    n1, n2 = (np.linalg.norm(sol.y[:, k]) for k in range(2))
    return float((math.log(n2) - math.log(n1)) / (0.5 * t_end))


def test_function_bound(prob: EigenProblem, phi: np.ndarray, n: Optional[int] = None) -> float:
    """Collatz-Wielandt bound max (A phi)_i / phi_i over unknown nodes (phi > 0 there).

    phi sampled on Grid(0, L, n) including the end points.
    """
    n = len(phi) if n is None else n
    g, idx, lo, di, up = _matrix(prob, n)
    full = np.asarray(phi, dtype=float)
    v = full[idx]
    if np.any(v <= 0):
        return float("inf")
    y = _matvec(lo, di, up, v)
    # boundary values enter through the dropped neighbours
    h = g.dx
    x = g.x
    beta = prob.c + prob.coefficient("b1", x)
    if prob.bc == "DD":
        y[0] += (1 / h**2 - beta[1] / (2 * h)) * full[0]
    y[-1] += (1 / h**2 + beta[n - 2] / (2 * h)) * full[-1]
    return float(np.max(y / v))


@dataclass
class CertificateEntry:
    eps: float
    x_eps: float
    window: tuple
    lambda_eps: float
    bracket: tuple
    premise_positive: bool
    premise_boundary: bool
    claim_residual: float
    cw_bound: float
    perturbation_size: float

    @property
    def contradiction(self) -> bool:
        """Claim implies lambda_eps <= 0 (premises hold) while lambda_eps > 0."""
        return self.lambda_eps > 0 and self.premise_positive and self.premise_boundary


@dataclass
class Certificate:
    applicable: bool
    route: str
    c: float
    lambda0: float = float("nan")
    L: float = float("nan")
    lambda_unperturbed: float = float("nan")
    entries: list = field(default_factory=list)
    inconclusive: list = field(default_factory=list)
    reason: str = ""

    @property
    def contradiction(self) -> bool:
        return self.applicable and bool(self.entries) and not self.inconclusive and \
            all(e.contradiction for e in self.entries)


def nonexistence_certificate(W, p, eps=(1e-2, 1e-3), n: int = 2001) -> Certificate:
    """Run the principal-eigenvalue contradiction against a claimed wave W.

    W needs attributes U, V (Profiles on a common grid) and c.
    """
    c = float(W.c)
    a = p.a
    if c >= 2 * math.sqrt(a):
        return Certificate(False, "none", c, reason="c >= 2 sqrt(a): certificate not applicable")
    if c >= 0:
        route = "DD"
        lam0 = (a - c * c / 4) / 2
        L = dirichlet_length(a, c, lam0)
    else:
        route = "ND"
        lam0 = 0.5 * (max(0.0, a - c * c / 4) + a)
        L = neumann_dirichlet_length(a, c, lam0)
    base = principal_eigen(EigenProblem(a, c, L, route), n, cross_check=False)
    cert = Certificate(True, route, c, lam0, L, base.lam)
    U, V = W.U, W.V
    Vp = field_derivative(V)
    x = U.grid.x
    Ux = np.gradient(U.values, x)
    size = np.maximum.reduce([np.abs(U.values), np.abs(V.values), np.abs(Vp.values)])
    for e in eps:
        big = np.nonzero(size >= e)[0]
        if big.size == 0:
            cert.inconclusive.append((e, "profile below eps everywhere"))
            continue
        i = big[-1] + 1
        if i >= len(x):
            cert.inconclusive.append((e, "profile does not decay below eps within the domain"))
            continue
        x0 = x[i]
        if route == "ND":
            j = i + np.argmax(Ux[i:] < 0)
            if not Ux[j] < 0:
                cert.inconclusive.append((e, "no point with U' < 0 beyond x_eps"))
                continue
            x0 = x[j]
        if x0 + L > x[-1]:
            cert.inconclusive.append((e, "window [x_eps, x_eps + L] leaves the domain"))
            continue
        xs = np.linspace(x0, x0 + L, n)
        Ui = np.interp(xs, x, U.values)
        Vi = np.interp(xs, x, V.values)
        Vpi = np.interp(xs, x, Vp.values)
        b1 = -p.chi * Vpi
        b2 = -p.chi * (Vi - p.tau * c * Vpi) - (p.b - p.chi) * Ui
        prob = EigenProblem(a, c, L, route, b1, b2)
        res = principal_eigen(prob, n, cross_check=False)
        # claimed wave: U solves the perturbed equation on the window
        h = L / (n - 1)
        Uxx = (Ui[2:] - 2 * Ui[1:-1] + Ui[:-2]) / h**2
        Uxi = (Ui[2:] - Ui[:-2]) / (2 * h)
        resid = Uxx + (c + b1[1:-1]) * Uxi + (a + b2[1:-1]) * Ui[1:-1]
        pos = bool(np.all(Ui[1:-1] > 0))
        if route == "DD":
            bnd = bool(Ui[0] >= 0 and Ui[-1] >= 0)
        else:
            bnd = bool(np.interp(x0, x, Ux) <= 0 and Ui[-1] >= 0)
        cert.entries.append(CertificateEntry(
            eps=e, x_eps=float(x[i]), window=(float(x0), float(x0 + L)),
            lambda_eps=res.lam, bracket=res.bracket, premise_positive=pos,
            premise_boundary=bnd, claim_residual=float(np.max(np.abs(resid / Ui[1:-1]))),
            cw_bound=test_function_bound(prob, Ui),
            perturbation_size=float(max(np.abs(b1).max(), np.abs(b2).max()))))
    return cert
