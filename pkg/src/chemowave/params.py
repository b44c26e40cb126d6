"""Model parameters, dispersion relation and the admissible speed window.

Everything here is a pure function of scalar inputs.  The wave number
``mu`` parametrises the tail exp(-mu x) of a front moving with speed
``c_mu = mu + a/mu``; admissibility of ``mu`` is decided by two
quantities G1, G2 compared against (b - chi)/chi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import DomainError, NoRoot, NotApplicable, WindowUndefined


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (a, b, chi, tau) of the chemotaxis system."""

    a: float
    b: float
    chi: float
    tau: float

    def __post_init__(self):
        for name in ("a", "b", "chi", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v}")
        if self.a <= 0 or self.b <= 0:
            raise DomainError("a and b must be positive")
        if self.chi < 0 or self.tau < 0:
            raise DomainError("chi and tau must be non-negative")

    @property
    def rhs(self) -> float:
        """(b - chi)/chi, the admissibility level (inf when chi = 0)."""
        return math.inf if self.chi == 0 else (self.b - self.chi) / self.chi

    @property
    def steady_state(self) -> float:
        return self.a / self.b

    def bounded_regime(self, c: float) -> bool:
        """Global bound hypothesis: 0 <= chi tau c / 2 < b - chi."""
        s = self.chi * self.tau * c / 2
        return 0 <= s < self.b - self.chi

    def stable_regime(self, c: float) -> bool:
        """Stability hypothesis: 0 <= chi tau c < b - 2 chi."""
        s = self.chi * self.tau * c
        return 0 <= s < self.b - 2 * self.chi

    def uniform_bound(self, c: float, u0_sup: float) -> float:
        """max(|u0|, a/(b - chi - chi c tau/2)); requires bounded_regime."""
        if not self.bounded_regime(c):
            raise NotApplicable("bound hypothesis chi tau c/2 < b - chi fails")
        return max(u0_sup, self.a / (self.b - self.chi - self.chi * c * self.tau / 2))


def wave_speed(mu, a):
    """Dispersion relation c_mu = mu + a/mu (vectorised in mu)."""
    mu = np.asarray(mu, dtype=float)
    if a <= 0 or np.any(mu <= 0):
        raise DomainError("wave_speed needs mu > 0 and a > 0")
    out = mu + a / mu
    return float(out) if out.ndim == 0 else out


def mu_max(a: float, tau: float) -> float:
    """min(sqrt(a), sqrt((1 + tau a)/(1 - tau)_+)); the quotient is inf for tau >= 1."""
    if a <= 0 or tau < 0:
        raise DomainError("mu_max needs a > 0 and tau >= 0")
    pos = max(1.0 - tau, 0.0)
    q = math.inf if pos == 0 else (1 + tau * a) / pos
    return min(math.sqrt(a), math.sqrt(q))


def denominator(mu, a, tau):
    """D(mu) = 1 + tau mu c_mu - mu^2 = 1 + tau a - (1 - tau) mu^2."""
    mu = np.asarray(mu, dtype=float)
    return 1.0 + tau * a - (1.0 - tau) * mu * mu


@dataclass(frozen=True)
class WaveNumbers:
    mu: float
    c_mu: float
    mu_tau: float
    D: float

    @classmethod
    def of(cls, mu: float, a: float, tau: float) -> "WaveNumbers":
        return cls(mu, wave_speed(mu, a), mu_max(a, tau), float(denominator(mu, a, tau)))


def constraint_values(mu, p: ModelParams):
    """Return (G1, G2) at mu; vectorised over mu.

    G1 = 1 + tau c_mu,  G2 = (mu + tau c)/sqrt(D) + mu (mu + tau c)/D.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise DomainError("mu must be positive")
    c = mu + p.a / mu
    D = denominator(mu, p.a, p.tau)
    if np.any(D <= 0):
        raise DomainError("D(mu) <= 0: mu outside the admissible range")
    g1 = 1.0 + p.tau * c
    s = mu + p.tau * c
    g2 = s / np.sqrt(D) + mu * s / D
    if g1.ndim == 0:
        return float(g1), float(g2)
    return g1, g2


def _g2_prime(mu, p: ModelParams):
    h = 1e-6 * mu
    _, gp = constraint_values(mu + h, p)
    _, gm = constraint_values(mu - h, p)
    return (gp - gm) / (2 * h)


def _gmax(mu, p):
    g1, g2 = constraint_values(mu, p)
    return np.maximum(g1, g2)


def _scan_points(mu_tau: float, n: int, D_end: float) -> np.ndarray:
    """Uniform cells on (0, mu_tau) plus geometric clustering at 0.

    G2 blows up at 0, and at mu_tau too when D(mu_tau) = 0, so the
    crossings can sit far below the uniform spacing for small chi.
    """
    uni = mu_tau * np.arange(1, n) / n
    geo = mu_tau * np.geomspace(1e-12, 1.0 / n, 600, endpoint=False)
    parts = [geo, uni]
    if D_end <= 1e-14:
        parts.append(mu_tau * (1 - np.geomspace(1.0 / n, 1e-12, 600)))
    return np.unique(np.concatenate(parts))


def m_tau(a: float, tau: float, n_scan: int = 10_000) -> float:
    """inf over (0, mu_tau) of max(G1, G2): dense scan then golden refinement."""
    if a <= 0 or tau <= 0:
        raise DomainError("m_tau needs a > 0 and tau > 0")
    p = ModelParams(a, 1.0, 0.0, tau)
    mt = mu_max(a, tau)
    D_end = float(denominator(mt, a, tau))
    x = _scan_points(mt, n_scan, D_end)
    f = _gmax(x, p)
    k = int(np.argmin(f))
    if k == len(x) - 1:
        # infimum approached at the open endpoint mu_tau
        return float(_gmax(mt, p)) if D_end > 0 else float(f[k])
    if k == 0:
        return float(f[0])
    fun = lambda m: float(_gmax(m, p))
    res = optimize.minimize_scalar(fun, bracket=(x[k - 1], x[k], x[k + 1]),
                                   method="golden", tol=1e-10)
    return float(min(res.fun, f[k]))


def chi_star(p: ModelParams, n_scan: int = 10_000) -> float:
    """Chemotaxis threshold b/(1 + m_tau)."""
    if p.tau <= 0:
        raise DomainError("chi_star needs tau > 0")
    return p.b / (1.0 + m_tau(p.a, p.tau, n_scan))


@dataclass(frozen=True)
class SpeedRange:
    m_tau: float
    chi_star: float
    mu_tau: float
    mu_tilde_star2: float
    crossings: tuple
    mu_star: float
    mu_star2: float
    c_star: float
    c_star2: float
    unbounded: bool = False
    double_roots: tuple = ()
    inconsistent: bool = False
    notes: tuple = field(default_factory=tuple)

    def contains_speed(self, c: float) -> bool:
        return self.c_star < c < self.c_star2

    def contains_mu(self, mu: float) -> bool:
        return self.mu_star2 < mu < self.mu_star


def _bisect_predicate(pred, lo, hi, tol=1e-12):
    """pred(lo) False, pred(hi) True; shrink to the switching point."""
    while hi - lo > tol * max(1.0, hi) and hi - lo > 1e-300:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def admissible_window(p: ModelParams, n_scan: int = 10_000) -> SpeedRange:
    """Admissible wave numbers (mu**, mu*) and speeds (c*, c**) for 0 < chi < chi*."""
    if p.chi <= 0:
        raise WindowUndefined("window needs chi > 0")
    mtau = m_tau(p.a, p.tau, n_scan)
    cs = p.b / (1.0 + mtau)
    if p.chi >= cs:
        raise WindowUndefined(f"chi={p.chi} is not below chi_star={cs:.6g}")
    rhs = p.rhs
    mt = mu_max(p.a, p.tau)
    D_end = float(denominator(mt, p.a, p.tau))
    x = _scan_points(mt, n_scan, D_end)
    g1, g2 = constraint_values(x, p)
    h = g2 - rhs

    # (i) crossings of G2 = rhs
    fun = lambda m: constraint_values(m, p)[1] - rhs
    roots = []
    for k in np.nonzero(np.sign(h[:-1]) * np.sign(h[1:]) <= 0)[0]:
        lo, hi = x[k], x[k + 1]
        if h[k] == 0:
            r = lo
        elif h[k + 1] == 0:
            continue
        else:
            r = optimize.brentq(fun, lo, hi, xtol=1e-12, rtol=1e-15)
        if not roots or r - roots[-1] > 1e-14:
            roots.append(float(r))
    doubles = tuple(r for r in roots if abs(_g2_prime(r, p)) < 1e-8)

    # (ii) mu~** = inf{mu : max(G1, G2) < rhs}
    ok = np.maximum(g1, g2) < rhs
    if not ok.any():
        raise WindowUndefined("no wave number satisfies the constraint on the scan grid")
    k = int(np.argmax(ok))
    pred = lambda m: bool(max(constraint_values(m, p)) < rhs)
    mu_t2 = x[0] if k == 0 else _bisect_predicate(pred, x[k - 1], x[k])

    # (iii) mu* = mu^{i*+1}
    nodes = [0.0] + roots + [mt]
    below = []  # G2 < rhs on (nodes[i], nodes[i+1])
    for i in range(len(nodes) - 1):
        sel = (x > nodes[i]) & (x < nodes[i + 1])
        if sel.any():
            below.append(bool(np.all(h[sel] < 0)))
        else:
            mid = 0.5 * (nodes[i] + nodes[i + 1])
            below.append(bool(fun(mid) < 0))
    istar = None
    for i in range(len(nodes) - 2, 0, -1):
        if below[i] and mu_t2 <= nodes[i + 1]:
            istar = i
            break
    notes = []
    inconsistent = False
    if not roots:
        inconsistent = True
        notes.append("no crossing found although G2 diverges at 0")
    if istar is None:
        if not roots and below[0]:
            mu_s, mu_s2 = mt, 0.0
        else:
            raise WindowUndefined("no interval with G2 < rhs ends above mu~**")
    else:
        mu_s = nodes[istar + 1]
        # (iv) walk left over intervals where G2 <= rhs
        j = istar
        while j - 1 >= 1 and below[j - 1]:
            j -= 1
        mu_s2 = max(mu_t2, nodes[j])
    if not mu_s2 < mu_s:
        raise WindowUndefined("empty wave-number window")
    c_s = wave_speed(mu_s, p.a)
    unbounded = bool(mu_s2 == 0.0)
    c_s2 = math.inf if unbounded else wave_speed(mu_s2, p.a)
    return SpeedRange(m_tau=mtau, chi_star=cs, mu_tau=mt, mu_tilde_star2=float(mu_t2),
                      crossings=tuple(roots), mu_star=float(mu_s), mu_star2=float(mu_s2),
                      c_star=float(c_s), c_star2=float(c_s2), unbounded=unbounded,
                      double_roots=doubles, inconsistent=inconsistent, notes=tuple(notes))


def is_admissible(p: ModelParams, mu: float) -> bool:
    """Constraint pair: G1 < rhs strictly and G2 <= rhs."""
    if p.chi == 0:
        return 0 < mu < mu_max(p.a, p.tau) or (mu == math.sqrt(p.a))
    try:
        g1, g2 = constraint_values(mu, p)
    except DomainError:
        return False
    return g1 < p.rhs and g2 <= p.rhs


def mu_from_speed(c: float, p: ModelParams, allow_endpoint: bool = False) -> float:
    """Unique root of mu + a/mu = c in (0, mu_tau)."""
    a = p.a
    disc = c * c - 4 * a
    if c <= 0 or disc < 0:
        raise NoRoot(f"c={c} < 2 sqrt(a): no real wave number")
    mu = 2 * a / (c + math.sqrt(disc))  # smaller root, cancellation-free
    mt = mu_max(a, p.tau)
    if mu >= mt and not (allow_endpoint and mu == mt):
        raise NoRoot(f"c={c} <= c(mu_tau)={mt + a / mt:.6g}: wave number not below mu_tau")
    return mu


def mu_star_limit(chi: float, a: float, b: float) -> float:
    """Small-tau limit sup{mu < min(sqrt a, 1): mu/sqrt(1-mu^2) + mu^2/(1-mu^2) <= (b-chi)/chi}."""
    rhs = (b - chi) / chi
    top = min(math.sqrt(a), 1.0)
    f = lambda m: m / math.sqrt(1 - m * m) + m * m / (1 - m * m) - rhs
    if top < 1.0 and f(top) <= 0:
        return top
    hi = top if top < 1.0 else 1.0 - 1e-15
    if f(hi) <= 0:
        return top
    return optimize.brentq(f, 1e-300, hi, xtol=1e-14)


def simple_chi_bound(p: ModelParams) -> float:
    """Explicit chi below which mu* = sqrt(a) and c* = 2 sqrt(a).

    b/(1 + max{1 + 2 tau sqrt a, sqrt a (1+2tau)/sqrt(1+2 tau a - a) + a (1+2tau)/(1+2 tau a - a)}),
    i.e. the admissibility level at mu = sqrt(a).
    """
    a, tau = p.a, p.tau
    pos = max(1.0 - tau, 0.0)
    if not (pos == 0 or a < (1 + tau * a) / pos):
        raise NotApplicable("needs a < (1 + tau a)/(1 - tau)_+")
    D = 1 + 2 * tau * a - a
    r = math.sqrt(a)
    g = max(1 + 2 * tau * r, r * (1 + 2 * tau) / math.sqrt(D) + a * (1 + 2 * tau) / D)
    return p.b / (1 + g)


def chi_bound_readings(p: ModelParams) -> dict:
    """The bound with a(1+2tau) (corrected) and with a(1+2) in the last term."""
    a, tau = p.a, p.tau
    D = 1 + 2 * tau * a - a
    r = math.sqrt(a)
    lit = max(1 + 2 * tau * r, r * (1 + 2 * tau) / math.sqrt(D) + a * 3 / D)
    return {"corrected": simple_chi_bound(p), "literal_a_1_plus_2": p.b / (1 + lit)}
