"""Independent reference solutions used by the tests."""
import math

import numpy as np
from scipy.integrate import solve_ivp


def kpp_front(c: float, a: float = 1.0, b: float = 1.0, eps: float = 1e-9, x_end: float = 200.0):
    """Shoot U'' + cU' + U(a - bU) = 0 off the unstable manifold of a/b.

    Returns (x, U) with U(0) = a/(2b) after translation.
    """
    lam = (-c + math.sqrt(c * c + 4 * a)) / 2   # growth of U - a/b near the plateau
    s = a / b

    def rhs(x, y):
        return [y[1], -c * y[1] - y[0] * (a - b * y[0])]

    def small(x, y):
        return y[0] - 1e-12 * s
    small.terminal = True

    sol = solve_ivp(rhs, (0.0, x_end), [s - eps, -eps * lam], method="DOP853",
                    rtol=1e-12, atol=1e-15, dense_output=True, events=small,
                    max_step=0.05)
    x, U = sol.t, sol.y[0]
    i = np.nonzero(U < 0.5 * s)[0][0]
    # refine the crossing on the dense output
    lo, hi = x[i - 1], x[i]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sol.sol(mid)[0] > 0.5 * s:
            lo = mid
        else:
            hi = mid
    x0 = 0.5 * (lo + hi)
    xs = np.linspace(x[0], x[-1], 20001)
    return xs - x0, sol.sol(xs)[0]


def crossing(x, U, level):
    """First x with U(x) = level for a decreasing profile, by linear interpolation."""
    i = np.nonzero(U < level)[0][0]
    return x[i - 1] + (U[i - 1] - level) / (U[i - 1] - U[i]) * (x[i] - x[i - 1])
