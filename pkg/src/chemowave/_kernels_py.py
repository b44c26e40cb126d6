"""NumPy/SciPy fallback for the compiled kernels (same signatures)."""
import numpy as np
from scipy.linalg import solve_banded


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system; lower[0] and upper[-1] are ignored."""
    n = len(diag)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, np.asarray(rhs, dtype=float),
                        overwrite_ab=True, check_finite=False)


def implicit_steps(U0, al, au, r, kappa, dt, nsteps,
                   left_dirichlet, left_val, right_dirichlet, right_val):
    """Advance (I - dt A - dt diag(r - kappa U^n)) U^{n+1} = U^n, nsteps times."""
    u = np.array(U0, dtype=float, copy=True)
    n = len(u)
    al = np.asarray(al, dtype=float)
    au = np.asarray(au, dtype=float)
    r = np.asarray(r, dtype=float)
    ab = np.zeros((3, n))
    ab[0, 1:] = -dt * au[:-1]
    ab[2, :-1] = -dt * al[1:]
    if left_dirichlet:
        ab[0, 1] = 0.0
    if right_dirichlet:
        ab[2, n - 2] = 0.0
    base = 1.0 + dt * (al + au) - dt * r
    for _ in range(nsteps):
        ab[1] = base + dt * kappa * u
        if left_dirichlet:
            ab[1, 0] = 1.0
            u[0] = left_val
        if right_dirichlet:
            ab[1, -1] = 1.0
            u[-1] = right_val
        u = solve_banded((1, 1), ab, u, check_finite=False)
    return u
