# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: tridiagonal elimination and implicit time stepping."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _thomas(const double[::1] lo, const double[::1] di, const double[::1] up,
                  const double[::1] rhs,
                  double[::1] cp, double[::1] x) noexcept nogil:
    cdef Py_ssize_t n = di.shape[0]
    cdef Py_ssize_t i
    cdef double m
    cp[0] = up[0] / di[0]
    x[0] = rhs[0] / di[0]
    for i in range(1, n):
        m = di[i] - lo[i] * cp[i - 1]
        cp[i] = up[i] / m
        x[i] = (rhs[i] - lo[i] * x[i - 1]) / m
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system; lower[0] and upper[-1] are ignored."""
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] di = np.ascontiguousarray(diag, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[::1] f = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t n = di.shape[0]
    out = np.empty(n)
    cp = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] c = cp
    with nogil:
        _thomas(lo, di, up, f, c, x)
    return out


def implicit_steps(U0, al, au, r, double kappa, double dt, int nsteps,
                   bint left_dirichlet, double left_val,
                   bint right_dirichlet, double right_val):
    """Advance (I - dt A - dt diag(r - kappa U^n)) U^{n+1} = U^n, nsteps times.

    (A U)_i = al_i (U_{i-1} - U_i) + au_i (U_{i+1} - U_i) with al, au >= 0.
    """
    cdef const double[::1] a_l = np.ascontiguousarray(al, dtype=np.float64)
    cdef const double[::1] a_u = np.ascontiguousarray(au, dtype=np.float64)
    cdef const double[::1] rr = np.ascontiguousarray(r, dtype=np.float64)
    out = np.array(U0, dtype=np.float64, copy=True)
    cdef double[::1] u = out
    cdef Py_ssize_t n = u.shape[0]
    cdef double[::1] lo = np.empty(n)
    cdef double[::1] di = np.empty(n)
    cdef double[::1] up = np.empty(n)
    cdef double[::1] f = np.empty(n)
    cdef double[::1] cp = np.empty(n)
    cdef Py_ssize_t i
    cdef int k
    with nogil:
        for i in range(n):
            lo[i] = -dt * a_l[i]
            up[i] = -dt * a_u[i]
        if left_dirichlet:
            lo[0] = 0.0
            up[0] = 0.0
        if right_dirichlet:
            lo[n - 1] = 0.0
            up[n - 1] = 0.0
        for k in range(nsteps):
            for i in range(n):
                di[i] = 1.0 + dt * (a_l[i] + a_u[i]) - dt * (rr[i] - kappa * u[i])
                f[i] = u[i]
            if left_dirichlet:
                di[0] = 1.0
                f[0] = left_val
            if right_dirichlet:
                di[n - 1] = 1.0
                f[n - 1] = right_val
            _thomas(lo, di, up, f, cp, u)
    return out
