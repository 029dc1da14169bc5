# cython: language_level=3
"""Compiled kernels: tridiagonal elimination and one explicit road-field step."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def tridiag_solve(double[::1] sub, double[::1] diag, double[::1] sup, double[::1] rhs):
    """Solve a tridiagonal system by forward elimination and back substitution.

    ``sub[i]`` multiplies ``x[i-1]`` in row ``i`` (``sub[0]`` unused) and
    ``sup[i]`` multiplies ``x[i+1]`` (``sup[n-1]`` unused). No pivoting; the
    callers only pass diagonally dominant matrices.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef double m
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] x = out
    cdef double[::1] cp = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    with nogil:
        cp[0] = sup[0] / diag[0]
        x[0] = rhs[0] / diag[0]
        for i in range(1, n):
            m = diag[i] - sub[i] * cp[i - 1]
            cp[i] = sup[i] / m
            x[i] = (rhs[i] - sub[i] * x[i - 1]) / m
        for i in range(n - 2, -1, -1):
            x[i] = x[i] - cp[i] * x[i + 1]
    return out


def euler_step(double[::1] u, double[:, ::1] v, double[::1] u_out, double[:, ::1] v_out,
               double[::1] src, double[::1] sink, double[::1] gather,
               double hx, double hy, double dt, double big_d, double d,
               double mu_bar, double growth):
    """Advance road ``u`` (nx) and field ``v`` (ny, nx) by one forward-Euler step.

    Zero-flux boundaries on all sides. ``src[j]`` and ``sink[j]`` are the
    road-to-field and field-to-road rates on row ``j``; ``gather[j]`` are the
    quadrature weights that collect the field into the road.
    """
    cdef Py_ssize_t ny = v.shape[0]
    cdef Py_ssize_t nx = v.shape[1]
    cdef Py_ssize_t i, j, il, ir, jd, ju
    cdef double cx = d / (hx * hx)
    cdef double cy = d / (hy * hy)
    cdef double cr = big_d / (hx * hx)
    cdef double w, g, vc, lap
    with nogil:
        for i in range(nx):
            il = i - 1 if i > 0 else 1
            ir = i + 1 if i < nx - 1 else nx - 2
            g = 0.0
            for j in range(ny):
                w = gather[j]
                if w != 0.0:
                    g = g + w * v[j, i]
            lap = cr * (u[il] - 2.0 * u[i] + u[ir])
            u_out[i] = u[i] + dt * (lap - mu_bar * u[i] + g)
        for j in range(ny):
            jd = j - 1 if j > 0 else 1
            ju = j + 1 if j < ny - 1 else ny - 2
            for i in range(nx):
                il = i - 1 if i > 0 else 1
                ir = i + 1 if i < nx - 1 else nx - 2
                vc = v[j, i]
                lap = cx * (v[j, il] - 2.0 * vc + v[j, ir]) + cy * (v[jd, i] - 2.0 * vc + v[ju, i])
                v_out[j, i] = vc + dt * (lap + growth * vc * (1.0 - vc) + src[j] * u[i] - sink[j] * vc)
