"""Pure-Python implementations of the compiled kernels in ``_core``.

Same signatures and semantics; used when the extension is not built or when
``ROADSPREAD_BACKEND=python`` is set.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def tridiag_solve(sub, diag, sup, rhs):
    """Solve a tridiagonal system (see ``_core.tridiag_solve`` for layout)."""
    diag = np.asarray(diag, dtype=float)
    n = diag.size
    if n == 0:
        return np.empty(0)
    ab = np.zeros((3, n))
    ab[0, 1:] = np.asarray(sup, dtype=float)[:-1]
    ab[1] = diag
    ab[2, :-1] = np.asarray(sub, dtype=float)[1:]
    return solve_banded((1, 1), ab, np.asarray(rhs, dtype=float))


def _lap1(a, axis, scale):
    # second difference with mirrored ghost nodes (zero flux)
    n = a.shape[axis]
    idx = np.arange(n)
    left = np.where(idx > 0, idx - 1, 1)
    right = np.where(idx < n - 1, idx + 1, n - 2)
    return scale * (np.take(a, left, axis=axis) - 2.0 * a + np.take(a, right, axis=axis))


def euler_step(u, v, u_out, v_out, src, sink, gather, hx, hy, dt, big_d, d, mu_bar, growth):
    """Advance one forward-Euler step in place into ``u_out`` and ``v_out``."""
    g = gather @ v
    u_out[:] = u + dt * (_lap1(u, 0, big_d / hx**2) - mu_bar * u + g)
    lap = _lap1(v, 1, d / hx**2) + _lap1(v, 0, d / hy**2)
    v_out[:] = v + dt * (lap + growth * v * (1.0 - v) + src[:, None] * u[None, :] - sink[:, None] * v)
