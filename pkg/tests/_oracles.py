"""Reference computations that share no code with the package under test."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def limit_gap(c, big_d, d=1.0, f=1.0, mu_bar=1.0, nu_bar=1.0, n_scan=4001):
    """min over the window of nu mu / (nu + 2 sqrt(d P)) - (-D l^2 + c l + mu)."""
    root = math.sqrt(c * c - 4 * d * f)
    lo, hi = (c - root) / (2 * d), (c + root) / (2 * d)

    def diff(lam):
        p = max(lam * c - d * lam * lam - f, 0.0)
        return nu_bar * mu_bar / (nu_bar + 2 * math.sqrt(d * p)) - (-big_d * lam * lam + c * lam + mu_bar)

    lam = np.linspace(lo, hi, n_scan)[1:-1]
    vals = np.array([diff(x) for x in lam])
    k = int(np.argmin(vals))
    a, b = lam[max(k - 1, 0)], lam[min(k + 1, lam.size - 1)]
    if a == b:
        return vals[k]
    res = minimize_scalar(diff, bounds=(a, b), method="bounded", options={"xatol": 1e-15})
    return min(res.fun, vals[k])


def limit_speed_scan(big_d, d=1.0, f=1.0, mu_bar=1.0, nu_bar=1.0, n_c=400):
    """2-D brute-force scan for the first sign change of the gap, then brentq."""
    ck = 2 * math.sqrt(d * f)
    cs = ck * (1 + np.geomspace(1e-6, 10, n_c))
    gaps = [limit_gap(c, big_d, d, f, mu_bar, nu_bar) for c in cs]
    k = next(i for i, g in enumerate(gaps) if g <= 0)
    return brentq(lambda c: limit_gap(c, big_d, d, f, mu_bar, nu_bar), cs[k - 1], cs[k], xtol=1e-15, rtol=1e-15)


def boxcar_concentrated_slope(p, digits=60):
    """d Psi2/d eps at eps = 0 for nu = boxcar of halfwidth eps (mass 1), Dirac mu of mass 1, d = 1.

    Uses the exact piecewise solution (cosh/sinh inside the support, a
    decaying exponential outside) in extended precision at eps = 1e-25.
    """
    import mpmath as mp

    with mp.workdps(digits):
        eps = mp.mpf("1e-25")
        a = mp.sqrt(p)
        b = mp.sqrt(p + 1 / (2 * eps))
        B = -1 / (2 * b)
        ch, sh = mp.cosh(b * eps), mp.sinh(b * eps)
        A = -(b * B * ch + a * B * sh) / (b * sh + a * ch)
        psi_eps = (A * sh / b + B * (ch - 1) / b) / eps
        return float((psi_eps - 1 / (1 + 2 * a)) / eps)
