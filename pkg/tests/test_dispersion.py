from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from _oracles import limit_speed_scan

from roadspread.bvp import GridControl, lambda_window
from roadspread.dispersion import (
    SearchControl,
    SpeedResult,
    check_inequality_chain,
    curve_sample,
    gap,
    golden_min,
    spreading_speed,
)
from roadspread.errors import KernelError
from roadspread.model import Kernel, ModelSpec, Params, limit_spec, make_kernel, nonlocal_spec


def P(big_d, **kw):
    return Params(d=1.0, big_d=big_d, growth=1.0, mu_bar=1.0, nu_bar=1.0).with_(**kw)


def test_golden_min_quadratic():
    x, fx, n = golden_min(lambda t: (t - 0.3) ** 2 + 1, 0.0, 1.0, 1e-12)
    # a flat minimum is located only to about sqrt(machine eps)
    assert x == pytest.approx(0.3, abs=1e-7) and fx == pytest.approx(1.0)
    assert n < 100


@pytest.mark.parametrize("big_d", [0.5, 1.0, 2.0])
def test_low_diffusion_is_analytic(big_d):
    res = spreading_speed(P(big_d), limit_spec(P(big_d)))
    assert res.c_star == 2.0 and res.analytic and res.n_gap_evals == 0


def test_low_diffusion_gap_via_endpoint_cross():
    p = P(1.5)
    rep = gap(p, limit_spec(p), 2.3)
    assert rep.endpoint_cross and rep.gap <= 0


def test_gap_signs():
    p = P(4.0)
    spec = limit_spec(p)
    assert gap(p, spec, 2.0001).gap > 0
    assert gap(p, spec, 3.0).gap < 0


def test_gap_decreasing_in_c():
    p = P(4.0)
    spec = nonlocal_spec(p)
    gaps = [gap(p, spec, c).gap for c in (2.01, 2.1, 2.2, 2.4, 2.8)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


@pytest.mark.parametrize("big_d", [2.5, 4.0, 10.0])
def test_limit_speed_matches_scan_oracle(big_d):
    res = spreading_speed(P(big_d), limit_spec(P(big_d)))
    assert abs(res.c_star / limit_speed_scan(big_d) - 1) < 1e-8


def test_speed_increases_with_d():
    speeds = [spreading_speed(P(D), limit_spec(P(D))).c_star for D in (2.5, 4, 8, 16, 32)]
    assert all(a < b for a, b in zip(speeds, speeds[1:]))


@pytest.mark.parametrize("shape", ["boxcar", "triangle"])
def test_table_kernel_gives_same_speed(shape):
    p = P(4.0)
    k = make_kernel(shape, 1.0, halfwidth=1.0)
    a = spreading_speed(p, ModelSpec(nu=k, mu=k)).c_star
    b = spreading_speed(p, ModelSpec(nu=k.to_table(), mu=k.to_table())).c_star
    assert abs(a / b - 1) < 1e-6


def test_bvp_route_matches_closed_form_speed():
    p = P(4.0)
    spec = ModelSpec(nu=Kernel(atom=1.0), mu=make_kernel("triangle", 1.0, halfwidth=1.0))
    closed = spreading_speed(p, spec).c_star
    ctl = SearchControl(method="bvp", grid=GridControl(extrapolate=True))
    assert abs(spreading_speed(p, spec, ctl).c_star / closed - 1) < 1e-8


def test_mass_mismatch_rejected():
    with pytest.raises(KernelError):
        spreading_speed(P(4.0), ModelSpec(nu=Kernel(atom=0.5), mu=Kernel(atom=1.0)))


def test_result_record_roundtrips_to_json():
    import json

    res = spreading_speed(P(4.0), limit_spec(P(4.0)))
    rec = json.loads(json.dumps(res.to_record()))
    assert rec["c_star"] == res.c_star and rec["kind"] == "Limit"


def test_curve_sample_properties():
    p = P(4.0)
    c = 5.0  # fast enough that the road vertex c/(2D) lies inside the window
    tab = curve_sample(p, nonlocal_spec(p), c, 201)
    step = tab.lam[1] - tab.lam[0]
    assert np.all(np.diff(tab.lam) > 0)
    assert abs(tab.lam[np.argmax(tab.psi1)] - c / (2 * p.big_d)) <= step
    assert abs(tab.lam[np.argmin(tab.psi2)] - c / (2 * p.d)) <= step
    with pytest.raises(ValueError):
        curve_sample(p, nonlocal_spec(p), c, 1)


def test_curve_sample_endpoints_near_mu_bar():
    p = P(4.0)
    tab = curve_sample(p, limit_spec(p), 2.1, 11, margin=1e-3)
    assert abs(tab.psi2[0] - 1) < 0.05 and abs(tab.psi2[-1] - 1) < 0.05


@pytest.mark.parametrize("big_d", [2.5, 4.0, 10.0, 100.0])
def test_chain_holds_for_computed_speeds(big_d):
    p = P(big_d)
    chk = check_inequality_chain(spreading_speed(p, limit_spec(p)), p)
    assert chk.ok and chk.slack_low >= 0 and chk.slack_high >= 0


def _fake(c, p):
    return SpeedResult(c, None, None, (c, c), "Limit", p)


def test_chain_rejects_fakes():
    p = P(4.0)
    # far too fast: lam2_minus drops below c/D
    chk = check_inequality_chain(_fake(20.0, p), p)
    assert not chk.ok and chk.slack_low < 0
    p = P(100.0)
    # too slow for D = 100: lam1_plus falls below lam2_minus
    chk = check_inequality_chain(_fake(2.0, p), p)
    assert not chk.ok and chk.slack_high < 0


def test_chain_rejects_threshold_speed_fake():
    # c = c_KPP at D = 4d: c/D = 0.5 <= lam2_minus = 1 holds, lam1_plus = 0.809 < 1 fails
    p = P(4.0)
    chk = check_inequality_chain(_fake(2.0, p), p)
    assert not chk.ok
    assert chk.slack_low == pytest.approx(0.5) and chk.slack_high < 0


def test_tighter_tolerance_refines():
    p = P(4.0)
    spec = limit_spec(p)
    a = spreading_speed(p, spec, SearchControl(c_rtol=1e-6)).c_star
    b = spreading_speed(p, spec, SearchControl(c_rtol=1e-12)).c_star
    assert abs(a - b) < 1e-6 * b
