"""Acceptance criteria, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line, printed in the pytest terminal
summary.  Monte Carlo criteria run on the three-quarter reference set; a
supplementary quarter-plane run (exact product-form law) is reported
separately.
"""
import math
import time

import numpy as np
import pytest

from conftest import (
    PRODUCT,
    THREE_QUARTER_SETS,
    bc_residual,
    kernel_identity_residual,
    make,
    record,
)
from wedgerbm.bvp import _CACHE, eval_A, comparison_table
from wedgerbm.curve import (
    branch_P,
    branch_points,
    hyperbola_residual,
    kernel_residual,
    uniformize,
)
from wedgerbm.gluing import chebyshev_T, chebyshev_T_algebraic, glue_w, glue_w_prime
from wedgerbm.inversion import nu_grid, pi_grid
from wedgerbm.model import REFERENCE, ModelError, Wedge, mass_constants
from wedgerbm.simulate import SimConfig, density_comparison, run, validation_report

ALL_SETS = list(THREE_QUARTER_SETS.values()) + [PRODUCT]


def test_criterion_1_mass_conservation():
    _CACHE.clear()
    t0 = time.perf_counter()
    a0, b0 = mass_constants(REFERENCE)
    val = eval_A(REFERENCE, 1e-6).value
    rel = abs(val - a0) / a0
    dt = time.perf_counter() - t0
    ok = (a0, b0) == (1.0, 0.5) and rel < 1e-5 and dt < 1.0
    assert record("criterion 1", ok, f"A0={a0} B0={b0} |A(1e-6)-A0|/A0={rel:.2e}", dt)


def test_criterion_2_kernel_branches():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    n = 10_000
    worst = {"vieta": 0.0, "kernel": 0.0, "separation": 0.0, "hyperbola": 0.0}
    for params in ALL_SETS:
        bp = branch_points(params)
        q = rng.normal(scale=5, size=n) + 1j * rng.normal(scale=5, size=n)
        P = branch_P(params, q, bp)
        s = -2 * (params.rho * q + params.mu1) / params.sigma1
        pr = (params.sigma2 * q * q + 2 * params.mu2 * q) / params.sigma1
        scale = 1 + np.abs(q) ** 2
        worst["vieta"] = max(worst["vieta"],
                             np.max(np.abs(P.first + P.second - s) / np.sqrt(scale)),
                             np.max(np.abs(P.first * P.second - pr) / scale))
        worst["kernel"] = max(worst["kernel"], np.max(kernel_residual(params, P.first, q)),
                              np.max(kernel_residual(params, P.second, q)))
        worst["separation"] = max(worst["separation"],
                                  np.max((P.first.real - P.second.real) / np.sqrt(scale)))
        # images of both cuts
        d = rng.exponential(scale=3 * (bp.q2 - bp.q1), size=n)
        qc = np.concatenate([bp.q2 + d, bp.q1 - d]) + 0j
        Pc = branch_P(params, qc, bp)
        for t in (Pc.first, Pc.second):
            res = np.abs(hyperbola_residual(params, t)) / (1 + np.abs(t) ** 2)
            worst["hyperbola"] = max(worst["hyperbola"], np.max(res))
    dt = time.perf_counter() - t0
    ok = (worst["vieta"] < 1e-8 and worst["kernel"] < 1e-8 and worst["separation"] <= 1e-12
          and worst["hyperbola"] < 1e-8 and dt < 5)
    detail = " ".join(f"{k}={v:.1e}" for k, v in worst.items())
    assert record("criterion 2", ok, f"{n} samples/set x {len(ALL_SETS)} sets: {detail}", dt)


def test_criterion_3_gluing():
    _CACHE.clear()
    t0 = time.perf_counter()
    from wedgerbm.bvp import _solution

    glue = deriv = 0.0
    for params in ALL_SETS:
        sol = _solution(params, 1e-10)
        t = sol.t_of_tau(sol.scale * np.geomspace(1e-3, 1e3, 1000))
        w = glue_w(params, t)
        glue = max(glue, np.max(np.abs(w - glue_w(params, np.conj(t))) / np.abs(w)))
        rng = np.random.default_rng(3)
        p = rng.normal(scale=3, size=300) + 1j * rng.normal(scale=3, size=300)
        h = 1e-5
        fd = (glue_w(params, p + h) - glue_w(params, p - h)) / (2 * h)
        d = glue_w_prime(params, p)
        deriv = max(deriv, np.max(np.abs(d - fd) / np.abs(d)))
    x = np.linspace(-1, 1, 4001) + 0j
    rep = max(np.max(np.abs(chebyshev_T(a, xs) - chebyshev_T_algebraic(a, xs)))
              for a in (math.pi / p.beta for p in ALL_SETS) for xs in (x, np.conj(x)))
    dt = time.perf_counter() - t0
    ok = glue < 1e-9 and rep < 1e-12 and deriv < 1e-6 and dt < 5
    assert record("criterion 3", ok,
                  f"|w(p)-w(conj p)|rel={glue:.1e} T_a forms={rep:.1e} w' vs FD={deriv:.1e}", dt)


def test_criterion_4_boundary_condition():
    _CACHE.clear()
    t0 = time.perf_counter()
    res = {k: float(bc_residual(p, 200).max()) for k, p in THREE_QUARTER_SETS.items()}
    dt = time.perf_counter() - t0
    chis = {-1 if "chi" in k else 0 for k in res}
    ok = max(res.values()) < 1e-6 and chis == {0, -1} and dt < 60
    detail = " ".join(f"{k}={v:.1e}" for k, v in res.items())
    assert record("criterion 4", ok, f"max rel residual on 200 points: {detail}", dt)


def test_criterion_5_kernel_identity():
    _CACHE.clear()
    t0 = time.perf_counter()
    res = {k: float(kernel_identity_residual(p, 100).max())
           for k, p in THREE_QUARTER_SETS.items()}
    dt = time.perf_counter() - t0
    ok = max(res.values()) < 1e-5 and dt < 60
    detail = " ".join(f"{k}={v:.2f}" for k, v in res.items())
    assert record("criterion 5", ok, f"max rel |uA+vB| on 100 points: {detail}", dt)


# -- Monte Carlo criteria --------------------------------------------------------------
MC = SimConfig(dt=1e-3, horizon=1e4, n_paths=32, seed=2024)


@pytest.fixture(scope="module")
def reference_mc():
    t0 = time.perf_counter()
    meas = run(REFERENCE, MC)
    return meas, time.perf_counter() - t0


def _mc_line(rep):
    return (f"residual {rep['passed']}/25, F agreement {rep['F_passed']}/25 "
            f"(empirical-only residual {rep['empirical_passed']}/25)")


def test_criterion_6_monte_carlo(reference_mc):
    meas, t_sim = reference_mc
    t0 = time.perf_counter()
    rep = validation_report(REFERENCE, meas)
    dt = t_sim + time.perf_counter() - t0
    ok = rep["passed"] >= 24 and rep["F_passed"] >= 24 and dt < 600
    assert record("criterion 6", ok, f"reference set: {_mc_line(rep)}", dt)


def _inversion_closure(params, meas, box):
    a0, b0 = mass_constants(params)
    out = {}
    lo, hi = (-box, 0.0) if params.wedge is Wedge.THREE_QUARTER else (0.0, box)
    try:
        m1 = nu_grid(params, "nu1", lo, hi, 0.05, 1e-5).mass()
        out["nu1"] = abs(m1 - a0) / a0
    except ModelError as exc:
        out["nu1_error"] = type(exc).__name__
    try:
        ax = (-box if params.wedge is Wedge.THREE_QUARTER else 0.0, box, 0.1)
        out["pi"] = abs(pi_grid(params, ax, ax, 1e-4).mass() - 1.0)
    except ModelError as exc:
        out["pi_error"] = type(exc).__name__
    dc = density_comparison(params, meas, box=4.0, factor=2)
    out["bins"] = dc
    ok = (out.get("nu1", 1.0) < 0.02 and out.get("pi", 1.0) < 0.02 and dc.get("ok", False))
    parts = [f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}"
             for k, v in out.items() if k != "bins"]
    if "error" in dc:
        parts.append(f"bins: {dc['error']}")
    else:
        parts.append(f"bins within 3 SE {dc['n_within']}/{dc['n_bins']}")
    return ok, " ".join(parts)


def test_criterion_7_inversion_closure(reference_mc):
    meas, t_sim = reference_mc
    t0 = time.perf_counter()
    ok, detail = _inversion_closure(REFERENCE, meas, box=30.0)
    dt = t_sim + time.perf_counter() - t0
    ok = ok and dt < 600
    assert record("criterion 7", ok, f"reference set: {detail}", dt)


def test_criterion_8_uniformization():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    worst = hit = 0.0
    for params in ALL_SETS:
        s = rng.lognormal(sigma=1.5, size=1000) * np.exp(2j * math.pi * rng.random(1000))
        p, q = uniformize(params, s)
        worst = max(worst, float(np.max(kernel_residual(params, p, q))))
        bp = branch_points(params)
        e = complex(math.cos(params.beta), math.sin(params.beta))
        hit = max(hit, abs(uniformize(params, 1.0).p_of_s - bp.p2),
                  abs(uniformize(params, -1.0).p_of_s - bp.p1),
                  abs(uniformize(params, e).q_of_s - bp.q2),
                  abs(uniformize(params, -e).q_of_s - bp.q1))
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and hit < 1e-12 and dt < 1
    assert record("criterion 8", ok, f"max rel |K(p(s),q(s))|={worst:.1e} branch-point hits={hit:.1e}", dt)


def test_criterion_9_comparison_table(tmp_path, capsys):
    import json

    from wedgerbm.cli import dispatch

    _CACHE.clear()
    t0 = time.perf_counter()
    sets = [REFERENCE, THREE_QUARTER_SETS["rho_neg"], THREE_QUARTER_SETS["rho_pos"], PRODUCT]
    flip = {"H_p^+": "H_p^-", "H_p^-": "H_p^+", "line": "line"}
    checks = []
    for i, params in enumerate(sets):
        f = tmp_path / f"m{i}.json"
        f.write_text(json.dumps(params.to_dict()))
        code = dispatch(["compare", "-m", str(f)])
        cols = json.loads(capsys.readouterr().out)["columns"]
        tq, qu = cols["three_quarter"], cols["quarter"]
        side = {1: "H_p^-", -1: "H_p^+", 0: "line"}[int(np.sign(params.rho))]
        checks += [
            code == 0,
            tq["hyperbola"]["component"] == side,
            flip[tq["hyperbola"]["component"]] == qu["hyperbola"]["component"],
            (tq["bvp_domain"], qu["bvp_domain"]) == ("H+", "H-"),
            (tq["gluing"]["argument_sign"], qu["gluing"]["argument_sign"]) == (1, -1),
            tq["pole"]["p0"] < 0 < qu["pole"]["p0"],
            (tq["index"]["at"], qu["index"]["at"]) == ("q2", "q1"),
            tq["index"]["chi"] == (0 if tq["index"]["u_at_vertex"] >= 0 else -1),
            qu["index"]["chi"] == (0 if qu["index"]["u_at_vertex"] <= 0 else -1),
        ]
    dt = time.perf_counter() - t0
    ok = all(checks) and dt < 5
    assert record("criterion 9", ok, f"{sum(checks)}/{len(checks)} table checks on 4 sets", dt)


# -- supplementary: the quarter plane, where the stationary law is known exactly -----
def test_supplementary_quarter_monte_carlo():
    t0 = time.perf_counter()
    meas = run(PRODUCT, MC)
    rep = validation_report(PRODUCT, meas)
    ok6 = rep["passed"] >= 24 and rep["F_passed"] >= 24
    ok7, detail = _inversion_closure(PRODUCT, meas, box=12.0)
    dt = time.perf_counter() - t0
    record("supplementary 6q", ok6, f"quarter product-form set: {_mc_line(rep)}", dt)
    record("supplementary 7q", ok7, f"quarter product-form set: {detail}", dt)
    assert ok6 and ok7
