import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    NEG,
    POS,
    POS_CHI,
    PRODUCT,
    PRODUCT_CHI,
    THREE_QUARTER_SETS,
    bc_residual,
    kernel_identity_residual,
    make,
    product_form,
)
from wedgerbm.bvp import (
    DomainTag,
    DomainViolation,
    KernelZero,
    _solution,
    comparison_table,
    counterpart,
    eval_A,
    eval_B,
    eval_L,
    g_func,
    index_chi,
    pole_p0,
)
from wedgerbm.curve import branch_points
from wedgerbm.model import REFERENCE, Wedge, kernel_K, mass_constants, reflection_u

ALL = list(THREE_QUARTER_SETS.values()) + [PRODUCT, PRODUCT_CHI]


def test_pole_and_index_reference():
    assert pole_p0(REFERENCE) == pytest.approx(-0.8, abs=1e-15)
    assert index_chi(REFERENCE) == 0
    # u at the double point (1, q2) is 0.5 + 3 + sqrt(10)
    bp = branch_points(REFERENCE)
    assert float(reflection_u(REFERENCE, 1.0, bp.q2)) == pytest.approx(3.5 + math.sqrt(10))


def test_index_minus_one_reachable():
    assert index_chi(POS_CHI) == -1
    assert index_chi(PRODUCT_CHI) == -1


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-3, -0.2), st.floats(-3, -0.2), st.floats(0.1, 4))
def test_pole_sign_and_rho_zero_index(rho, m1, m2, r1):
    r2 = 2.0 * m2 / m1 + 0.5  # above the ergodicity threshold mu2/mu1
    if m1 - r1 * m2 <= 0.05:
        return
    p = make(1.0, 1.0, rho, m1, m2, r1, r2)
    assert pole_p0(p) < 0
    # p0 is the nonzero intersection of {u = 0} with the kernel curve
    p0 = pole_p0(p)
    assert abs(kernel_K(p, p0, -p.r1 * p0)) < 1e-10 * (1 + p0 * p0)
    if rho == 0.0:
        assert index_chi(p) == 0
    q = counterpart(p)
    assert q.wedge is Wedge.QUARTER and pole_p0(q) > 0


@pytest.mark.parametrize("params", [PRODUCT, PRODUCT_CHI], ids=["chi0", "chi-1"])
def test_product_form_oracle(params):
    A, B, L, (g1, g2) = product_form(params)
    assert pole_p0(params) == pytest.approx(g1, rel=1e-12)
    pts = [0.3 + 0.5j, -1 + 2j, 1e-3, -4 - 1j, 0.2 - 7j]
    for p in pts:
        assert eval_A(params, p).value == pytest.approx(A(p), rel=1e-9)
        assert eval_B(params, p).value == pytest.approx(B(p), rel=1e-9)
    for p, q in [(0.1j, -0.4j), (-1 + 1j, 0.5 - 2j), (2j, 2j)]:
        assert eval_L(params, p, q).value == pytest.approx(L(p, q), rel=1e-8)


@pytest.mark.parametrize("params", ALL)
def test_normalization(params):
    a0, b0 = mass_constants(params)
    assert eval_A(params, 1e-6).value == pytest.approx(a0, rel=1e-5)
    assert eval_B(params, 1e-6).value == pytest.approx(b0, rel=1e-5)
    assert eval_L(params, 0, 0).value == 1.0


@pytest.mark.parametrize("params", ALL, ids=lambda p: f"{p.wedge.value}-{p.rho}")
def test_boundary_condition(params):
    assert bc_residual(params, 200).max() < 1e-6


def test_kernel_identity_quarter():
    for params in (PRODUCT, PRODUCT_CHI):
        assert kernel_identity_residual(params, 100).max() < 1e-8


def test_three_quarter_identity_ratio_is_positive_constant():
    # characterizes the finding recorded for the three-quarter solution:
    # u A / (v B) is a positive constant along the contour
    from wedgerbm.model import reflection_v, swap_params

    for params in THREE_QUARTER_SETS.values():
        sa = _solution(params, 1e-12)
        sb = _solution(swap_params(params), 1e-12)
        q = sa.q_of_tau(sa.scale * np.array([0.1, 1.0, 10.0]))
        t, Au, _, _, _ = sa.boundary(q)
        Bq, _, _ = sb.evaluate(q + 0j)
        r = reflection_u(params, t, q) * Au / (reflection_v(params, t, q) * Bq)
        assert np.allclose(r, r[0], rtol=1e-8) and r[0].real > 0


@pytest.mark.parametrize("params", ALL)
def test_log_branch_continuous_and_zero_at_vertex(params):
    sol = _solution(params, 1e-10)
    assert np.all(np.abs(np.diff(sol.theta)) < math.pi)
    assert abs(sol._theta_at(np.array([1e-9 * sol.scale]))[0]) < 1e-6
    assert sol.gluing_defect < 1e-9


def test_g_at_vertex_real():
    for params in ALL:
        sol = _solution(params, 1e-10)
        g = g_func(params, sol.vertex + 0j)
        assert abs(g.imag) < 1e-12 * abs(g)


def test_conjugate_symmetry():
    for params in (REFERENCE, NEG, PRODUCT):
        for p in (2 + 1j, 0.5 + 3j):
            a = eval_A(params, p).value
            assert eval_A(params, p.conjugate()).value == pytest.approx(a.conjugate(), rel=1e-10)


def test_domain_tags():
    # BVP domain is Re p > 1 for the reference set
    assert eval_A(REFERENCE, 3 + 1j).domain_tag is DomainTag.INTERIOR
    assert eval_A(REFERENCE, 0.5j).domain_tag is DomainTag.CONTINUED
    with pytest.raises(DomainViolation):
        eval_A(REFERENCE, branch_points(REFERENCE).p1 - 1.0)


def test_L_guards():
    with pytest.raises(KernelZero):
        eval_L(PRODUCT, 1e-3, _q_on_curve(PRODUCT, 1e-3))
    A, B, L, _ = product_form(PRODUCT)
    v = eval_L(PRODUCT, 1e-8j, 2e-8j)
    assert v.value == pytest.approx(L(1e-8j, 2e-8j), abs=1e-6)


def _q_on_curve(params, p):
    from wedgerbm.curve import branch_Q

    return branch_Q(params, complex(p)).first


def test_comparison_table_rows():
    for params in (REFERENCE, NEG, POS, PRODUCT):
        t = comparison_table(params)
        cols = t["columns"]
        tq, qu = cols["three_quarter"], cols["quarter"]
        assert t["rows"] == ["hyperbola", "bvp_domain", "gluing", "pole", "index"]
        assert tq["bvp_domain"] == "H+" and qu["bvp_domain"] == "H-"
        assert tq["gluing"]["argument_sign"] == 1 and qu["gluing"]["argument_sign"] == -1
        assert tq["pole"]["sign"] == -1 and qu["pole"]["sign"] == 1
        assert tq["index"]["at"] == "q2" and qu["index"]["at"] == "q1"
        flip = {"H_p^+": "H_p^-", "H_p^-": "H_p^+", "line": "line"}
        assert flip[tq["hyperbola"]["component"]] == qu["hyperbola"]["component"]
