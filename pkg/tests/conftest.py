import pytest

from wedgerbm.model import REFERENCE, RawParams, Wedge, validate_params


def make(*args, wedge=Wedge.THREE_QUARTER):
    return validate_params(RawParams(*args, wedge=wedge))


# three-quarter sets covering rho < 0, rho = 0, rho > 0 (the last with chi = -1)
NEG = make(1.0, 1.0, -0.4, -1.0, -2.0, 1.0, 3.0)
ZERO = REFERENCE
POS = make(1.0, 1.0, 0.7, -1.0, -1.0, 3.0, 2.0)
POS_CHI = make(1.0, 1.0, 0.9, -1.0, -1.0, 3.0, 2.0)
# quarter-plane set with a product-form stationary law (2 rho = r1 sigma2 + r2 sigma1)
PRODUCT = make(1.0, 1.0, 0.5, -1.0, -1.0, 0.4, 0.6, wedge=Wedge.QUARTER)
PRODUCT_CHI = make(1.0, 0.5, 0.175, -1.0, -1.0, 0.5, 0.1, wedge=Wedge.QUARTER)

THREE_QUARTER_SETS = {"rho_neg": NEG, "rho_zero": ZERO, "rho_pos": POS, "rho_pos_chi": POS_CHI}


@pytest.fixture
def reference():
    return REFERENCE


def product_form(params):
    """Exact ``(A, B, L)`` callables for a skew-symmetric quarter-plane set.

    The stationary law is the product of exponentials with rates ``gamma``,
    so every transform is rational.
    """
    d = 1.0 - params.r1 * params.r2
    c1 = params.mu1 - params.r1 * params.mu2
    c2 = params.mu2 - params.r2 * params.mu1
    g1 = -2.0 * c1 / (d * params.sigma1)
    g2 = -2.0 * c2 / (d * params.sigma2)
    a0 = (params.mu1 * params.r2 - params.mu2) / (1.0 - params.r1 * params.r2)
    b0 = (params.mu2 * params.r1 - params.mu1) / (1.0 - params.r1 * params.r2)
    return (lambda p: a0 * g1 / (g1 - p),
            lambda q: b0 * g2 / (g2 - q),
            lambda p, q: g1 * g2 / ((g1 - p) * (g2 - q)),
            (g1, g2))


def bc_residual(params, n=200):
    """Relative residual of ``g(t) A(t) - g(conj t) A(conj t)`` on ``n`` contour points."""
    import numpy as np

    from wedgerbm.bvp import _solution, g_func

    sol = _solution(params, 1e-12)
    tau = sol.scale * np.geomspace(1e-3, 1e2, n)
    t, Au, Al, _, _ = sol.boundary(sol.q_of_tau(tau))
    gu = g_func(params, t, sol.bp, sol.branch)
    gl = g_func(params, np.conj(t), sol.bp, sol.branch)
    num = np.abs(gu * Au - gl * Al)
    return num / np.maximum(np.abs(gu * Au), np.abs(gl * Al))


def kernel_identity_residual(params, n=100, sign=1.0):
    """Relative residual of ``u A(t) + sign * v B(q)`` at ``t = P(q + i0)`` on the contour."""
    import numpy as np

    from wedgerbm.bvp import _solution
    from wedgerbm.model import reflection_u, reflection_v, swap_params

    sa = _solution(params, 1e-12)
    sb = _solution(swap_params(params), 1e-12)
    tau = sa.scale * np.geomspace(1e-2, 1e2, n)
    q = sa.q_of_tau(tau)
    t, Au, _, _, _ = sa.boundary(q)
    Bq, _, _ = sb.evaluate(q + 0j)
    uA = reflection_u(params, t, q) * Au
    vB = reflection_v(params, t, q) * Bq
    return np.abs(uA + sign * vB) / np.maximum(np.abs(uA), np.abs(vB))


# -- acceptance summary ------------------------------------------------------------
ACCEPTANCE: dict = {}


def record(key, ok: bool, detail: str, seconds: float):
    line = f"{key}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f} s]"
    ACCEPTANCE[key] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (len(k.split()[1]), k)):
        terminalreporter.write_line(ACCEPTANCE[key])
