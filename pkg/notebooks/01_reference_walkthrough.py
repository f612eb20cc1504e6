"""
The reference model, step by step
==================================

Kernel curve, gluing function and boundary transforms for the
three-quarter plane model with unit covariance, drift (-1, -3) and
reflection slopes r1 = 0.5, r2 = 4.
"""
import numpy as np

import wedgerbm as w

params = w.REFERENCE
print(params)

# mass constants: the boundary measures have total mass A0 and B0
a0, b0 = w.mass_constants(params)
print("A0 =", a0, " B0 =", b0)

# the kernel is quadratic; its discriminants vanish at four real points
bp = w.branch_points(params)
print("q1, q2 =", bp.q1, bp.q2)
print("p1, p2 =", bp.p1, bp.p2)

# the two branches P(q) on the cut [q2, inf) are complex conjugate
q = np.linspace(bp.q2, bp.q2 + 20, 5)
P = w.branch_P(params, q + 0j, bp)
print("P(q) on the cut:\n", np.round(P.first, 4))

# rational parametrization of the curve: K(p(s), q(s)) = 0
s = np.exp(1j * np.linspace(0.1, 3.0, 4)) * 1.7
p_s, q_s = w.uniformize(params, s)
print("|K(p(s), q(s))| =", np.abs(w.kernel_K(params, p_s, q_s)).max())

# the gluing function takes the same value at conjugate contour points
t = P.first[1:]
print("w(t) - w(conj t) =", np.abs(w.glue_w(params, t) - w.glue_w(params, np.conj(t))).max())

# index and pole of the boundary value problem
print("chi =", w.index_chi(params), " p0 =", w.pole_p0(params))

# transform of the first boundary measure; A(0) recovers the mass
for p in (1e-6, 0.5, 2.0, 2.0 + 1j):
    v = w.eval_A(params, p)
    print(f"A({p}) = {complex(v.value):.10f}  [{v.domain_tag.value}]")

# the same column for the quarter-plane counterpart
table = w.comparison_table(params)
for wedge, col in table["columns"].items():
    print(wedge, col["hyperbola"]["component"], col["bvp_domain"], "chi =", col["index"]["chi"])
