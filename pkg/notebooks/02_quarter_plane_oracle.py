"""
Quarter plane with product-form stationary law
===============================================

When 2 rho = r1 sigma2 + r2 sigma1 the stationary density in the quarter
plane is a product of exponentials, so every transform is explicit.  The
boundary value problem solver and the numerical inversion are checked
against it here.
"""
import numpy as np

import wedgerbm as w

params = w.validate_params(w.RawParams(1.0, 1.0, 0.5, -1.0, -1.0, 0.4, 0.6, "quarter"))
a0, b0 = w.mass_constants(params)

# exponential rates of the product form
c1 = params.mu1 - params.r1 * params.mu2
c2 = params.mu2 - params.r2 * params.mu1
d = 1 - params.r1 * params.r2
g1 = -2 * c1 / (d * params.sigma1)
g2 = -2 * c2 / (d * params.sigma2)
print("rates:", g1, g2, " pole p0 =", w.pole_p0(params))

for p in (0.1, 0.5j, -0.5 + 2j):
    exact = a0 * g1 / (g1 - p)
    num = complex(w.eval_A(params, p).value)
    print(f"A({p}): solver {num:.12f}  exact {exact:.12f}")

for p, q in ((0.2, 0.3), (1j, -1j)):
    exact = g1 * g2 / ((g1 - p) * (g2 - q))
    print(f"L({p},{q}): solver {complex(w.eval_L(params, p, q).value):.10f}  exact {exact:.10f}")

# boundary density of the first measure: a0 * g1 * exp(-g1 z) on z > 0
z = np.array([0.25, 1.0, 3.0])
nu = w.invert_nu1(params, z)
print("nu1 inverted:", np.round(nu, 6))
print("nu1 exact:   ", np.round(a0 * g1 * np.exp(-g1 * z), 6))

grid = w.pi_grid(params, (0.0, 10.0, 0.1), (0.0, 10.0, 0.1))
print("mass of pi on [0,10]^2:", grid.mass())
