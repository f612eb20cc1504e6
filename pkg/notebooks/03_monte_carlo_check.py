"""
Monte Carlo check of the transforms
====================================

Simulate the reflected process, estimate occupation and local-time
transforms, and compare the basic adjoint relation
K L + u A + v B = 0 with the analytic pipeline.  The quarter-plane
product-form model agrees; in the three-quarter plane the empirical
relation holds while the analytic transforms do not reproduce it (see
README).
"""
import wedgerbm as w

config = w.SimConfig(dt=2e-3, horizon=2e3, n_paths=8, seed=1)

quarter = w.validate_params(w.RawParams(1.0, 1.0, 0.5, -1.0, -1.0, 0.4, 0.6, "quarter"))
for name, params in (("quarter", quarter), ("three-quarter", w.REFERENCE)):
    meas = w.run(params, config)
    rep = w.validation_report(params, meas)
    bm = rep["boundary_mass"]
    print(f"{name}: A0={bm['A0']:.3f} est {bm['A0_hat']:.3f}, B0={bm['B0']:.3f} est {bm['B0_hat']:.3f}")
    print(f"  panel points passing: analytic {rep['passed']}/25,"
          f" empirical relation {rep['empirical_passed']}/25")
    et = w.empirical_transform(meas, 2j, 0j)
    print(f"  A(2i): simulated {et.A:.3f}  analytic {complex(w.eval_A(params, 2j).value):.3f}")
