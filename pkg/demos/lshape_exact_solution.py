"""
Adaptive run on the L-shape with a known solution
=================================================

The solution ``r^(2/3) sin(2 phi/3)`` has a singular gradient at the
re-entrant corner, so uniform meshes lose accuracy there. Adaptive
refinement restores the rate ``ndofs^(-1/2)`` for the H1 error, also when
measured against the cumulative work of all Zarantonello steps.
"""
import numpy as np

from zarafem import AdaptiveParams, benchmark2, fit_rate, run

problem = benchmark2()

# Zarantonello damping 1.5 with the scalar product weighted by the exact
# solution; inner iterations stop once ||z|| <= 0.1 * zeta
params = AdaptiveParams(theta=0.5, lam=0.1, delta=1.5, scalar_product="mu", max_dofs=30_000)
log = run(problem, params)

print(" ell  ndofs  k   zeta        H1 error    cumulative cost")
for r in log.final_records():
    print(f"{r.ell:4d} {r.ndofs:6d} {r.k:2d}  {r.zeta:.4e}  {r.h1_error:.4e}  {r.cum_cost}")

finals = log.final_records()
cost = np.array([r.cum_cost for r in finals])
err = np.array([r.h1_error for r in finals])
print("error vs cumulative cost, fitted slope:", round(fit_rate(cost, err, 8).slope, 3))

# after the first level a couple of steps per mesh suffice thanks to nested iteration
print("inner steps per level:", log.k_underline)
