"""
Choice of scalar product
========================

The linear problem solved in each Zarantonello step can use the plain H1
product, the product weighted by mu(|grad u*|^2), or the product weighted by
the current iterate (a Kacanov-type update). The weighted variants adapt to
the nonlinearity and reach a given accuracy with less work.
"""
from zarafem.report import table1_sweep

rows = table1_sweep(lambdas=(0.1,), deltas=(0.5, 1.5), error_tol=2e-2)
for row in rows:
    print(f"delta={row['delta']:<4} {row['scalar_product']:<8} "
          f"error*sqrt(cost)={row['weighted_cost']:.2f}  dofs={row['final_ndofs']}")
