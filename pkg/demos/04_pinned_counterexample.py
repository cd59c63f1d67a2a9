"""
A pinned set without a continuous fixed point
=============================================

K = {u : u(0)=0, u(1)=1, 0 <= u <= 1} and T(u)(x) = x*u(x).  T maps K into
itself and is pointwise nonexpansive, but every iterate sequence converges
to the step function that is 0 on [0, 1) and 1 at x = 1.  On a grid that
limit is perfectly admissible; its discrete Lipschitz constant, however,
grows like 1/h, so it is not the trace of any continuous function in K.
"""

import math

from fixpoint.scenarios import run_example41

art = run_example41(grid_n=64, picard_steps=200)
print(art.summary)

gaps = art.details["gaps"]
print()
print(f"{'k':>4} {'gap':>12} {'1/(e(k+2))':>12} {'ratio':>8}")
for k in (0, 5, 20, 50, 100, 150, 200):
    ref = 1 / (math.e * (k + 2))
    print(f"{k:>4} {gaps[k]:12.4e} {ref:12.4e} {gaps[k] / ref:8.3f}")

print()
for n in (32, 64, 128, 256):
    print(f"grid_n={n:>4}: Lipschitz constant of the limit {run_example41(n, 200).details['lipschitz']:.2f}")
