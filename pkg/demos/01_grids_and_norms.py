"""
Weighted grids and norms
========================

A finite measure space becomes a list of atoms with positive weights.
Integrals are weighted sums and the essential sup is a max over atoms.
"""

import numpy as np

from fixpoint import integrate_abs_diff, make_uniform_grid, norm_p, norm_sup

# Midpoint cells for L-infinity style work, endpoint nodes when boundary values matter.
inner = make_uniform_grid(0.0, 1.0, 4, "interior")
nodes = make_uniform_grid(0.0, 1.0, 5, "node")
print("interior atoms ", inner.atoms, "weights", inner.weights)
print("node atoms     ", nodes.atoms, "weights", nodes.weights)

# Both quadratures are exact on affine functions.
f = inner.function(lambda x: x)
print("int x dx       =", norm_p(f, 1, inner))
print("sup |x - 1/2|  =", norm_sup(inner.function(lambda x: x - 0.5)))

# On a finite measure space every L^p norm is bounded by the sup norm.
g = make_uniform_grid(0.0, 2.0, 200)
h = g.function(lambda x: np.sin(5 * x) * np.exp(-x))
for p in (1, 2, 4, 16):
    print(f"p={p:>2}: |h|_p = {norm_p(h, p, g):.6f} <= {g.total_measure ** (1 / p) * norm_sup(h):.6f}")

# Integrating over part of the domain only.
right_half = np.flatnonzero(g.atoms > 1.0)
print("int_{x>1} |h| =", integrate_abs_diff(h, g.zeros(), g, right_half))
