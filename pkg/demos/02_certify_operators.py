"""
Certifying pointwise nonexpansive operators
===========================================

Operators are written as expressions in ``x`` and ``u``.  The certifier
samples pairs inside a box and looks for an atom where
|T(u)(x) - T(v)(x)| > |u(x) - v(x)|.  The interval bound on d/du is a
sufficient condition that needs no sampling.
"""

from fixpoint import BoxSet, certify_strong_nonexpansive, from_expression, lipschitz_bound_in_u, make_uniform_grid
from fixpoint.operators import compose, convex_combine, recheck_witness

g = make_uniform_grid(0.0, 1.0, 64, "node")
K = BoxSet.box(g, -1.0, 1.0)

for text in ["x*u", "cos(u)", "0.5*u + 0.25*sin(u)", "min(u, 1 - u)", "2*u", "u + 0.1*sin(20*u)"]:
    T = from_expression(text)
    bound = lipschitz_bound_in_u(T.ast, K)
    report = certify_strong_nonexpansive(T, K, g, samples=5000, seed=42)
    print(f"{text:<22} interval bound {bound!s:<20} {report}")
    if report.witness is not None:
        # a witness is a concrete counterexample that can be replayed
        assert recheck_witness(T, report.witness)

# The class is closed under averaging and composition.
a, b = from_expression("x*cos(u)"), from_expression("tanh(u)")
for name, T in [("average", convex_combine(0.5, a, b)), ("composition", compose(a, b))]:
    print(name, certify_strong_nonexpansive(T, K, g, 5000, seed=1))
