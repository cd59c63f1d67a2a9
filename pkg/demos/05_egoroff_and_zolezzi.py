"""
Exceptional sets and weak-versus-strong convergence
===================================================

x**j tends to 0 at every x < 1 but not uniformly.  Removing a set of small
measure near x = 1 restores uniform convergence on the rest.  The same
sequence also shows pairing gaps against test densities and L^p distances
shrinking together.
"""


from fixpoint import egoroff_split, indicator_densities, make_uniform_grid, zolezzi_check

g = make_uniform_grid(0.0, 1.0, 32)
seq = [g.function(lambda x, j=j: x**j) for j in range(60)]
zero = g.zeros()

for eps in (0.05, 0.1, 0.2, 0.4):
    rep = egoroff_split(seq, zero, g, eps, J=10)
    print(
        f"eps={eps:<5} removed atoms {list(rep.exceptional_atoms)} "
        f"(measure {rep.exceptional_measure:.4f}), tail deviation elsewhere {rep.uniform_tail_deviation:.3e}"
    )

rep = zolezzi_check(seq[1:], zero, g, indicator_densities(g, 16), (1, 2))
print(rep)
for j in (1, 5, 20, 58):
    print(f"j={j:>2}: gap {rep.gaps[j - 1]:.3e}  L1 {rep.distances[1][j - 1]:.3e}  L2 {rep.distances[2][j - 1]:.3e}")
