"""
Approaching a fixed point through damped problems
=================================================

For lam < 1 the damped map lam*T is a contraction, so u = lam*T(u) has a
unique solution found by Picard iteration.  Letting lam -> 1 along a
schedule drives the residual |T(u) - u| to zero.
"""


from fixpoint import BoxSet, DampingSchedule, approx_fixed_point_path, from_expression, make_uniform_grid, norm_sup

g = make_uniform_grid(0.0, 1.0, 64)
K = BoxSet.box(g, -1.0, 1.0)
T = from_expression("cos(u)")

path = approx_fixed_point_path(T, K, g, DampingSchedule.geometric(20))
print(f"{'n':>3} {'lambda':>12} {'residual':>12} {'(1-l)/l*|u|':>12} {'inner':>6}")
for n, s in enumerate(path.steps, 1):
    print(f"{n:>3} {s.lam:12.8f} {s.residual_sup:12.3e} {(1 - s.lam) / s.lam * norm_sup(s.u):12.3e} {s.inner_iterations:>6}")

print("status:", path.status)
print("limit value:", path.limit.values[0], "  solution of cos r = r:", 0.7390851332151607)

# A slower schedule gets less far in the same number of steps.
slow = approx_fixed_point_path(T, K, g, DampingSchedule.harmonic(20))
print("harmonic schedule status:", slow.status, "final residual", slow.steps[-1].residual_sup)
