from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixpoint.diagnostics import (
    egoroff_split,
    indicator_densities,
    tail_deviation,
    verify_residual_chain,
    zolezzi_check,
)
from fixpoint.errors import InvalidArgument
from fixpoint.grid import GridFunction, integrate_abs_diff, make_uniform_grid, norm_sup
from fixpoint.operators import BoxSet, apply, from_expression, identity
from fixpoint.scenarios import example41_limit
from fixpoint.solver import approx_fixed_point_path, extract_pointwise_limit
from oracles import exhaustive_egoroff


def powers(g, count):
    return [g.function(lambda x, j=j: x**j) for j in range(count)]


def test_egoroff_constant_sequence():
    g = make_uniform_grid(0, 1, 8)
    u = g.function(np.cos)
    rep = egoroff_split([u] * 5, u, g, 0.2, 1)
    assert rep.exceptional_atoms == () and rep.uniform_tail_deviation == 0.0


def test_egoroff_powers_interior_32():
    g = make_uniform_grid(0, 1, 32)
    rep = egoroff_split(powers(g, 40), g.zeros(), g, 0.1, 10)
    # exact arithmetic: tail sup of x^j for j >= 10 is x^10, increasing in x,
    # so the heaviest deviations are the rightmost atoms; 3 cells of 1/32 fit under 0.1
    xs = [Fraction(2 * i + 1, 64) for i in range(32)]
    dev = [x**10 for x in xs]
    order = sorted(range(32), key=lambda i: (-dev[i], i))
    chosen, w = [], Fraction(0)
    for i in order:
        if w + Fraction(1, 32) >= Fraction(1, 10):
            break
        w += Fraction(1, 32)
        chosen.append(i)
    assert sorted(chosen) == [29, 30, 31]
    assert rep.exceptional_atoms == (29, 30, 31)
    assert rep.exceptional_measure == pytest.approx(3 / 32, abs=1e-16)
    assert rep.uniform_tail_deviation == pytest.approx(float(xs[28] ** 10), rel=1e-14)


def test_egoroff_large_eps_excludes_everything():
    g = make_uniform_grid(0, 1, 6, "node")
    rep = egoroff_split(powers(g, 5), g.zeros(), g, 1.5, 0)
    assert len(rep.exceptional_atoms) == 6 and rep.uniform_tail_deviation == 0.0


def test_egoroff_arguments():
    g = make_uniform_grid(0, 1, 4)
    seq = powers(g, 3)
    with pytest.raises(InvalidArgument):
        egoroff_split(seq, g.zeros(), g, 0.0, 0)
    with pytest.raises(InvalidArgument):
        egoroff_split(seq, g.zeros(), g, 0.1, 3)


@pytest.mark.parametrize("kind", ["interior", "node"])
@pytest.mark.parametrize("n", [2, 5, 9])
def test_egoroff_matches_exhaustive(kind, n):
    g = make_uniform_grid(0, 1, n, kind)
    seq = powers(g, 12)
    for eps in (0.05, 0.1, 0.3, 0.6):
        rep = egoroff_split(seq, g.zeros(), g, eps, 4)
        d = tail_deviation(seq, g.zeros(), 4)
        assert rep.uniform_tail_deviation == exhaustive_egoroff(d, g.weights, eps)
        assert rep.exceptional_measure < eps


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 10), min_size=7, max_size=7),
    st.lists(st.floats(0.01, 1), min_size=7, max_size=7),
    st.floats(0.01, 2),
    st.floats(0.01, 2),
)
def test_egoroff_optimal_and_monotone_on_random_weights(dev, w, e1, e2):
    from fixpoint.grid import MeasureGrid

    g = MeasureGrid(np.arange(7.0), w)
    u = g.zeros()
    seq = [GridFunction(g, dev), u]
    lo, hi = sorted((e1, e2))
    a = egoroff_split(seq, u, g, lo, 0)
    b = egoroff_split(seq, u, g, hi, 0)
    assert b.uniform_tail_deviation <= a.uniform_tail_deviation
    assert a.uniform_tail_deviation == exhaustive_egoroff(dev, w, lo)


@pytest.fixture(scope="module")
def cos_run():
    g = make_uniform_grid(0, 1, 64)
    K = BoxSet.box(g, -1.0, 1.0)
    T = from_expression("cos(u)")
    path = approx_fixed_point_path(T, K, g)
    u, _ = extract_pointwise_limit(path, g, 5)
    return g, T, path, u


def test_chain_identity_operator():
    g = make_uniform_grid(0, 1, 16)
    K = BoxSet.box(g, -1.0, 1.0)
    path = approx_fixed_point_path(identity(), K, g)
    for eps in (1e-6, 0.5):
        rep = verify_residual_chain(identity(), path, path.limit, g, eps)
        assert rep.total == 0.0 and rep.chain_satisfied


@pytest.mark.parametrize("eps", [0.01, 0.1])
def test_chain_cos_pipeline(cos_run, eps):
    g, T, path, u = cos_run
    rep = verify_residual_chain(T, path, u, g, eps)
    assert rep.chain_satisfied and rep.transfer_holds
    # the tail mean of the last five iterates sits within ~1e-5 of the fixed point
    assert rep.total <= 1e-4 * g.total_measure


def test_chain_cos_pipeline_final_iterate(cos_run):
    g, T, path, _ = cos_run
    rep = verify_residual_chain(T, path, path.limit, g, 0.01)
    assert rep.total <= 1e-6 * g.total_measure


def test_chain_fields_recompute(cos_run):
    g, T, path, u = cos_run
    rep = verify_residual_chain(T, path, u, g, 0.1)
    Tu = apply(T, u, g)
    assert rep.total == integrate_abs_diff(Tu, u, g)
    assert rep.c_bound == max(max(s.residual_sup for s in path.steps), norm_sup(Tu - u))
    mask = rep.egoroff.complement_mask
    for s, term, bound in zip(path.steps, rep.step_terms, rep.step_bounds):
        assert term == integrate_abs_diff(apply(T, s.u, g), Tu, g, mask)
        assert bound == integrate_abs_diff(s.u, u, g, mask)
        assert term <= bound + 1e-15
    assert rep.complement_term == rep.step_terms[-1]
    assert rep.chain_satisfied == (rep.total <= rep.c_bound * rep.epsilon + rep.complement_term + 1e-9)


def test_transfer_inequality_every_subset(cos_run):
    g, T, path, u = cos_run
    rng = np.random.default_rng(3)
    Tu = apply(T, u, g)
    for s in path.steps:
        Ts = apply(T, s.u, g)
        for _ in range(5):
            mask = rng.random(g.size) < 0.5
            assert integrate_abs_diff(Ts, Tu, g, mask) <= integrate_abs_diff(s.u, u, g, mask) + 1e-15


def test_chain_on_pinned_example_without_continuous_fixed_point():
    g, T, K, path, limit = example41_limit(64, 200)
    rep = verify_residual_chain(T, path, limit, g, 0.1)
    assert rep.chain_satisfied
    # the grid limit is a step function: the estimate holds, the continuity does not
    assert limit.values[-1] == 1.0 and abs(limit.values[-2]) < 1e-12


def test_indicator_densities_normalised():
    for kind in ("interior", "node"):
        g = make_uniform_grid(0, 1, 64, kind)
        dens = indicator_densities(g, 16)
        assert len(dens) == 16
        for d in dens:
            assert float(np.dot(g.weights, np.abs(d.values))) == pytest.approx(1.0, abs=1e-14)
        np.testing.assert_allclose(sum(d.values * 0 + (d.values > 0) for d in dens), 1.0)


def test_zolezzi_linear_decay():
    g = make_uniform_grid(0, 1, 64)
    rng = np.random.default_rng(7)
    u, v = GridFunction(g, rng.uniform(-1, 1, 64)), GridFunction(g, rng.uniform(-1, 1, 64))
    js = np.arange(10, 101)
    seq = [u + v * (1.0 / j) for j in js]
    rep = zolezzi_check(seq, u, g, indicator_densities(g, 16), (1, 2))
    for arr in [rep.gaps] + list(rep.distances.values()):
        scaled = js * arr
        assert np.max(np.abs(scaled / scaled[0] - 1)) <= 1e-10
    assert rep.consistent


def test_zolezzi_constant_sequence():
    g = make_uniform_grid(0, 1, 8)
    u = g.function(np.sin)
    rep = zolezzi_check([u] * 4, u, g, indicator_densities(g, 4), (1, 3))
    assert np.all(rep.gaps == 0) and all(np.all(d == 0) for d in rep.distances.values())
    assert rep.consistent


def test_zolezzi_powers():
    g = make_uniform_grid(0, 1, 64)
    seq = powers(g, 60)[1:]
    rep = zolezzi_check(seq, g.zeros(), g, indicator_densities(g, 16), (1, 2))
    for j, dist in enumerate(rep.distances[1], start=1):
        assert dist == pytest.approx(float(np.dot(g.weights, g.atoms**j)), rel=1e-13)
    assert rep.gaps[-1] < rep.gaps[len(seq) // 2]
    assert rep.consistent


def test_zolezzi_flags_inconsistent_sequence():
    # gaps vanish against these two coarse densities while L1 distance stays put
    g = make_uniform_grid(0, 1, 8)
    osc = GridFunction(g, [1, -1] * 4)
    dens = indicator_densities(g, 2)
    seq = [g.zeros() + osc * (0.5 + 0.5 / j) + 0.3 / j for j in range(1, 20)]
    rep = zolezzi_check(seq, osc * 0.5, g, dens, (1,))
    assert rep.consistent  # distance shrinks too
    grow = [osc * (1 - 1.0 / j) + 1.0 / j**2 for j in range(1, 20)]
    rep = zolezzi_check(grow, g.zeros(), g, dens, (1,))
    assert rep.gaps[-1] < rep.gaps[9]
    assert not rep.consistent


def test_zolezzi_arguments():
    g = make_uniform_grid(0, 1, 8)
    with pytest.raises(InvalidArgument):
        zolezzi_check([g.zeros()], g.zeros(), g, [], (1,))
    with pytest.raises(InvalidArgument):
        zolezzi_check([g.zeros()], g.zeros(), g, [g.function(5.0)], (1,))
