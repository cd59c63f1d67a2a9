"""Exit criteria.  Each test prints one ``ACCEPTANCE`` line; the lines are
repeated in the terminal summary (see conftest.py)."""

import math
import random

import numpy as np
import pytest

from fixpoint.diagnostics import egoroff_split, indicator_densities, tail_deviation, verify_residual_chain, zolezzi_check
from fixpoint.expr import ParseError, eval_ast, parse, pretty
from fixpoint.grid import GridFunction, make_uniform_grid, norm_sup
from fixpoint.operators import BoxSet, certify_strong_nonexpansive, from_expression, recheck_witness
from fixpoint.scenarios import (
    make_config,
    run_egoroff_command,
    run_example41,
    run_pipeline_command,
    run_solve_command,
    run_zolezzi_command,
)
from fixpoint.solver import NOT_IN_SET, DampingSchedule, approx_fixed_point_path, extract_pointwise_limit
from oracles import bisect, exhaustive_egoroff, expression_corpus, grid_max_gap

DOTTIE = 0.7390851332151607


@pytest.fixture
def report(request):
    lines = request.config._acceptance_lines

    def emit(criterion, ok, detail):
        line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        lines.append(line)
        return ok

    return emit


@pytest.fixture(scope="module")
def cos_pipeline():
    g = make_uniform_grid(0, 1, 64)
    K = BoxSet.box(g, -1.0, 1.0)
    T = from_expression("cos(u)")
    return g, T, approx_fixed_point_path(T, K, g, DampingSchedule.geometric(20))


def test_1_residual_identity(report, cos_pipeline):
    g, T, path = cos_pipeline
    worst = max(abs(s.residual_sup - (1 - s.lam) / s.lam * norm_sup(s.u)) for s in path.steps)
    assert report("1 residual identity", worst <= 1e-9, f"max deviation {worst:.3e} <= 1e-9 over {len(path)} steps")


def test_2_fixed_point_value(report, cos_pipeline):
    g, T, path = cos_pipeline
    oracle = bisect(lambda r: math.cos(r) - r, 0.0, 1.0, tol=1e-13)
    assert abs(oracle - DOTTIE) <= 1e-13
    vals = path.limit.values
    constant = bool(np.all(vals == vals[0]))
    err = float(np.max(np.abs(vals - oracle)))
    ok = constant and err <= 1e-6
    assert report("2 fixed-point value", ok, f"constant={constant}, sup error {err:.3e} <= 1e-6")


def test_3_certificate(report):
    g = make_uniform_grid(0, 1, 64, "node")
    pinned = BoxSet.box(g, 0.0, 1.0, pins=[(0, 0.0), (g.size - 1, 1.0)])
    good = certify_strong_nonexpansive(from_expression("x*u"), pinned, g, 10_000, seed=42)
    box = BoxSet.box(g, -1.0, 1.0)
    doubling = from_expression("2*u")
    bad = certify_strong_nonexpansive(doubling, box, g, 10_000, seed=42)
    genuine = bad.witness is not None and recheck_witness(doubling, bad.witness)
    ok = good.passed and good.samples_checked == 10_000 and not bad.passed and bad.samples_checked <= 10 and genuine
    assert report(
        "3 certificate",
        ok,
        f"x*u passed {good.samples_checked} samples; 2*u witness at sample {bad.samples_checked}, re-evaluated genuine={genuine}",
    )


@pytest.fixture(scope="module")
def example41():
    return run_example41(64, 200)


def test_4a_successive_gap(report, example41):
    gaps = example41.details["gaps"]
    exact = all(gaps[k] == pytest.approx(grid_max_gap(64, k), rel=1e-12) for k in range(201))
    ratios = {k: gaps[k] * math.e * (k + 2) for k in range(20, 201)}
    outside = [k for k, r in ratios.items() if not 0.5 <= r <= 2.0]
    ok = exact and not outside
    detail = (
        f"gaps match grid maximum: {exact}; ratio to 1/(e(k+2)) in "
        f"[{min(ratios.values()):.3f}, {max(ratios.values()):.3f}]"
    )
    if outside:
        detail += f"; outside factor 2 for k in [{outside[0]}, {outside[-1]}] ({len(outside)} steps)"
    assert report("4a example41 successive gap", ok, detail)


def test_4b_lipschitz_doubles(report, example41):
    fine = run_example41(128, 200)
    ratio = fine.details["lipschitz"] / example41.details["lipschitz"]
    ok = abs(ratio - 2.0) <= 0.02
    assert report("4b example41 Lipschitz doubling", ok, f"ratio {ratio:.4f} within 2 +/- 1%")


def test_4c_not_in_set(report, example41):
    d = example41.details
    ok = (
        example41.status == NOT_IN_SET
        and example41.certificate.passed
        and not d["zero_in_set"]
        and d["pin_preserving_translate"] is None
        and "precondition fails" in d["precondition"]
        and "no pin-preserving translate" in example41.summary
    )
    assert report("4c example41 status", ok, f"status={example41.status}; {d['precondition']}")


def test_5_egoroff_exhaustive(report):
    mismatches = []
    cases = 0
    for kind in ("interior", "node"):
        for n in range(2, 13):
            g = make_uniform_grid(0, 1, n, kind)
            seq = [g.function(lambda x, j=j: x**j) for j in range(1, 31)]
            zero = g.zeros()
            for J in (0, 5, 20):
                d = tail_deviation(seq, zero, J)
                for eps in (0.05, 0.1, 0.3):
                    cases += 1
                    got = egoroff_split(seq, zero, g, eps, J).uniform_tail_deviation
                    if got != exhaustive_egoroff(d, g.weights, eps):
                        mismatches.append((kind, n, J, eps))
    assert report("5 egoroff vs exhaustive", not mismatches, f"{cases} cases, {len(mismatches)} mismatches")


def test_6_residual_chain(report, cos_pipeline):
    g, T, path = cos_pipeline
    u, _ = extract_pointwise_limit(path, g, 5)
    reports = [verify_residual_chain(T, path, u, g, eps) for eps in (0.01, 0.1)]
    Tu = T(u)
    atomwise = all(
        np.all(np.abs(T(s.u).values - Tu.values) <= np.abs(s.u.values - u.values) + 1e-12) for s in path.steps
    )
    ok = all(r.chain_satisfied and r.transfer_holds for r in reports) and atomwise
    assert report(
        "6 residual chain",
        ok,
        "; ".join(f"eps={r.epsilon:g}: total {r.total:.3e} <= {r.c_bound * r.epsilon + r.complement_term:.3e}" for r in reports)
        + f"; atomwise transfer {atomwise}",
    )


def test_7_zolezzi(report):
    g = make_uniform_grid(0, 1, 64)
    rng = np.random.default_rng(7)
    u, v = GridFunction(g, rng.uniform(-1, 1, 64)), GridFunction(g, rng.uniform(-1, 1, 64))
    js = np.arange(10, 101)
    rep = zolezzi_check([u + v * (1.0 / j) for j in js], u, g, indicator_densities(g, 16), (1, 2))

    def spread(arr):
        scaled = js * arr
        return float(np.max(np.abs(scaled / scaled[0] - 1)))

    s1, s2, sg = spread(rep.distances[1]), spread(rep.distances[2]), spread(rep.gaps)
    ok = max(s1, s2, sg) <= 1e-10 and rep.consistent
    assert report("7 zolezzi", ok, f"relative spread of j*L1 {s1:.1e}, j*L2 {s2:.1e}, j*gap {sg:.1e} <= 1e-10")


def test_8_parser(report):
    corpus = expression_corpus(seed=2024, count=200)
    round_trip = sum(pretty(parse(t)) == t for t, _, _ in corpus)
    rng = random.Random(99)
    points = [(rng.uniform(-3, 3), rng.uniform(-3, 3)) for _ in range(1000)]
    worst = 0.0
    poly_exact = True
    for text, _, ref in corpus:
        ast = parse(text)
        polynomial = not any(f + "(" in text for f in ("sin", "cos", "tanh", "abs", "min", "max"))
        for x, s in points:
            a, b = eval_ast(ast, x, s), ref(x, s)
            if polynomial:
                poly_exact &= a == b
            elif a != b:
                worst = max(worst, abs(a - b) / abs(b))
    offsets = {}
    for text, expected in (("x*(u", 2), ("x # u", 2), ("sqrt(u)", 0)):
        try:
            parse(text)
            offsets[text] = None
        except ParseError as exc:
            offsets[text] = exc.offset == expected
    ok = round_trip == 200 and poly_exact and worst <= 1e-15 and all(offsets.values())
    assert report(
        "8 parser",
        ok,
        f"{round_trip}/200 round trips; polynomials exact={poly_exact}; worst relative error {worst:.1e}; offsets {offsets}",
    )


def test_9_determinism(report, tmp_path):
    runs = {
        "pipeline": lambda c: run_pipeline_command(c),
        "egoroff": lambda c: run_egoroff_command(c),
        "zolezzi": lambda c: run_zolezzi_command(c),
        "solve": lambda c: run_solve_command(c),
        "example41": lambda c: run_example41(64, 200, out=c.out),
    }
    same = {}
    for name, run in runs.items():
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{name}-{rep}.csv"
            run(make_config(operator="cos(u)", seed=17, out=str(out)))
            blobs.append(out.read_bytes())
        same[name] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    assert report("9 determinism", all(same.values()), f"byte-identical: {same}")
