"""Independent reference computations used to freeze expected values.

Nothing here imports the package under test.
"""

import itertools
import math
import random


def bisect(f, a, b, tol=1e-13):
    fa = f(a)
    if fa == 0:
        return a
    assert (fa > 0) != (f(b) > 0), "root not bracketed"
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def damped_cos_root(lam):
    """r = lam*cos(r) on [0, 1]."""
    return bisect(lambda r: r - lam * math.cos(r), 0.0, 1.0)


def exhaustive_egoroff(deviation, weights, eps):
    """Smallest achievable max deviation off a removed subset of weight < eps."""
    n = len(deviation)
    best = math.inf
    for mask in itertools.product((False, True), repeat=n):
        w = sum(wi for wi, m in zip(weights, mask) if m)
        if w >= eps:
            continue
        rest = [d for d, m in zip(deviation, mask) if not m]
        best = min(best, max(rest) if rest else 0.0)
    return best


def grid_max_gap(n_nodes, k):
    """max over nodes x_i = i/(n-1) of x**(k+1) * (1 - x), by direct enumeration."""
    return max((i / (n_nodes - 1)) ** (k + 1) * (1 - i / (n_nodes - 1)) for i in range(n_nodes))


# -- random expressions ------------------------------------------------------
#
# Each generator returns (text, precedence, evaluator).  Text is emitted with
# the minimal parenthesisation for a left-associative grammar, so a correct
# parser + printer must reproduce it exactly.

_LITERALS = ["0.5", "2", "0.25", "3", "1.5", "0.125", "4", "0.75"]
_UNARY = {"sin": math.sin, "cos": math.cos, "tanh": math.tanh, "abs": abs}
_BINARY = {"min": min, "max": max}


def _lit(rng):
    t = rng.choice(_LITERALS)
    v = float(t)
    return t, 3, lambda x, s: v


def _leaf(rng):
    r = rng.random()
    if r < 0.35:
        return "x", 3, lambda x, s: x
    if r < 0.75:
        return "u", 3, lambda x, s: s
    return _lit(rng)


def random_expression(rng, depth=4, transcendental=True):
    if depth == 0 or rng.random() < 0.2:
        return _leaf(rng)
    kinds = ["bin", "bin", "bin", "neg"] + (["call", "call"] if transcendental else [])
    kind = rng.choice(kinds)
    if kind == "neg":
        t, p, f = random_expression(rng, depth - 1, transcendental)
        if p < 3 or t.startswith("-"):
            t = f"({t})"
        return "-" + t, 3, lambda x, s: -f(x, s)
    if kind == "call":
        if rng.random() < 0.7:
            name = rng.choice(sorted(_UNARY))
            t, _, f = random_expression(rng, depth - 1, transcendental)
            fn = _UNARY[name]
            return f"{name}({t})", 3, lambda x, s: fn(f(x, s))
        name = rng.choice(sorted(_BINARY))
        t1, _, f1 = random_expression(rng, depth - 1, transcendental)
        t2, _, f2 = random_expression(rng, depth - 1, transcendental)
        fn = _BINARY[name]
        return f"{name}({t1}, {t2})", 3, lambda x, s: fn(f1(x, s), f2(x, s))
    op = rng.choice("+-*/")
    prec = 1 if op in "+-" else 2
    lt, lp, lf = random_expression(rng, depth - 1, transcendental)
    if op == "/":
        rt, rp, rf = _lit(rng)
    else:
        rt, rp, rf = random_expression(rng, depth - 1, transcendental)
    if lp < prec:
        lt = f"({lt})"
    if rp <= prec:
        rt = f"({rt})"
    ops = {
        "+": lambda a, b: a + b,
        "-": lambda a, b: a - b,
        "*": lambda a, b: a * b,
        "/": lambda a, b: a / b,
    }[op]
    return f"{lt} {op} {rt}", prec, lambda x, s: ops(lf(x, s), rf(x, s))


def expression_corpus(seed, count, transcendental=True, depth=4):
    rng = random.Random(seed)
    return [random_expression(rng, depth, transcendental) for _ in range(count)]
