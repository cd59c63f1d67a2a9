"""Pointwise operators T(u)(x) = rule(x, u(x)), box-shaped convex sets, and
the sampling certifier for the pointwise 1-Lipschitz condition

    |T(u)(x) - T(v)(x)| <= |u(x) - v(x)|   for every atom x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import expr as _expr
from .errors import InvalidArgument, OperatorEvaluationError
from .grid import GridFunction, MeasureGrid

CERTIFICATE_TOL = 1e-12
MEMBERSHIP_TOL = 1e-9

Rule = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PointwiseOperator:
    """A map acting atom by atom.

    ``rule(x, s)`` must be vectorised: ``x`` holds atom positions and ``s``
    values of the same (or a broadcastable) shape.
    """

    rule: Rule
    description: str = "<operator>"
    ast: Optional[object] = field(default=None, compare=False)

    def __call__(self, u: GridFunction) -> GridFunction:
        return apply(self, u, u.grid)

    def __repr__(self):
        return f"PointwiseOperator({self.description!r})"


def from_expression(text: str) -> PointwiseOperator:
    """Build an operator from an expression in ``x`` and ``u``."""
    ast = _expr.parse(text)

    def rule(x, s):
        return _expr.evaluate(ast, x, s)

    return PointwiseOperator(rule, _expr.pretty(ast), ast)


def identity() -> PointwiseOperator:
    return PointwiseOperator(lambda x, s: np.broadcast_to(s, np.broadcast(x, s).shape), "u")


def _evaluate(T: PointwiseOperator, x, s) -> np.ndarray:
    try:
        out = np.asarray(T.rule(x, s), dtype=float)
    except _expr.EvaluationError as exc:
        raise OperatorEvaluationError(
            f"{T.description}: {exc}", atom=exc.atom
        ) from exc
    out = np.broadcast_to(out, np.broadcast(x, s).shape)
    bad = ~np.isfinite(out)
    if bad.any():
        atom = int(np.argwhere(bad)[0][-1])
        raise OperatorEvaluationError(
            f"{T.description} produced a non-finite value at atom {atom}", atom=atom
        )
    return out


def apply(T: PointwiseOperator, u: GridFunction, g: MeasureGrid) -> GridFunction:
    if u.grid != g:
        raise InvalidArgument("function is not defined on the given grid")
    return GridFunction(g, _evaluate(T, g.atoms, u.values))


def scale(lam: float, T: PointwiseOperator) -> PointwiseOperator:
    """The damped map lam*T; a pointwise lam-contraction when T is nonexpansive."""
    if not 0 < lam <= 1:
        raise InvalidArgument(f"scale factor must lie in (0, 1], got {lam}")
    rule = T.rule
    return PointwiseOperator(lambda x, s: lam * rule(x, s), f"{lam!r}*({T.description})")


def convex_combine(theta: float, T1: PointwiseOperator, T2: PointwiseOperator) -> PointwiseOperator:
    if not 0 <= theta <= 1:
        raise InvalidArgument(f"theta must lie in [0, 1], got {theta}")
    r1, r2 = T1.rule, T2.rule
    return PointwiseOperator(
        lambda x, s: theta * r1(x, s) + (1 - theta) * r2(x, s),
        f"{theta!r}*({T1.description}) + {1 - theta!r}*({T2.description})",
    )


def compose(T1: PointwiseOperator, T2: PointwiseOperator) -> PointwiseOperator:
    """T1 after T2."""
    r1, r2 = T1.rule, T2.rule
    return PointwiseOperator(
        lambda x, s: r1(x, r2(x, s)), f"({T1.description}) o ({T2.description})"
    )


@dataclass(frozen=True)
class BoxSet:
    """Pointwise interval constraints lower <= u <= upper with optional pins.

    Pins are ``(atom index, value)`` pairs forcing u at that atom.
    """

    lower: GridFunction
    upper: GridFunction
    pins: tuple = ()

    def __post_init__(self):
        if self.lower.grid != self.upper.grid:
            raise InvalidArgument("lower and upper bounds live on different grids")
        if np.any(self.lower.values > self.upper.values):
            i = int(np.flatnonzero(self.lower.values > self.upper.values)[0])
            raise InvalidArgument(f"empty set: lower > upper at atom {i}")
        pins = []
        n = self.grid.size
        for i, v in self.pins:
            i = int(i) % n if -n <= int(i) < n else None
            if i is None:
                raise InvalidArgument("pin index out of range")
            v = float(v)
            if not self.lower.values[i] <= v <= self.upper.values[i]:
                raise InvalidArgument(f"pin value {v} at atom {i} lies outside the bounds")
            pins.append((i, v))
        object.__setattr__(self, "pins", tuple(sorted(pins)))

    @classmethod
    def box(cls, g: MeasureGrid, lower, upper, pins: Sequence = ()) -> "BoxSet":
        """Convenience constructor taking constants, callables or arrays."""
        return cls(g.function(lower), g.function(upper), tuple(pins))

    @property
    def grid(self) -> MeasureGrid:
        return self.lower.grid

    def _pin_arrays(self):
        if not self.pins:
            return np.zeros(0, dtype=int), np.zeros(0)
        idx, vals = zip(*self.pins)
        return np.array(idx, dtype=int), np.array(vals, dtype=float)

    def contains(self, u: GridFunction, tol: float = 0.0) -> bool:
        if u.grid != self.grid:
            return False
        v = u.values
        if np.any(v < self.lower.values - tol) or np.any(v > self.upper.values + tol):
            return False
        idx, vals = self._pin_arrays()
        return bool(np.all(np.abs(v[idx] - vals) <= tol))

    def contains_zero(self, tol: float = 0.0) -> bool:
        return self.contains(self.grid.zeros(), tol)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` rows, each uniform per atom on [lower, upper] with pins applied."""
        lo, hi = self.lower.values, self.upper.values
        out = lo + (hi - lo) * rng.random((count, lo.size))
        idx, vals = self._pin_arrays()
        out[:, idx] = vals
        return out

    def nearest_to_zero(self) -> GridFunction:
        """Projection of the zero function onto the box (pins respected)."""
        v = np.clip(0.0, self.lower.values, self.upper.values)
        idx, vals = self._pin_arrays()
        v[idx] = vals
        return GridFunction(self.grid, v)


@dataclass(frozen=True)
class Witness:
    u: GridFunction
    v: GridFunction
    atom: int
    lhs: float
    rhs: float


@dataclass(frozen=True)
class CertificateReport:
    passed: bool
    samples_checked: int
    witness: Optional[Witness]
    seed: int

    def __str__(self):
        if self.passed:
            return f"PASS: no violation in {self.samples_checked} sample pairs (seed {self.seed})"
        w = self.witness
        return (
            f"FAIL: violation at atom {w.atom} after {self.samples_checked} sample pairs "
            f"(seed {self.seed}): |T(u)-T(v)| = {w.lhs!r} > |u-v| = {w.rhs!r}"
        )


def certify_strong_nonexpansive(
    T: PointwiseOperator,
    K: BoxSet,
    g: MeasureGrid,
    samples: int = 1000,
    seed: int = 0,
    chunk: int = 2048,
) -> CertificateReport:
    """Sample pairs (u, v) in K and test the pointwise 1-Lipschitz inequality.

    Sample i consumes the i-th block of 2*n uniform draws, so a given pair does
    not depend on ``samples`` or ``chunk``.  The first violation in
    (sample, atom) order is returned as the witness.
    """
    if samples < 1:
        raise InvalidArgument("need at least one sample")
    if K.grid != g:
        raise InvalidArgument("set and grid disagree")
    rng = np.random.default_rng(seed)
    n = g.size
    lo, hi = K.lower.values, K.upper.values
    idx, vals = K._pin_arrays()
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        draws = rng.random((m, 2, n))
        pairs = lo + (hi - lo) * draws
        pairs[:, :, idx] = vals
        U, V = pairs[:, 0, :], pairs[:, 1, :]
        TU = _evaluate(T, g.atoms, U)
        TV = _evaluate(T, g.atoms, V)
        lhs = np.abs(TU - TV)
        rhs = np.abs(U - V)
        bad = lhs > rhs + CERTIFICATE_TOL
        if bad.any():
            r, a = np.argwhere(bad)[0]
            witness = Witness(
                GridFunction(g, U[r]), GridFunction(g, V[r]), int(a), float(lhs[r, a]), float(rhs[r, a])
            )
            return CertificateReport(False, done + int(r) + 1, witness, seed)
        done += m
    return CertificateReport(True, samples, None, seed)


def recheck_witness(T: PointwiseOperator, w: Witness) -> bool:
    """Re-evaluate a witness from scratch; True when it is a genuine violation."""
    g = w.u.grid
    lhs = abs(apply(T, w.u, g).values[w.atom] - apply(T, w.v, g).values[w.atom])
    rhs = abs(w.u.values[w.atom] - w.v.values[w.atom])
    return lhs > rhs + CERTIFICATE_TOL


def translate_problem(K: BoxSet, T: PointwiseOperator, v: GridFunction):
    """Shift the problem by v in K so that the new set contains 0.

    Returns (K - v, T') with T'(w) = T(w + v) - v.  Fixed points correspond
    via u = w + v.
    """
    if not K.contains(v):
        raise InvalidArgument("translation vector must belong to K")
    g = K.grid
    shift = v.values.copy()
    atoms = g.atoms
    rule = T.rule

    def shifted(x, s):
        vx = np.interp(x, atoms, shift)
        return rule(x, s + vx) - vx

    K2 = BoxSet(K.lower - v, K.upper - v, tuple((i, val - shift[i]) for i, val in K.pins))
    return K2, PointwiseOperator(shifted, f"translated({T.description})", None)


def pin_preserving_translate(K: BoxSet) -> Optional[GridFunction]:
    """A member of K vanishing at every pinned atom, or None.

    Translating by such a vector leaves the pin constraints in place.  It can
    only exist when every pin value is 0.
    """
    if any(val != 0.0 for _, val in K.pins):
        return None
    return K.nearest_to_zero()
