"""Picard iteration, the damped resolvent u = lam*T(u), and the
approximate-fixed-point path lam_n -> 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, PreconditionViolation, SetViolation
from .grid import GridFunction, MeasureGrid, norm_p, norm_sup
from .operators import MEMBERSHIP_TOL, BoxSet, PointwiseOperator, apply, scale

log = logging.getLogger(__name__)

MAX_ITER_CAP = 10**6
STALL_PATIENCE = 3

FIXED_POINT_FOUND = "fixed-point-found"
NOT_IN_SET = "not-in-set"
MAX_STEPS = "max-steps"


@dataclass(frozen=True)
class DampingSchedule:
    """Strictly increasing damping factors in (0, 1)."""

    values: tuple
    tag: str = "explicit"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise InvalidArgument("schedule is empty")
        if any(not 0 < v < 1 for v in vals):
            raise InvalidArgument("every damping factor must lie in (0, 1)")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidArgument("damping factors must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def geometric(cls, n: int = 20) -> "DampingSchedule":
        """lam_k = 1 - 2**-k, k = 1..n."""
        return cls(tuple(1.0 - 2.0**-k for k in range(1, n + 1)), "geometric")

    @classmethod
    def harmonic(cls, n: int = 20) -> "DampingSchedule":
        """lam_k = 1 - 1/(k+1), k = 1..n."""
        return cls(tuple(1.0 - 1.0 / (k + 1) for k in range(1, n + 1)), "harmonic")

    @classmethod
    def explicit(cls, values) -> "DampingSchedule":
        return cls(tuple(values), "explicit")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class SolveResult:
    solution: GridFunction
    iterations: int
    a_posteriori_error: float
    converged: bool
    # iteration stopped because successive gaps sat at the rounding floor
    stalled: bool = False


def default_max_iter(lam: float, tol: float) -> int:
    """10 * ceil(log(tol*(1-lam)) / log(lam)), capped at 10**6."""
    n = math.ceil(math.log(tol * (1 - lam)) / math.log(lam))
    return int(min(MAX_ITER_CAP, max(1, 10 * n)))


def picard_solve(
    S: PointwiseOperator,
    q: float,
    u0: GridFunction,
    g: MeasureGrid,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> SolveResult:
    """Iterate u <- S(u) for a pointwise q-contraction S.

    Stops once the a-posteriori Banach bound q/(1-q) * |u_{k+1} - u_k|_sup
    drops to ``tol``.  In floating point the successive gap can lock onto a
    one- or two-ulp cycle; when the gap stops shrinking at that level the
    iteration halts with ``stalled=True`` and reports the bound it reached.
    """
    if not 0 < q < 1:
        raise InvalidArgument(f"contraction factor must lie in (0, 1), got {q}")
    if tol <= 0:
        raise InvalidArgument("tolerance must be positive")
    if max_iter is None:
        max_iter = default_max_iter(q, tol)
    factor = q / (1 - q)
    u = u0
    bound = math.inf
    best_gap = math.inf
    flat = 0
    for k in range(1, max_iter + 1):
        nxt = apply(S, u, g)
        gap = norm_sup(nxt - u)
        bound = factor * gap
        u = nxt
        if bound <= tol:
            return SolveResult(u, k, bound, True)
        floor = 8 * np.finfo(float).eps * max(1.0, norm_sup(u))
        if gap < best_gap:
            best_gap, flat = gap, 0
        else:
            flat += 1
        if gap <= floor and flat >= STALL_PATIENCE:
            return SolveResult(u, k, bound, False, stalled=True)
    return SolveResult(u, max_iter, bound, False)


def resolvent(
    T: PointwiseOperator,
    lam: float,
    K: BoxSet,
    g: MeasureGrid,
    u0: Optional[GridFunction] = None,
    tol: float = 1e-10,
    max_iter: Optional[int] = None,
) -> SolveResult:
    """Solve u = lam*T(u) inside K.

    Requires 0 in K (see ``translate_problem``).  The solution is checked
    against K afterwards; leaving K means T is not a self-map of K.
    """
    if not 0 < lam < 1:
        raise InvalidArgument(f"damping factor must lie in (0, 1), got {lam}")
    if not K.contains_zero():
        raise PreconditionViolation(
            "the zero function is not in K; translate the problem first (translate_problem)"
        )
    if u0 is None:
        u0 = g.zeros()
    if not K.contains(u0, MEMBERSHIP_TOL):
        raise InvalidArgument("starting point is not in K")
    res = picard_solve(scale(lam, T), lam, u0, g, tol, max_iter)
    if not K.contains(res.solution, MEMBERSHIP_TOL):
        raise SetViolation(f"solution of u = {lam}*T(u) left K: T is not a self-map of K")
    return res


@dataclass(frozen=True)
class PathStep:
    lam: float
    u: GridFunction
    residual_sup: float
    residual_l1: float
    inner_iterations: int
    converged: bool = True
    stalled: bool = False


@dataclass
class SolvePath:
    steps: list = field(default_factory=list)
    limit: Optional[GridFunction] = None
    status: str = MAX_STEPS
    failed_step: Optional[int] = None
    message: str = ""

    def __len__(self):
        return len(self.steps)

    @property
    def iterates(self) -> list:
        return [s.u for s in self.steps]


def _record(T, lam, u, g, result=None) -> PathStep:
    r = apply(T, u, g) - u
    return PathStep(
        lam,
        u,
        norm_sup(r),
        norm_p(r, 1, g),
        result.iterations if result else 1,
        result.converged if result else True,
        result.stalled if result else False,
    )


def approx_fixed_point_path(
    T: PointwiseOperator,
    K: BoxSet,
    g: MeasureGrid,
    schedule: Optional[DampingSchedule] = None,
    inner_tol: float = 1e-10,
    pointwise_tol: float = 1e-6,
    warm_start: bool = True,
) -> SolvePath:
    """Solve u_n = lam_n*T(u_n) along the schedule, warm-starting each step.

    The last iterate is the limit candidate.  Status is ``fixed-point-found``
    when its residual |T(u)-u|_sup is within ``pointwise_tol`` and it lies in
    K, ``not-in-set`` when some resolvent leaves K, and ``max-steps``
    otherwise (schedule exhausted or an inner solve hit its iteration cap).
    """
    if schedule is None:
        schedule = DampingSchedule.geometric(20)
    if not K.contains_zero():
        raise PreconditionViolation(
            "the zero function is not in K; translate the problem first (translate_problem)"
        )
    path = SolvePath()
    u = g.zeros()
    for n, lam in enumerate(schedule):
        start = u if warm_start else g.zeros()
        try:
            res = resolvent(T, lam, K, g, start, inner_tol)
        except SetViolation as exc:
            path.status = NOT_IN_SET
            path.failed_step = n
            path.message = str(exc)
            path.limit = u if path.steps else None
            return path
        u = res.solution
        path.steps.append(_record(T, lam, u, g, res))
        if not (res.converged or res.stalled):
            log.warning("inner solve at lambda=%r hit its iteration cap", lam)
            path.status = MAX_STEPS
            path.failed_step = n
            path.message = f"inner Picard iteration cap reached at lambda={lam!r}"
            path.limit = u
            return path
    path.limit = u
    last = path.steps[-1]
    if last.residual_sup <= pointwise_tol and K.contains(u, MEMBERSHIP_TOL):
        path.status = FIXED_POINT_FOUND
    else:
        path.status = MAX_STEPS
        path.message = f"final residual {last.residual_sup:.3e} above {pointwise_tol:.3e}"
    return path


def extract_pointwise_limit(path: SolvePath, g: MeasureGrid, tail: int = 5):
    """Mean of the last ``tail`` iterates and their largest per-atom spread."""
    if tail < 1 or tail > len(path):
        raise InvalidArgument(f"tail must lie in [1, {len(path)}], got {tail}")
    block = np.array([s.u.values for s in path.steps[-tail:]])
    osc = float(np.max(block.max(axis=0) - block.min(axis=0)))
    return GridFunction(g, block.mean(axis=0)), osc


def aitken_limit(iterates: Sequence[GridFunction]) -> GridFunction:
    """Per-atom Aitken delta-squared extrapolation from the last three iterates.

    Exact for per-atom geometric sequences a + b*r**k; atoms whose second
    difference vanishes keep their last value.
    """
    if len(iterates) < 3:
        raise InvalidArgument("need at least three iterates")
    a, b, c = (f.values for f in iterates[-3:])
    d1 = c - b
    d2 = c - 2 * b + a
    out = c.copy()
    ok = np.abs(d2) > 0
    out[ok] = c[ok] - d1[ok] ** 2 / d2[ok]
    return GridFunction(iterates[-1].grid, out)


def picard_path(T: PointwiseOperator, u0: GridFunction, steps: int) -> SolvePath:
    """Raw undamped iterates u_{k+1} = T(u_k), recorded with lam = 1.

    Each record's residual is the successive gap T(u_k) - u_k.
    """
    g = u0.grid
    path = SolvePath()
    u = u0
    for _ in range(steps + 1):
        path.steps.append(_record(T, 1.0, u, g))
        u = apply(T, u, g)
    path.limit = path.steps[-1].u
    return path
