"""Measure-theoretic checks on computed iterate sequences.

* ``egoroff_split`` finds a small exceptional set off which the tail of a
  sequence is uniformly close to its limit.
* ``verify_residual_chain`` evaluates the integral estimate
  int |T(u)-u| <= c*eps + int_{A^c} |T(u_n)-T(u)| on a solve path.
* ``zolezzi_check`` compares pairing gaps against L^p distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidArgument
from .grid import GridFunction, MeasureGrid, integrate_abs_diff, norm_p, norm_sup
from .operators import CERTIFICATE_TOL, PointwiseOperator, apply

CHAIN_SLACK = 1e-9


@dataclass(frozen=True)
class EgoroffReport:
    exceptional_atoms: tuple
    exceptional_measure: float
    uniform_tail_deviation: float
    tail_start: int
    deviation: np.ndarray = field(repr=False, compare=False)

    @property
    def complement_mask(self) -> np.ndarray:
        mask = np.ones(self.deviation.size, dtype=bool)
        mask[list(self.exceptional_atoms)] = False
        return mask


def tail_deviation(seq: Sequence[GridFunction], u: GridFunction, J: int) -> np.ndarray:
    """Per atom, max over j >= J of |u_j - u|."""
    block = np.array([f.values for f in seq[J:]])
    return np.max(np.abs(block - u.values), axis=0)


def egoroff_split(
    seq: Sequence[GridFunction], u: GridFunction, g: MeasureGrid, eps: float, J: int = 0
) -> EgoroffReport:
    """Greedy discrete Egoroff set.

    Atoms are taken in decreasing tail deviation (lower index first on ties)
    while their total weight stays below ``eps``.  Stopping at the first atom
    that does not fit is optimal: any set of weight < eps must leave that
    atom, or one at least as bad, in the complement.  Atoms no worse than the
    achieved deviation are then dropped again.
    """
    if not eps > 0:
        raise InvalidArgument(f"eps must be positive, got {eps}")
    if not 0 <= J < len(seq):
        raise InvalidArgument(f"tail start {J} out of range for {len(seq)} functions")
    if u.grid != g or any(f.grid != g for f in seq):
        raise InvalidArgument("all functions must live on the grid")
    d = tail_deviation(seq, u, J)
    order = np.lexsort((np.arange(d.size), -d))
    chosen = []
    weight = 0.0
    for i in order:
        if weight + g.weights[i] >= eps:
            break
        weight += g.weights[i]
        chosen.append(int(i))
    rest = np.ones(d.size, dtype=bool)
    rest[chosen] = False
    dev = float(d[rest].max()) if rest.any() else 0.0
    # drop atoms that do not lower the achieved sup (keeps the set measure-minimal)
    chosen = [i for i in chosen if d[i] > dev]
    return EgoroffReport(tuple(sorted(chosen)), float(g.weights[chosen].sum()), dev, J, d)


@dataclass(frozen=True)
class ResidualChainReport:
    total: float
    c_bound: float
    epsilon: float
    complement_term: float
    chain_satisfied: bool
    egoroff: EgoroffReport
    # int_{A^c} |T(u_n) - T(u)| for every step n of the path
    step_terms: tuple = ()
    # int_{A^c} |u_n - u|, the nonexpansive upper bound for step_terms
    step_bounds: tuple = ()
    transfer_holds: bool = True

    def __str__(self):
        verdict = "satisfied" if self.chain_satisfied else "VIOLATED"
        return (
            f"residual chain {verdict}: int|T(u)-u| = {self.total:.6e} <= "
            f"c*eps + tail = {self.c_bound:.6e}*{self.epsilon:g} + {self.complement_term:.6e}; "
            f"exceptional measure {self.egoroff.exceptional_measure:.6g}, "
            f"nonexpansive transfer {'holds' if self.transfer_holds else 'FAILS'}"
        )


def verify_residual_chain(
    T: PointwiseOperator, path, u: GridFunction, g: MeasureGrid, eps: float, tail: int = 5
) -> ResidualChainReport:
    """Check int|T(u)-u| <= c*eps + lim int_{A^c}|T(u_n)-T(u)| along a path.

    ``c`` is the largest observed sup residual over the path and at ``u``.
    The exceptional set comes from ``egoroff_split`` on the last ``tail``
    iterates; the limit term is read off the final step.  Along the way the
    atomwise bound |T(u_n)-T(u)| <= |u_n-u| is checked at every step.
    """
    steps = path.steps
    if not steps:
        raise InvalidArgument("path is empty")
    iterates = [s.u for s in steps]
    Tu = apply(T, u, g)
    total = integrate_abs_diff(Tu, u, g)
    c = max(max(s.residual_sup for s in steps), norm_sup(Tu - u))
    J = max(0, len(iterates) - max(1, tail))
    ego = egoroff_split(iterates, u, g, eps, J)
    mask = ego.complement_mask
    terms, bounds = [], []
    transfer = True
    for un in iterates:
        Tun = apply(T, un, g)
        lhs = np.abs(Tun.values - Tu.values)
        rhs = np.abs(un.values - u.values)
        transfer &= bool(np.all(lhs <= rhs + CERTIFICATE_TOL))
        terms.append(integrate_abs_diff(Tun, Tu, g, mask))
        bounds.append(integrate_abs_diff(un, u, g, mask))
    complement = terms[-1]
    ok = total <= c * eps + complement + CHAIN_SLACK
    return ResidualChainReport(
        total, c, eps, complement, bool(ok), ego, tuple(terms), tuple(bounds), transfer
    )


def indicator_densities(g: MeasureGrid, count: int = 16) -> list:
    """Normalised indicators of ``count`` equal subintervals of the grid hull.

    Each has integral 1; subintervals holding no atom are skipped.
    """
    if count < 1:
        raise InvalidArgument("need at least one density")
    lo, hi = g.hull
    if g.kind == "interior":
        half = g.weights[0] / 2
        lo, hi = lo - half, hi + g.weights[-1] / 2
    cell = np.minimum(((g.atoms - lo) / (hi - lo) * count).astype(int), count - 1)
    out = []
    for k in range(count):
        ind = (cell == k).astype(float)
        mass = float(np.dot(g.weights, ind))
        if mass > 0:
            out.append(GridFunction(g, ind / mass))
    return out


@dataclass(frozen=True)
class ZolezziReport:
    gaps: np.ndarray
    distances: dict
    consistent: bool

    def __str__(self):
        word = "consistent with" if self.consistent else "NOT consistent with"
        last = ", ".join(f"L{p:g}={d[-1]:.3e}" for p, d in self.distances.items())
        return f"{word} weak-to-strong convergence; last gap {self.gaps[-1]:.3e}, {last}"


def zolezzi_check(
    seq: Sequence[GridFunction],
    u: GridFunction,
    g: MeasureGrid,
    densities: Sequence[GridFunction],
    p_list: Sequence[float] = (1, 2),
) -> ZolezziReport:
    """Pairing gaps max_k |<g_k, u_j - u>| next to L^p distances |u_j - u|_p.

    Over the last half of the sequence: when the gaps shrink, every L^p
    distance must shrink too.  A finite family of test densities can only
    falsify weak convergence, so a positive outcome reads "consistent".
    """
    if not densities:
        raise InvalidArgument("density family is empty")
    for d in densities:
        if d.grid != g:
            raise InvalidArgument("density lives on a different grid")
        if norm_p(d, 1, g) > 1 + 1e-12:
            raise InvalidArgument("densities must satisfy int |g_k| <= 1")
    if any(p < 1 for p in p_list):
        raise InvalidArgument("p must be >= 1")
    D = np.array([d.values for d in densities]) * g.weights
    diffs = [f - u for f in seq]
    gaps = np.array([float(np.max(np.abs(D @ e.values))) for e in diffs])
    dist = {p: np.array([norm_p(e, p, g) for e in diffs]) for p in p_list}
    h = len(seq) // 2
    consistent = True
    if len(seq) >= 2 and gaps[-1] < gaps[h]:
        for arr in dist.values():
            if not (arr[-1] < arr[h] or arr[-1] == 0.0):
                consistent = False
    return ZolezziReport(gaps, dist, consistent)
