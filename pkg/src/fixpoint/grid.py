"""Weighted atom grids standing in for a finite measure space, plus grid norms.

Everything "almost everywhere" becomes "at every atom" here.  Two kinds of
grid exist: ``interior`` (cell midpoints, midpoint weights) and ``node``
(endpoint-including nodes, trapezoid weights).
"""

from __future__ import annotations

from typing import Callable, Iterable, Union

import numpy as np

from .errors import InvalidArgument

INTERIOR = "interior"
NODE = "node"
GRID_KINDS = (INTERIOR, NODE)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


class MeasureGrid:
    """Ordered atoms with positive weights on a 1-D interval."""

    __slots__ = ("atoms", "weights", "kind")

    def __init__(self, atoms, weights, kind: str = INTERIOR):
        atoms = _frozen(atoms)
        weights = _frozen(weights)
        if kind not in GRID_KINDS:
            raise InvalidArgument(f"unknown grid kind {kind!r}")
        if atoms.ndim != 1 or atoms.shape != weights.shape or atoms.size == 0:
            raise InvalidArgument("atoms and weights must be equal-length 1-D arrays")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise InvalidArgument("atoms and weights must be finite")
        if np.any(weights <= 0):
            raise InvalidArgument("weights must be strictly positive")
        if np.any(np.diff(atoms) <= 0):
            raise InvalidArgument("atoms must be strictly increasing")
        self.atoms = atoms
        self.weights = weights
        self.kind = kind

    @property
    def size(self) -> int:
        return self.atoms.size

    def __len__(self):
        return self.atoms.size

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.atoms[0]), float(self.atoms[-1])

    def __eq__(self, other):
        if not isinstance(other, MeasureGrid):
            return NotImplemented
        return (
            self is other
            or (
                self.kind == other.kind
                and np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.weights, other.weights)
            )
        )

    def __hash__(self):
        return hash((self.kind, self.atoms.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        lo, hi = self.hull
        return f"MeasureGrid(kind={self.kind!r}, n={self.size}, atoms=[{lo:g}..{hi:g}])"

    def function(self, f: Union[float, Callable, Iterable[float]]) -> "GridFunction":
        """Sample ``f`` (constant, vectorized callable of x, or array) on the atoms."""
        if callable(f):
            values = np.broadcast_to(np.asarray(f(self.atoms), dtype=float), self.atoms.shape)
        elif np.isscalar(f):
            values = np.full(self.size, float(f))
        else:
            values = f
        return GridFunction(self, values)

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.size))

    def spacing(self) -> np.ndarray:
        return np.diff(self.atoms)


class GridFunction:
    """One finite real value per atom of a grid.  Immutable."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: MeasureGrid, values):
        values = _frozen(values)
        if values.shape != (grid.size,):
            raise InvalidArgument(
                f"expected {grid.size} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InvalidArgument(f"non-finite value at atom {bad}")
        self.grid = grid
        self.values = values

    def __len__(self):
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def __repr__(self):
        return f"GridFunction({np.array2string(self.values, threshold=8)})"

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise InvalidArgument("grid functions live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __abs__(self):
        return GridFunction(self.grid, np.abs(self.values))

    def allclose(self, other, atol=0.0, rtol=0.0) -> bool:
        return bool(np.allclose(self.values, self._other(other), atol=atol, rtol=rtol))


def make_uniform_grid(a: float, b: float, n: int, kind: str = INTERIOR) -> MeasureGrid:
    """Uniform grid on [a, b] with total weight b - a.

    ``interior`` gives the midpoints of ``n`` equal cells, ``node`` gives ``n``
    equally spaced nodes including both endpoints with trapezoid weights.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidArgument("grid bounds must be finite")
    if not a < b:
        raise InvalidArgument(f"need a < b, got a={a}, b={b}")
    if int(n) != n or n < 2:
        raise InvalidArgument(f"need an integer n >= 2, got {n}")
    n = int(n)
    if kind == INTERIOR:
        h = (b - a) / n
        atoms = a + h * (np.arange(n) + 0.5)
        weights = np.full(n, h)
    elif kind == NODE:
        atoms = np.linspace(a, b, n)
        h = (b - a) / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2
    else:
        raise InvalidArgument(f"unknown grid kind {kind!r}")
    return MeasureGrid(atoms, weights, kind)


def norm_sup(f: GridFunction) -> float:
    """Essential supremum, realised as the max over atoms."""
    return float(np.max(np.abs(f.values)))


def norm_p(f: GridFunction, p: float, g: MeasureGrid) -> float:
    if not p >= 1:
        raise InvalidArgument(f"need p >= 1, got {p}")
    if f.grid != g:
        raise InvalidArgument("function is not defined on the given grid")
    a = np.abs(f.values)
    if p == 1:
        return float(np.dot(g.weights, a))
    # scale by the max so large p does not overflow
    m = a.max()
    if m == 0:
        return 0.0
    return float(m * np.dot(g.weights, (a / m) ** p) ** (1.0 / p))


def _subset_index(subset, n: int) -> np.ndarray:
    if subset is None:
        return np.arange(n)
    idx = subset if isinstance(subset, np.ndarray) else np.asarray(list(subset))
    if idx.dtype == bool:
        if idx.shape != (n,):
            raise InvalidArgument("boolean subset mask has the wrong length")
        return np.flatnonzero(idx)
    idx = np.asarray(sorted(set(int(i) for i in np.ravel(idx))), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidArgument("subset contains an atom index out of range")
    return idx


def integrate_abs_diff(f: GridFunction, h: GridFunction, g: MeasureGrid, subset=None) -> float:
    """Sum of weight * |f - h| over the atoms in ``subset`` (all atoms if None).

    ``subset`` may be an iterable of indices or a boolean mask.
    """
    if f.grid != g or h.grid != g:
        raise InvalidArgument("functions must live on the integration grid")
    idx = _subset_index(subset, g.size)
    if idx.size == 0:
        return 0.0
    return float(np.dot(g.weights[idx], np.abs(f.values[idx] - h.values[idx])))


def discrete_lipschitz(f: GridFunction) -> float:
    """max |f(x_{i+1}) - f(x_i)| / (x_{i+1} - x_i) over adjacent atoms."""
    return float(np.max(np.abs(np.diff(f.values)) / f.grid.spacing()))
