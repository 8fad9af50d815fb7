"""Coordinate grids, quadrature and sampled complex functions.

Every mode-overlap integral in the package is a weighted sum over the nodes
of a :class:`CoordinateGrid`. Two-dimensional grids are tensor products of
one-dimensional rules; their nodes are stored flattened in C order
(``x`` index slowest).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .errors import GridMismatchError, NumericalError, ValidationError

GRID_KINDS = ("gauss-legendre", "trapezoid", "periodic")
MIN_NODES = 8


def _rule_1d(kind: str, lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    if kind == "gauss-legendre":
        t, w = roots_legendre(n)
        half = 0.5 * (hi - lo)
        return lo + half * (t + 1.0), half * w
    if kind == "trapezoid":
        x = np.linspace(lo, hi, n)
        w = np.full(n, (hi - lo) / (n - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return x, w
    if kind == "periodic":
        # right endpoint excluded; exact for trigonometric polynomials of degree < n
        x = lo + (hi - lo) * np.arange(n) / n
        return x, np.full(n, (hi - lo) / n)
    raise ValidationError(f"unknown quadrature rule {kind!r}; expected one of {GRID_KINDS}")


@dataclass(frozen=True, eq=False)
class CoordinateGrid:
    """Quadrature nodes and weights on a 1D interval or a 2D tensor grid.

    Attributes:
        axes: One array of nodes per dimension.
        axis_weights: Matching one-dimensional quadrature weights.
        kind: Name of the rule that produced the grid.
    """

    axes: tuple[np.ndarray, ...]
    axis_weights: tuple[np.ndarray, ...]
    kind: str = "custom"
    coords: tuple[np.ndarray, ...] = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.axes) not in (1, 2) or len(self.axes) != len(self.axis_weights):
            raise ValidationError("grids must be 1D or 2D with one weight array per axis")
        for x, w in zip(self.axes, self.axis_weights):
            if x.ndim != 1 or x.shape != w.shape:
                raise ValidationError("axis nodes and weights must be matching 1D arrays")
            if np.any(np.diff(x) <= 0):
                raise ValidationError("grid nodes must be strictly increasing")
            if np.any(w <= 0):
                raise ValidationError("quadrature weights must be positive")
            x.setflags(write=False)
            w.setflags(write=False)
        if len(self.axes) == 1:
            coords = (self.axes[0],)
            weights = self.axis_weights[0]
        else:
            xx, yy = np.meshgrid(*self.axes, indexing="ij")
            coords = (xx.ravel(), yy.ravel())
            weights = np.outer(*self.axis_weights).ravel()
        for c in coords:
            c.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def points(self) -> np.ndarray:
        """Nodes as a ``(P,)`` array in 1D or ``(P, 2)`` in 2D."""
        if self.dimension == 1:
            return self.coords[0]
        return np.column_stack(self.coords)

    @property
    def measure(self) -> float:
        return float(np.prod([w.sum() for w in self.axis_weights]))

    def same_as(self, other: CoordinateGrid) -> bool:
        if self is other:
            return True
        return (
            self.dimension == other.dimension
            and all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
            and all(np.array_equal(a, b) for a, b in zip(self.axis_weights, other.axis_weights))
        )

    def sample(self, func: Callable[..., np.ndarray]) -> SampledFunction:
        """Evaluate ``func(*coords)`` on the grid nodes."""
        return SampledFunction(self, func(*self.coords))


def make_grid(kind: str, lo: float, hi: float, n: int, dimension: int = 1) -> CoordinateGrid:
    """Build a quadrature grid on ``[lo, hi]`` (or its square in 2D).

    Args:
        kind: ``"gauss-legendre"``, ``"trapezoid"`` or ``"periodic"``.
        lo: Lower bound of every axis.
        hi: Upper bound of every axis.
        n: Nodes per axis, at least 8.
        dimension: 1 or 2.

    Raises:
        ValidationError: If ``lo >= hi``, ``n < 8`` or the rule is unknown.
    """
    if not lo < hi:
        raise ValidationError(f"invalid bounds: lo={lo} must be smaller than hi={hi}")
    if n < MIN_NODES:
        raise ValidationError(f"grid too coarse: n={n} < {MIN_NODES}")
    if dimension not in (1, 2):
        raise ValidationError(f"dimension must be 1 or 2, got {dimension}")
    x, w = _rule_1d(kind, float(lo), float(hi), int(n))
    return CoordinateGrid(tuple(x.copy() for _ in range(dimension)),
                          tuple(w.copy() for _ in range(dimension)), kind=kind)


def grid_from_nodes(nodes) -> CoordinateGrid:
    """Trapezoid rule on arbitrary, strictly increasing 1D nodes."""
    x = np.asarray(nodes, dtype=float)
    if x.ndim != 1 or x.size < MIN_NODES:
        raise ValidationError(f"need at least {MIN_NODES} nodes, got {x.size}")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise ValidationError("nodes must be strictly increasing")
    w = np.zeros_like(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return CoordinateGrid((x,), (w,), kind="trapezoid")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Complex amplitudes of a function on the nodes of a grid."""

    grid: CoordinateGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.size,):
            raise ValidationError(
                f"expected {self.grid.size} samples, got array of shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalError("sampled function contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _check(self, other: SampledFunction):
        if not self.grid.same_as(other.grid):
            raise GridMismatchError("sampled functions live on different grids")

    def __add__(self, other: SampledFunction) -> SampledFunction:
        self._check(other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other: SampledFunction) -> SampledFunction:
        self._check(other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> SampledFunction:
        return SampledFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> SampledFunction:
        return SampledFunction(self.grid, self.values / scalar)

    def __neg__(self) -> SampledFunction:
        return SampledFunction(self.grid, -self.values)

    def conj(self) -> SampledFunction:
        return SampledFunction(self.grid, self.values.conj())

    def norm(self) -> float:
        return float(np.sqrt(inner_product(self, self).real))


def inner_product(a: SampledFunction, b: SampledFunction) -> complex:
    """Quadrature of ``conj(a) * b``; conjugate-linear in ``a``."""
    if not a.grid.same_as(b.grid):
        raise GridMismatchError("inner product of functions on different grids")
    return complex(np.sum(a.grid.weights * a.values.conj() * b.values))


def gram_matrix(funcs, others=None) -> np.ndarray:
    """Matrix of inner products ``M[j, k] = (funcs[j] | others[k])``."""
    others = funcs if others is None else others
    if not funcs or not others:
        return np.zeros((len(funcs), len(others)), dtype=complex)
    grid = funcs[0].grid
    for f in (*funcs, *others):
        if not grid.same_as(f.grid):
            raise GridMismatchError("gram matrix of functions on different grids")
    a = np.array([f.values for f in funcs])
    b = np.array([f.values for f in others])
    return (a.conj() * grid.weights) @ b.T


def numeric_derivative(family_eval: Callable[[float], SampledFunction], h: float) -> SampledFunction:
    """Fourth-order central difference of a θ-family at θ = 0.

    ``family_eval`` is evaluated at ±h and ±2h; evaluation errors propagate.
    """
    if not h > 0:
        raise ValidationError(f"step must be positive, got {h}")
    fp2, fp1, fm1, fm2 = (family_eval(t) for t in (2 * h, h, -h, -2 * h))
    values = (-fp2.values + 8.0 * fp1.values - 8.0 * fm1.values + fm2.values) / (12.0 * h)
    return SampledFunction(fp1.grid, values)
