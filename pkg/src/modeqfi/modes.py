"""θ-parametrized mode families, derivative modes and overlap matrices."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Sequence

import numpy as np
from scipy.special import eval_hermite

from .errors import GridMismatchError, NumericalError, OrthonormalityError, ValidationError
from .numerics import (
    CoordinateGrid,
    SampledFunction,
    gram_matrix,
    grid_from_nodes,
    inner_product,
    numeric_derivative,
)

logger = logging.getLogger(__name__)

ORTHONORMALITY_ERROR = 1e-6
ORTHONORMALITY_WARN = 1e-8
ANTI_HERMITIAN_TOL = 1e-8
DERIVATIVE_STEP = 1e-4  # in units of the family's length scale


@dataclass(frozen=True, eq=False)
class ModeFamily:
    """A set of modes ``f_k[θ]`` sampled on a common grid.

    Attributes:
        grid: Grid the modes are sampled on.
        labels: Mode identifiers, in matrix order.
        profile: ``profile(label, theta)`` returns the complex samples of
            ``f_label[theta]`` on ``grid``. Must be pure.
        populated: Labels of the modes occupied by the state (the set I).
        length_scale: Natural length of the family (waist, pulse length, ...).
        derivative: Optional ``derivative(label)`` returning the samples of
            ``∂f_label/∂θ`` at θ = 0.
    """

    grid: CoordinateGrid
    labels: tuple[Hashable, ...]
    profile: Callable[[Hashable, float], np.ndarray]
    populated: tuple[Hashable, ...]
    length_scale: float
    derivative: Callable[[Hashable], np.ndarray] | None = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "populated", tuple(self.populated))
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("mode labels must be unique")
        missing = [p for p in self.populated if p not in self.labels]
        if missing:
            raise ValidationError(f"populated modes {missing} are not family labels")
        if not self.length_scale > 0:
            raise ValidationError("length_scale must be positive")

    @property
    def populated_indices(self) -> list[int]:
        return [self.labels.index(p) for p in self.populated]

    def eval(self, label: Hashable, theta: float = 0.0) -> SampledFunction:
        if label not in self.labels:
            raise ValidationError(f"unknown mode label {label!r}")
        return SampledFunction(self.grid, self.profile(label, theta))

    def analytic_derivative(self, label: Hashable) -> SampledFunction | None:
        if self.derivative is None:
            return None
        return SampledFunction(self.grid, self.derivative(label))

    def with_populated(self, populated: Sequence[Hashable]) -> ModeFamily:
        return ModeFamily(self.grid, self.labels, self.profile, tuple(populated),
                          self.length_scale, self.derivative)

    def remix(self, unitary: np.ndarray, labels: Sequence[Hashable] | None = None) -> ModeFamily:
        """Family with modes ``g_a = Σ_b U[b, a] f_b``, θ-independent mixing.

        All new modes are marked populated.
        """
        u = np.asarray(unitary, dtype=complex)
        k = len(self.labels)
        if u.shape != (k, k) or not np.allclose(u.conj().T @ u, np.eye(k), atol=1e-12):
            raise ValidationError("remix needs a unitary matrix matching the family size")
        new_labels = tuple(labels) if labels is not None else tuple(f"g{a}" for a in range(k))
        old = self.labels
        derivative = self.derivative

        def profile(label, theta):
            a = new_labels.index(label)
            return sum(u[b, a] * self.profile(old[b], theta) for b in range(k))

        remixed_derivative = None
        if derivative is not None:
            def remixed_derivative(label):
                a = new_labels.index(label)
                return sum(u[b, a] * derivative(old[b]) for b in range(k))

        return ModeFamily(self.grid, new_labels, profile, new_labels, self.length_scale,
                          remixed_derivative)


@dataclass(frozen=True, eq=False)
class OverlapData:
    """Raw overlap integrals of a family at θ = 0.

    ``C[j, k] = (f_j|f_k')`` and ``G[j, k] = (f_j'|f_k')`` over all family
    labels; ``V`` is the vacuum-projected block over the populated modes,
    ``V[k, l] = (f_k'|f_l') - Σ_{j∈I} (f_k'|f_j)(f_j|f_l')``.
    """

    labels: tuple[Hashable, ...]
    populated: tuple[Hashable, ...]
    C: np.ndarray
    G: np.ndarray
    V: np.ndarray

    @property
    def populated_indices(self) -> list[int]:
        return [self.labels.index(p) for p in self.populated]

    @property
    def populated_C(self) -> np.ndarray:
        idx = self.populated_indices
        return self.C[np.ix_(idx, idx)]

    def anti_hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.C + self.C.conj().T), initial=0.0))


def vacuum_projected(C: np.ndarray, G: np.ndarray, populated_indices: Sequence[int]) -> np.ndarray:
    """Completeness identity for the overlap of derivative modes with vacuum modes."""
    idx = list(populated_indices)
    c_i = C[idx][:, idx]
    g_i = G[np.ix_(idx, idx)]
    return g_i - c_i.conj().T @ c_i


def derivative_mode(family: ModeFamily, label: Hashable, method: str = "auto") -> SampledFunction:
    """``f_k' = ∂f_k[θ]/∂θ`` at θ = 0, not normalized.

    ``method`` is ``"auto"`` (analytic when available), ``"analytic"`` or
    ``"numeric"``.
    """
    if label not in family.labels:
        raise ValidationError(f"unknown mode label {label!r}")
    if method not in ("auto", "analytic", "numeric"):
        raise ValidationError(f"unknown derivative method {method!r}")
    if method != "numeric":
        analytic = family.analytic_derivative(label)
        if analytic is not None:
            return analytic
        if method == "analytic":
            raise ValidationError("family has no analytic derivative")
    h = DERIVATIVE_STEP * family.length_scale
    return numeric_derivative(lambda t: family.eval(label, t), h)


def check_orthonormal(family: ModeFamily) -> float:
    modes = [family.eval(k) for k in family.labels]
    err = float(np.max(np.abs(gram_matrix(modes) - np.eye(len(modes)))))
    if err > ORTHONORMALITY_ERROR:
        raise OrthonormalityError(f"modes deviate from orthonormality by {err:.3g}")
    if err > ORTHONORMALITY_WARN:
        logger.warning("mode Gram matrix deviates from identity by %.3g", err)
    return err


def compute_overlaps(family: ModeFamily, method: str = "auto") -> OverlapData:
    """Quadrature of all overlap matrices of ``family`` at θ = 0.

    Raises:
        OrthonormalityError: If the θ = 0 Gram matrix is off by more than 1e-6.
    """
    check_orthonormal(family)
    modes = [family.eval(k) for k in family.labels]
    derivs = [derivative_mode(family, k, method) for k in family.labels]
    C = gram_matrix(modes, derivs)
    G = gram_matrix(derivs)
    G = 0.5 * (G + G.conj().T)
    V = vacuum_projected(C, G, family.populated_indices)
    return OverlapData(family.labels, family.populated, C, G, 0.5 * (V + V.conj().T))


def single_mode_phase_amplitude_overlaps(
    amplitude: SampledFunction,
    amplitude_derivative: SampledFunction,
    phase_derivative: SampledFunction,
) -> tuple[complex, float]:
    """Overlaps of a mode ``A e^{-iφ}`` with real amplitude and phase.

    Returns ``((f|f'), (f'|f'))`` computed as ``-i∫A²φ'`` and
    ``∫(A'² + A²φ'²)``.
    """
    grid = amplitude.grid
    for g in (amplitude_derivative.grid, phase_derivative.grid):
        if not grid.same_as(g):
            raise GridMismatchError("amplitude and phase samples live on different grids")
    a = amplitude.values.real
    da = amplitude_derivative.values.real
    dphi = phase_derivative.values.real
    w = grid.weights
    f_fp = -1j * np.sum(w * a**2 * dphi)
    fp_fp = np.sum(w * (da**2 + a**2 * dphi**2))
    return complex(f_fp), float(fp_fp)


# Hermite-Gauss profiles, normalized so that ∫|u_n|² dx = 1 for waist w.

def _hg_norm(n: int, w: float) -> float:
    return (2.0 / np.pi) ** 0.25 / math.sqrt(2.0**n * math.factorial(n) * w)


def hermite_gauss_1d(n: int, x: np.ndarray, w: float) -> np.ndarray:
    return _hg_norm(n, w) * eval_hermite(n, math.sqrt(2.0) * x / w) * np.exp(-(x**2) / w**2)


def hermite_gauss_1d_dx(n: int, x: np.ndarray, w: float) -> np.ndarray:
    """``d u_n/dx = (√n u_{n-1} - √(n+1) u_{n+1}) / w``."""
    lower = math.sqrt(n) * hermite_gauss_1d(n - 1, x, w) if n > 0 else 0.0
    return (lower - math.sqrt(n + 1) * hermite_gauss_1d(n + 1, x, w)) / w


def hermite_gauss_1d_dw(n: int, x: np.ndarray, w: float) -> np.ndarray:
    u = hermite_gauss_1d(n, x, w)
    d = u * (-0.5 / w + 2.0 * x**2 / w**3)
    if n > 0:
        h_prime = 2.0 * n * eval_hermite(n - 1, math.sqrt(2.0) * x / w)
        d = d + _hg_norm(n, w) * h_prime * (-math.sqrt(2.0) * x / w**2) * np.exp(-(x**2) / w**2)
    return d


def hermite_gauss_2d(m: int, n: int, x, y, w: float) -> np.ndarray:
    return hermite_gauss_1d(m, x, w) * hermite_gauss_1d(n, y, w)


# Sampled point-spread functions.

def load_psf_csv(path: str | Path) -> SampledFunction:
    """Read a sampled PSF from CSV.

    Two columns ``x, Re`` or three columns ``x, Re, Im``; a non-numeric first
    row is treated as a header. The samples live on a trapezoid grid over the
    given nodes.
    """
    rows = []
    widths = set()
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            row = [c.strip() for c in row if c.strip() != ""]
            if not row or row[0].startswith("#"):
                continue
            try:
                nums = [float(c) for c in row]
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise ValidationError(f"{path}: non-numeric entry on line {i + 1}") from None
            if len(nums) not in (2, 3):
                raise ValidationError(f"{path}: expected 2 or 3 columns on line {i + 1}")
            widths.add(len(nums))
            rows.append(nums if len(nums) == 3 else nums + [0.0])
    if not rows:
        raise ValidationError(f"{path}: no samples")
    if len(widths) != 1:
        raise ValidationError(f"{path}: inconsistent column count")
    data = np.array(rows)
    order = np.argsort(data[:, 0])
    data = data[order]
    grid = grid_from_nodes(data[:, 0])
    return SampledFunction(grid, data[:, 1] + 1j * data[:, 2])


def write_psf_csv(path: str | Path, psf: SampledFunction) -> None:
    if psf.grid.dimension != 1:
        raise ValidationError("only 1D PSFs can be written")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "re", "im"])
        for x, v in zip(psf.grid.coords[0], psf.values):
            writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def normalize(f: SampledFunction) -> SampledFunction:
    n = f.norm()
    if n == 0:
        raise NumericalError("cannot normalize the zero function")
    return f / n


__all__ = [
    "ModeFamily",
    "OverlapData",
    "check_orthonormal",
    "compute_overlaps",
    "derivative_mode",
    "hermite_gauss_1d",
    "hermite_gauss_1d_dw",
    "hermite_gauss_1d_dx",
    "hermite_gauss_2d",
    "inner_product",
    "load_psf_csv",
    "normalize",
    "single_mode_phase_amplitude_overlaps",
    "vacuum_projected",
    "write_psf_csv",
]
