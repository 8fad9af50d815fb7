"""Truncated multimode Fock space: operators, quadratic Hamiltonians, states.

Basis states ``|n_0, n_1, ...⟩`` are ordered with mode 0 as the slowest
index, matching ``np.kron`` of single-mode operators. Each mode carries its
own cutoff, so modes that only ever receive a single photon (vacuum modes of
an extended basis) can be kept two-dimensional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.special import gammaln

from .errors import (
    DimensionMismatchError,
    NonHermitianError,
    NumericalError,
    TruncationError,
    ValidationError,
)

CAPTURE_TOL = 1e-8
SPARSE_FRACTION = 0.05
STATE_KINDS = ("fock-superposition", "coherent", "thermal", "squeezed-vacuum", "product")
MAX_AUTO_CUTOFF = 2000


@dataclass(frozen=True, eq=False)
class FockOperatorSpace:
    """Tensor product of truncated single-mode Fock spaces.

    Attributes:
        cutoffs: Maximum occupation ``n_max`` of each mode.
    """

    cutoffs: tuple[int, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not cutoffs or any(c < 1 for c in cutoffs):
            raise ValidationError("need at least one mode and cutoffs >= 1")
        object.__setattr__(self, "cutoffs", cutoffs)

    @classmethod
    def uniform(cls, n_modes: int, cutoff: int) -> FockOperatorSpace:
        return cls((cutoff,) * n_modes)

    @property
    def n_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    def __eq__(self, other):
        return isinstance(other, FockOperatorSpace) and self.cutoffs == other.cutoffs

    def __hash__(self):
        return hash(self.cutoffs)

    def index(self, occupations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def occupations(self) -> np.ndarray:
        """``(dim, n_modes)`` array of the occupation numbers of each basis state."""
        if "occ" not in self._cache:
            occ = np.array(np.unravel_index(np.arange(self.dim), self.dims)).T
            occ.setflags(write=False)
            self._cache["occ"] = occ
        return self._cache["occ"]

    def annihilation(self, k: int) -> sps.csr_matrix:
        if not 0 <= k < self.n_modes:
            raise ValidationError(f"mode index {k} out of range")
        key = ("a", k)
        if key not in self._cache:
            factors = [sps.identity(d, format="csr") for d in self.dims]
            d = self.dims[k]
            factors[k] = sps.diags(np.sqrt(np.arange(1, d)), 1, shape=(d, d), format="csr")
            self._cache[key] = reduce(lambda a, b: sps.kron(a, b, format="csr"), factors).astype(complex)
        return self._cache[key]

    def creation(self, k: int) -> sps.csr_matrix:
        return self.annihilation(k).conj().T.tocsr()

    def number(self, k: int) -> sps.csr_matrix:
        return sps.diags(self.occupations()[:, k].astype(complex), format="csr")

    def total_number(self) -> sps.csr_matrix:
        return sps.diags(self.occupations().sum(axis=1).astype(complex), format="csr")

    def hopping(self, j: int, k: int) -> sps.csr_matrix:
        """``a_j† a_k``."""
        key = ("hop", j, k)
        if key not in self._cache:
            self._cache[key] = (self.creation(j) @ self.annihilation(k)).tocsr()
        return self._cache[key]

    def basis_vector(self, occupations: Sequence[int]) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(occupations)] = 1.0
        return v


@dataclass(frozen=True, eq=False)
class QuadraticHamiltonian:
    """``H = Σ_jk h[j, k] a_j† a_k`` on a truncated Fock space."""

    space: FockOperatorSpace
    coeffs: np.ndarray
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        h = np.array(self.coeffs, dtype=complex)
        m = self.space.n_modes
        if h.shape != (m, m):
            raise DimensionMismatchError(f"coefficient matrix {h.shape} does not match {m} modes")
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12:
            raise NonHermitianError("Hamiltonian coefficients are not Hermitian")
        h.setflags(write=False)
        object.__setattr__(self, "coeffs", h)

    def matrix(self) -> sps.csr_matrix:
        if "mat" not in self._cache:
            sp = self.space
            out = sps.csr_matrix((sp.dim, sp.dim), dtype=complex)
            for j, k in zip(*np.nonzero(self.coeffs)):
                out = out + self.coeffs[j, k] * sp.hopping(j, k)
            self._cache["mat"] = out.tocsr()
        return self._cache["mat"]

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if "eig" not in self._cache:
            self._cache["eig"] = np.linalg.eigh(self.matrix().toarray())
        return self._cache["eig"]

    def propagator(self, theta: float) -> np.ndarray:
        """Dense ``exp(-i H θ)`` via the spectral decomposition of ``H``."""
        e, v = self.eigh()
        return (v * np.exp(-1j * theta * e)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Spectrally decomposed state ``ρ = Σ_n p_n |ψ_n⟩⟨ψ_n|``.

    Attributes:
        space: Fock space the eigenvectors live in.
        eigenvalues: Probabilities ``p_n``.
        eigenvectors: ``(dim, r)`` matrix; column ``n`` is ``|ψ_n⟩``. Stored
            as a sparse CSC matrix when most entries vanish (Fock-diagonal
            mixtures), otherwise as a dense array.
        population_derivatives: Optional ``dp_n/dθ``, one per eigenvalue.
    """

    space: FockOperatorSpace
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    population_derivatives: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.eigenvalues, dtype=float).ravel()
        vecs = as_eigenvector_matrix(self.eigenvectors)
        if vecs.shape != (self.space.dim, p.size):
            raise DimensionMismatchError(
                f"eigenvectors {vecs.shape} do not match dim {self.space.dim} and {p.size} eigenvalues")
        if np.any(p < -1e-12):
            raise ValidationError("negative population in density operator")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValidationError(f"eigenvalues sum to {p.sum()!r}, expected 1")
        if sps.issparse(vecs):
            gram = (vecs.conj().T @ vecs - sps.identity(p.size, format="csr")).tocoo().data
        else:
            gram = (vecs.conj().T @ vecs - np.eye(p.size)).ravel()
        if np.max(np.abs(gram), initial=0.0) > 1e-10:
            raise ValidationError("eigenvectors are not orthonormal")
        dp = self.population_derivatives
        if dp is not None:
            dp = np.array(dp, dtype=float).ravel()
            if dp.shape != p.shape:
                raise DimensionMismatchError("one population derivative per eigenvalue required")
            if abs(dp.sum()) > 1e-10:
                raise ValidationError("population derivatives must sum to zero")
            dp.setflags(write=False)
        p.setflags(write=False)
        if not sps.issparse(vecs):
            vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", p)
        object.__setattr__(self, "eigenvectors", vecs)
        object.__setattr__(self, "population_derivatives", dp)

    @classmethod
    def pure(cls, space: FockOperatorSpace, vector) -> DensityOperator:
        v = np.asarray(vector, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise ValidationError("zero state vector")
        return cls(space, [1.0], (v / n)[:, None])

    @classmethod
    def from_matrix(cls, space: FockOperatorSpace, rho, drop_below: float = 0.0) -> DensityOperator:
        rho = np.asarray(rho, dtype=complex)
        e, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        if e.min() < -1e-10:
            raise ValidationError("density matrix has negative eigenvalues")
        e = np.clip(e, 0.0, None)
        keep = e > drop_below
        e, v = e[keep], v[:, keep]
        return cls(space, e / e.sum(), v)

    @property
    def rank(self) -> int:
        return self.eigenvalues.size

    def dense_eigenvectors(self) -> np.ndarray:
        v = self.eigenvectors
        return v.toarray() if sps.issparse(v) else v

    def matrix(self) -> np.ndarray:
        v = self.dense_eigenvectors()
        return (v * self.eigenvalues) @ v.conj().T

    def purity(self) -> float:
        # eigenvectors are orthonormal, so tr ρ² = Σ p²
        return float(np.sum(self.eigenvalues**2))

    def expectation(self, op) -> complex:
        v = self.eigenvectors
        if sps.issparse(v):
            per_vector = np.asarray(v.conj().multiply(op @ v).sum(axis=0)).ravel()
        else:
            per_vector = np.sum(v.conj() * (op @ v), axis=0)
        return complex(np.sum(self.eigenvalues * per_vector))

    def sparse_eigenvectors(self) -> sps.csc_matrix | None:
        """Eigenvectors as a sparse matrix, or None when they are stored densely."""
        v = self.eigenvectors
        return v if sps.issparse(v) else None

    def correlation_matrix(self) -> np.ndarray:
        """``M[k, l] = ⟨a_k† a_l⟩``."""
        m = self.space.n_modes
        vecs = self.eigenvectors
        weights = sps.diags(self.eigenvalues) if sps.issparse(vecs) else self.eigenvalues
        lowered = [self.space.annihilation(k) @ vecs for k in range(m)]
        out = np.empty((m, m), dtype=complex)
        for k in range(m):
            for l in range(m):
                if sps.issparse(vecs):
                    out[k, l] = (lowered[k].conj().multiply(lowered[l]) @ weights).sum()
                else:
                    out[k, l] = np.sum(weights * np.sum(lowered[k].conj() * lowered[l], axis=0))
        return out

    def mean_photons(self) -> np.ndarray:
        occ = self.space.occupations()
        v = self.eigenvectors
        if sps.issparse(v):
            probs = np.asarray(abs(v).power(2) @ self.eigenvalues).ravel()
        else:
            probs = np.sum(self.eigenvalues * np.abs(v) ** 2, axis=1)
        return probs @ occ

    def with_population_derivatives(self, dp) -> DensityOperator:
        return DensityOperator(self.space, self.eigenvalues, self.eigenvectors, dp)

    def embed(self, space: FockOperatorSpace) -> DensityOperator:
        """Tensor with vacuum in the trailing modes of ``space``."""
        m = self.space.n_modes
        if space.cutoffs[:m] != self.space.cutoffs:
            raise DimensionMismatchError("target space must extend the state's space")
        rest = math.prod(space.dims[m:])
        vac = sps.csc_matrix(([1.0], ([0], [0])), shape=(rest, 1))
        v = self.eigenvectors
        embedded = sps.kron(v, vac, format="csc") if sps.issparse(v) else np.kron(v, vac.toarray())
        return DensityOperator(space, self.eigenvalues, embedded,
                               self.population_derivatives)


def as_eigenvector_matrix(vecs):
    """Sparse CSC for wide, mostly-zero eigenvector sets; a dense complex array otherwise."""
    if sps.issparse(vecs):
        nnz, shape = vecs.nnz, vecs.shape
    else:
        vecs = np.array(vecs, dtype=complex)
        if vecs.ndim == 1:
            vecs = vecs[:, None]
        nnz, shape = np.count_nonzero(vecs), vecs.shape
    if shape[1] >= 32 and nnz <= SPARSE_FRACTION * shape[0] * shape[1]:
        return sps.csc_matrix(vecs, dtype=complex)
    if sps.issparse(vecs):
        return vecs.toarray().astype(complex)
    return vecs


# single-mode amplitude and population builders

def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    if alpha == 0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def squeezed_vacuum_amplitudes(r: float, phase: float, cutoff: int) -> np.ndarray:
    """``S(ξ)|0⟩`` with ``ξ = r e^{i phase}``; ``phase = 0`` squeezes ``x = (a + a†)/√2``."""
    out = np.zeros(cutoff + 1, dtype=complex)
    if r == 0:
        out[0] = 1.0
        return out
    m = np.arange(cutoff // 2 + 1)
    t = math.tanh(r)
    log_mag = m * math.log(t) + 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1)
    out[2 * m] = np.exp(log_mag - 0.5 * math.log(math.cosh(r))) * (-np.exp(1j * phase)) ** m
    return out


def thermal_populations(mean: float, cutoff: int) -> np.ndarray:
    """Geometric populations ``p_n = (1-q) q^n``, ``q = mean/(mean+1)``; not renormalized."""
    if mean == 0:
        p = np.zeros(cutoff + 1)
        p[0] = 1.0
        return p
    q = mean / (mean + 1.0)
    return (1.0 - q) * q ** np.arange(cutoff + 1)


def _single_mode(kind: str, params: Mapping, cutoff: int) -> tuple[np.ndarray, np.ndarray, float]:
    """(populations, eigenvector columns, captured probability) before renormalization."""
    d = cutoff + 1
    if kind == "coherent":
        alpha = complex(params.get("alpha", math.sqrt(params.get("mean", 0.0))))
        if not np.isfinite(alpha):
            raise ValidationError("coherent amplitude must be finite")
        amps = coherent_amplitudes(alpha, cutoff)
    elif kind == "squeezed-vacuum":
        r = float(params["r"])
        if r < 0:
            raise ValidationError("squeezing parameter must be non-negative")
        amps = squeezed_vacuum_amplitudes(r, float(params.get("phase", 0.0)), cutoff)
    elif kind == "fock-superposition":
        raw = params["amps"]
        amps = np.zeros(d, dtype=complex)
        total = sum(abs(complex(a)) ** 2 for a in raw.values())
        if total == 0:
            raise ValidationError("empty superposition")
        for n, a in raw.items():
            n = int(n)
            if n < 0:
                raise ValidationError("Fock index must be non-negative")
            if n <= cutoff:
                amps[n] = a
        captured = float(np.sum(np.abs(amps) ** 2) / total)
        amps = amps / math.sqrt(total)
        return np.array([1.0]), amps[:, None], captured
    elif kind == "thermal":
        mean = float(params["mean"])
        if not mean >= 0:
            raise ValidationError("mean photon number must be non-negative")
        p = thermal_populations(mean, cutoff)
        return p, np.eye(d, dtype=complex), float(p.sum())
    else:
        raise ValidationError(f"unknown single-mode state kind {kind!r}")
    captured = float(np.sum(np.abs(amps) ** 2))
    return np.array([1.0]), amps[:, None], captured


def required_cutoff(kind: str, params: Mapping, tol: float = CAPTURE_TOL) -> int:
    """Smallest cutoff capturing at least ``1 - tol`` of the state's probability."""
    if kind == "fock-superposition":
        return max(1, max(int(n) for n in params["amps"]))
    if kind == "vacuum":
        return 1
    if kind == "thermal":
        mean = float(params["mean"])
        if mean == 0:
            return 1
        q = mean / (mean + 1.0)
        return max(1, math.ceil(math.log(tol) / math.log(q)) - 1)
    cutoff = 1
    while cutoff <= MAX_AUTO_CUTOFF:
        _, _, captured = _single_mode(kind, params, cutoff)
        if captured >= 1.0 - tol:
            return cutoff
        cutoff += 1 if cutoff < 16 else max(1, cutoff // 8)
    raise TruncationError(f"{kind} state needs a cutoff above {MAX_AUTO_CUTOFF}")


def _normalize_factor(factor) -> tuple[str, dict]:
    if isinstance(factor, str):
        return factor, {}
    if isinstance(factor, Mapping):
        params = dict(factor)
        return params.pop("kind"), params
    kind, params = factor
    return kind, dict(params)


def _build_factor(kind: str, params: Mapping, cutoff: int, tol: float):
    if kind == "vacuum":
        kind, params = "fock-superposition", {"amps": {0: 1.0}}
    p, vecs, captured = _single_mode(kind, params, cutoff)
    if captured < 1.0 - tol:
        raise TruncationError(
            f"cutoff {cutoff} captures only {captured:.12f} of the {kind} state; "
            f"at least {1 - tol} required")
    if kind == "thermal":
        p = p / p.sum()
    else:
        vecs = vecs / np.linalg.norm(vecs)
    return p, vecs


def build_state(kind: str, params: Mapping, space: FockOperatorSpace,
                tol: float = CAPTURE_TOL) -> DensityOperator:
    """Build a normalized state on ``space``.

    Single-mode kinds (``coherent``, ``thermal``, ``squeezed-vacuum``,
    ``fock-superposition``) occupy ``params["mode"]`` (default 0) with vacuum
    elsewhere; a ``fock-superposition`` whose ``amps`` keys are occupation
    tuples is a joint multimode superposition. ``product`` takes
    ``params["factors"]``, one ``(kind, params)`` entry per mode.

    Raises:
        TruncationError: If the cutoff captures less than ``1 - tol``.
    """
    m = space.n_modes
    if kind == "fock-superposition" and any(isinstance(n, tuple) for n in params["amps"]):
        vec = np.zeros(space.dim, dtype=complex)
        total = 0.0
        for occ, a in params["amps"].items():
            if len(occ) != m:
                raise DimensionMismatchError("occupation tuple does not match the number of modes")
            total += abs(a) ** 2
            if all(n <= c for n, c in zip(occ, space.cutoffs)):
                vec[space.index(occ)] += a
        if total == 0:
            raise ValidationError("empty superposition")
        captured = float(np.sum(np.abs(vec) ** 2) / total)
        if captured < 1.0 - tol:
            raise TruncationError(f"cutoff captures only {captured:.12f} of the superposition")
        return DensityOperator.pure(space, vec)
    if kind == "product":
        factors = [_normalize_factor(f) for f in params["factors"]]
        if len(factors) != m:
            raise DimensionMismatchError(f"{len(factors)} factors for {m} modes")
    elif kind in STATE_KINDS:
        mode = int(params.get("mode", 0))
        if not 0 <= mode < m:
            raise ValidationError(f"mode {mode} out of range")
        single = {k: v for k, v in params.items() if k != "mode"}
        factors = [("vacuum", {})] * m
        factors[mode] = (kind, single)
    else:
        raise ValidationError(f"unknown state kind {kind!r}; expected one of {STATE_KINDS}")
    built = [_build_factor(k, p, c, tol) for (k, p), c in zip(factors, space.cutoffs)]
    probs = reduce(np.kron, [b[0] for b in built])
    if all(b[1].shape[1] == 1 for b in built):
        vecs = reduce(np.kron, [b[1] for b in built])
    else:
        vecs = reduce(lambda a, b: sps.kron(a, b, format="csc"), [sps.csc_matrix(b[1]) for b in built])
    return DensityOperator(space, probs / probs.sum(), vecs)


def auto_state(factors: Sequence, tol: float = CAPTURE_TOL, min_cutoff: int = 1) -> DensityOperator:
    """Product state on a space whose per-mode cutoffs are sized to ``tol``."""
    normalized = [_normalize_factor(f) for f in factors]
    cutoffs = tuple(max(min_cutoff, required_cutoff(k, p, tol)) for k, p in normalized)
    return build_state("product", {"factors": normalized}, FockOperatorSpace(cutoffs), tol)


def evolve(state: DensityOperator, hamiltonian: QuadraticHamiltonian, theta: float) -> DensityOperator:
    """``ρ(θ) = e^{-iHθ} ρ e^{iHθ}``; populations are unchanged, eigenvectors rotate."""
    if state.space != hamiltonian.space:
        raise DimensionMismatchError("state and Hamiltonian live on different spaces")
    if theta == 0:
        return state
    vecs = hamiltonian.propagator(theta) @ state.dense_eigenvectors()
    # re-orthonormalize against rounding drift of the dense propagator
    q, r = np.linalg.qr(vecs)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return DensityOperator(state.space, state.eigenvalues, q, state.population_derivatives)


def passive_transform(state: DensityOperator, W: np.ndarray) -> DensityOperator:
    """Apply the linear-optics map ``a_k† → Σ_j W[j, k] a_j†`` to every eigenvector.

    Each Fock component is rebuilt by substituting the mapped creation
    operators into ``Π_k (a_k†)^{n_k}/√(n_k!)``. Exact when the total photon
    number of the state does not exceed any single-mode cutoff.
    """
    space = state.space
    W = np.asarray(W, dtype=complex)
    m = space.n_modes
    if W.shape != (m, m):
        raise DimensionMismatchError("mode transformation must be n_modes × n_modes")
    mapped = [sum(W[j, k] * space.creation(j) for j in range(m) if W[j, k] != 0) for k in range(m)]
    occ = space.occupations()
    dense = state.dense_eigenvectors()
    out = np.zeros_like(dense)
    vac = space.basis_vector([0] * m)
    for col in range(state.rank):
        vec = dense[:, col]
        for idx in np.flatnonzero(np.abs(vec) > 0):
            v = vac
            for k, n in enumerate(occ[idx]):
                for _ in range(n):
                    v = mapped[k] @ v
                v = v / math.sqrt(math.factorial(int(n)))
            out[:, col] += vec[idx] * v
    norms = np.linalg.norm(out, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise NumericalError("passive transformation leaked out of the truncated space")
    return DensityOperator(space, state.eigenvalues, out / norms, state.population_derivatives)


def assemble_hamiltonian(overlaps, which: str, space: FockOperatorSpace) -> QuadraticHamiltonian:
    """Effective beam-splitter generator ``h = i C`` from raw overlaps.

    ``which="populated-only"`` uses the block of ``C`` over the populated
    modes (the generator restricted to I); ``"extended"`` uses every mode of
    ``overlaps``, vacuum modes included.

    Raises:
        NonHermitianError: If ``i C`` is not Hermitian to 1e-8.
        DimensionMismatchError: If ``space`` has the wrong number of modes.
    """
    if which == "populated-only":
        c = overlaps.populated_C
    elif which == "extended":
        c = overlaps.C
    else:
        raise ValidationError(f"unknown Hamiltonian block {which!r}")
    h = 1j * np.asarray(c, dtype=complex)
    err = np.max(np.abs(h - h.conj().T), initial=0.0)
    if err > 1e-8:
        raise NonHermitianError(f"i·C deviates from Hermiticity by {err:.3g}")
    if space.n_modes != h.shape[0]:
        raise DimensionMismatchError(f"space has {space.n_modes} modes, Hamiltonian needs {h.shape[0]}")
    return QuadraticHamiltonian(space, 0.5 * (h + h.conj().T))
