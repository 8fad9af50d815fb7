"""Quantum Fisher information engines and their oracles.

:func:`mode_parameter_qfi` evaluates the three-part decomposition
(population term, unitary term of the populated-block generator, vacuum-loss
term). :func:`fd_fidelity_oracle` and :func:`extended_space_check` are
independent routes used to verify it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonPsdStateError,
    NumericalError,
    SpanDeficiencyError,
    ValidationError,
)
from .fock import (
    DensityOperator,
    FockOperatorSpace,
    QuadraticHamiltonian,
    assemble_hamiltonian,
    evolve,
)
from .modes import ModeFamily, OverlapData, compute_overlaps, derivative_mode
from .numerics import SampledFunction, gram_matrix

ZERO_POPULATION = 1e-12
SPAN_TOL = 1e-8


@dataclass
class QfiReport:
    """Breakdown of the QFI into population, unitary and vacuum-loss terms."""

    classical_term: float
    unitary_term: float
    vacuum_term: float
    oracle_value: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("classical_term", "unitary_term", "vacuum_term"):
            value = float(getattr(self, name))
            if value < -1e-12:
                raise NumericalError(f"{name} is negative: {value!r}")
            setattr(self, name, value)

    @property
    def total(self) -> float:
        return self.classical_term + self.unitary_term + self.vacuum_term

    def as_dict(self) -> dict:
        out = asdict(self)
        out["total"] = self.total
        return out


def unitary_qfi(state: DensityOperator, hamiltonian: QuadraticHamiltonian) -> float:
    """QFI of ``e^{-iHθ} ρ e^{iHθ}`` from the spectral decomposition of ``ρ``.

    ``4⟨H²⟩ - 8 Σ p_n p_m/(p_n + p_m) |⟨ψ_n|H|ψ_m⟩|²``; eigenvalues below
    1e-12 are treated as zero.
    """
    if state.space != hamiltonian.space:
        raise DimensionMismatchError("state and Hamiltonian live on different spaces")
    keep = np.flatnonzero(state.eigenvalues > ZERO_POPULATION)
    p = state.eigenvalues[keep]
    sparse = state.sparse_eigenvectors()
    if sparse is not None:
        psi = sparse[:, keep]
        h_psi = (hamiltonian.matrix() @ psi).tocoo()
        second_moment = float(np.sum(p[h_psi.col] * np.abs(h_psi.data) ** 2))
        h_nm = (psi.conj().T @ h_psi.tocsc()).tocoo()
        pn, pm = p[h_nm.row], p[h_nm.col]
        cross = float(np.sum(pn * pm / (pn + pm) * np.abs(h_nm.data) ** 2))
    else:
        psi = state.dense_eigenvectors()[:, keep]
        h_psi = hamiltonian.matrix() @ psi
        second_moment = float(np.sum(p * np.sum(np.abs(h_psi) ** 2, axis=0)))
        h_nm = psi.conj().T @ h_psi
        weights = np.outer(p, p) / np.add.outer(p, p)
        cross = float(np.sum(weights * np.abs(h_nm) ** 2))
    value = 4.0 * second_moment - 8.0 * cross
    if value < 0 and value > -1e-10 * max(1.0, 4.0 * second_moment):
        value = 0.0
    return value


def population_fisher_information(populations, derivatives) -> float:
    """Classical Fisher information ``Σ (p_k')²/p_k`` over ``p_k > 0``."""
    p = np.asarray(populations, dtype=float)
    dp = np.asarray(derivatives, dtype=float)
    if p.shape != dp.shape:
        raise DimensionMismatchError("one derivative per population required")
    if np.any(p < -ZERO_POPULATION):
        raise ValidationError("negative population")
    # unlike the unitary term, tiny populations are kept: (p')²/p stays finite
    # for analytic derivatives and the tail matters for nearly empty modes
    keep = p > 0
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def vacuum_term(V: np.ndarray, correlations: np.ndarray) -> float:
    """``4 Σ_kl V[k, l] ⟨a_k† a_l⟩``, symmetrized before taking the real part."""
    V = np.asarray(V, dtype=complex)
    corr = np.asarray(correlations, dtype=complex)
    if V.shape != corr.shape:
        raise DimensionMismatchError("vacuum overlaps and correlations differ in shape")
    s = np.sum(V * corr)
    sym = 0.5 * (s + np.conj(s))
    if abs(s.imag) > 1e-10 * max(1.0, abs(s)):
        raise NumericalError(f"vacuum term has imaginary part {s.imag:.3g}")
    return float(4.0 * sym.real)


def mode_parameter_qfi(state: DensityOperator, overlaps: OverlapData,
                       population_derivatives: Sequence[float] | None = None) -> QfiReport:
    """QFI for a mode parameter at θ = 0.

    The modes of ``state`` correspond, in order, to ``overlaps.populated``.
    Population derivatives default to those carried by ``state``.
    """
    n_populated = len(overlaps.populated)
    if state.space.n_modes != n_populated:
        raise DimensionMismatchError(
            f"state has {state.space.n_modes} modes but {n_populated} modes are populated")
    dp = population_derivatives
    if dp is None:
        dp = state.population_derivatives
    classical = 0.0 if dp is None else population_fisher_information(state.eigenvalues, dp)
    hamiltonian = assemble_hamiltonian(overlaps, "populated-only", state.space)
    unitary = unitary_qfi(state, hamiltonian)
    vacuum = vacuum_term(overlaps.V, state.correlation_matrix())
    return QfiReport(classical, unitary, vacuum,
                     meta={"populated": [str(p) for p in overlaps.populated]})


def root_fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann root fidelity ``tr√(√ρ σ √ρ)`` as the nuclear norm of ``√σ √ρ``."""
    if rho.space != sigma.space:
        raise DimensionMismatchError("states live on different spaces")
    for s in (rho, sigma):
        if np.any(s.eigenvalues < -1e-10):
            raise NonPsdStateError("state has negative eigenvalues")
    p = np.clip(rho.eigenvalues, 0.0, None)
    q = np.clip(sigma.eigenvalues, 0.0, None)
    overlap = sigma.dense_eigenvectors().conj().T @ rho.dense_eigenvectors()
    b = np.sqrt(q)[:, None] * overlap * np.sqrt(p)[None, :]
    return float(np.sum(np.linalg.svd(b, compute_uv=False)))


def fd_fidelity_oracle(state: DensityOperator, hamiltonian: QuadraticHamiltonian,
                       dtheta: float = 1e-3) -> float:
    """Finite-difference QFI ``8 (1 - √F(ρ(0), ρ(dθ))) / dθ²``."""
    if not 1e-5 <= dtheta <= 1e-2:
        raise ValidationError(f"dtheta must lie in [1e-5, 1e-2], got {dtheta}")
    shifted = evolve(state, hamiltonian, dtheta)
    return 8.0 * (1.0 - root_fidelity(state, shifted)) / dtheta**2


def vacuum_extension(family: ModeFamily, n_extra: int | None = None,
                     method: str = "auto") -> list[SampledFunction]:
    """Orthonormal modes spanning the derivative-mode components outside the populated set.

    Modified Gram-Schmidt over ``f_k' - Σ_{j∈I} (f_j|f_k') f_j`` for k ∈ I.
    ``n_extra=None`` keeps every independent direction.

    Raises:
        SpanDeficiencyError: If ``n_extra`` modes leave a residual above 1e-8.
    """
    populated = [family.eval(k) for k in family.populated]
    derivs = [derivative_mode(family, k, method) for k in family.populated]
    residuals = []
    for d in derivs:
        r = d
        for f in populated:
            r = r - (gram_matrix([f], [r])[0, 0]) * f
        residuals.append(r)
    limit = len(residuals) if n_extra is None else n_extra
    extras: list[SampledFunction] = []
    scale = max([1.0] + [d.norm() for d in derivs])
    for r in residuals:
        for e in extras:
            r = r - gram_matrix([e], [r])[0, 0] * e
        for e in extras:
            r = r - gram_matrix([e], [r])[0, 0] * e
        n = r.norm()
        if n > SPAN_TOL * scale and len(extras) < limit:
            extras.append(r / n)
    leftover = 0.0
    for r in residuals:
        for e in extras:
            r = r - gram_matrix([e], [r])[0, 0] * e
        leftover = max(leftover, r.norm())
    if leftover > SPAN_TOL * scale:
        raise SpanDeficiencyError(
            f"{n_extra} extra vacuum modes leave a derivative-mode residual of {leftover:.3g}")
    if n_extra is not None and len(extras) < n_extra:
        raise ValidationError(
            f"only {len(extras)} independent vacuum directions exist, {n_extra} requested")
    return extras


def extended_hamiltonian(family: ModeFamily, extras: Sequence[SampledFunction],
                         space: FockOperatorSpace, method: str = "auto") -> QuadraticHamiltonian:
    """Generator on the populated modes plus explicit vacuum modes.

    Columns of populated modes come from quadrature; the populated rows of the
    vacuum columns follow from anti-Hermiticity. The vacuum-vacuum block never
    acts on a state without vacuum-mode photons and is set to zero.
    """
    basis = [family.eval(k) for k in family.populated] + list(extras)
    derivs = [derivative_mode(family, k, method) for k in family.populated]
    n_i = len(derivs)
    k = len(basis)
    c = np.zeros((k, k), dtype=complex)
    c[:, :n_i] = gram_matrix(basis, derivs)
    c[:n_i, n_i:] = -c[n_i:, :n_i].conj().T
    h = 1j * c
    err = np.max(np.abs(h - h.conj().T), initial=0.0)
    if err > 1e-8:
        raise NumericalError(f"extended generator deviates from Hermiticity by {err:.3g}")
    return QuadraticHamiltonian(space, 0.5 * (h + h.conj().T))


def extended_space_check(family: ModeFamily, state: DensityOperator,
                         n_extra_vacuum_modes: int | None = None, method: str = "auto") -> tuple[float, float]:
    """Compare the decomposition with an explicit model of the vacuum modes.

    Returns ``(extended, decomposed)``: the unitary QFI of the state embedded
    in the populated modes plus ``n_extra_vacuum_modes`` explicit vacuum
    modes (all independent directions when None), and the total of :func:`mode_parameter_qfi`. Both include the
    population term of ``state`` when it carries derivatives.
    """
    overlaps = compute_overlaps(family, method)
    report = mode_parameter_qfi(state, overlaps)
    extras = vacuum_extension(family, n_extra_vacuum_modes, method)
    space = FockOperatorSpace(state.space.cutoffs + (1,) * len(extras))
    hamiltonian = extended_hamiltonian(family, extras, space, method)
    extended = unitary_qfi(state.embed(space), hamiltonian) + report.classical_term
    return extended, report.total
