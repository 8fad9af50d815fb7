"""Quantum Fisher information for parameters encoded in the mode structure of light."""

from .errors import (
    DegenerateSeparationError,
    DimensionMismatchError,
    GridMismatchError,
    ModeQfiError,
    NonHermitianError,
    NonPsdStateError,
    NumericalError,
    OrthonormalityError,
    SpanDeficiencyError,
    TruncationError,
    UnknownScenarioError,
    ValidationError,
)
from .fock import (
    DensityOperator,
    FockOperatorSpace,
    QuadraticHamiltonian,
    assemble_hamiltonian,
    auto_state,
    build_state,
    evolve,
    passive_transform,
)
from .modes import ModeFamily, OverlapData, compute_overlaps, derivative_mode
from .numerics import CoordinateGrid, SampledFunction, gram_matrix, inner_product, make_grid
from .qfi import (
    QfiReport,
    extended_space_check,
    fd_fidelity_oracle,
    mode_parameter_qfi,
    root_fidelity,
    unitary_qfi,
)
from .scenarios import PsfScenario, Scenario, build_scenario, evaluate_scenario, gaussian_psf

__version__ = "0.1.0"

__all__ = [
    "CoordinateGrid",
    "DegenerateSeparationError",
    "DensityOperator",
    "DimensionMismatchError",
    "FockOperatorSpace",
    "GridMismatchError",
    "ModeFamily",
    "ModeQfiError",
    "NonHermitianError",
    "NonPsdStateError",
    "NumericalError",
    "OrthonormalityError",
    "OverlapData",
    "PsfScenario",
    "QfiReport",
    "QuadraticHamiltonian",
    "SampledFunction",
    "Scenario",
    "SpanDeficiencyError",
    "TruncationError",
    "UnknownScenarioError",
    "ValidationError",
    "assemble_hamiltonian",
    "auto_state",
    "build_scenario",
    "build_state",
    "compute_overlaps",
    "derivative_mode",
    "evaluate_scenario",
    "evolve",
    "extended_space_check",
    "fd_fidelity_oracle",
    "gaussian_psf",
    "gram_matrix",
    "inner_product",
    "make_grid",
    "mode_parameter_qfi",
    "passive_transform",
    "root_fidelity",
    "unitary_qfi",
]
