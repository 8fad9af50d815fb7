import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modeqfi.errors import DimensionMismatchError, NumericalError, SpanDeficiencyError, ValidationError
from modeqfi.fock import (
    DensityOperator,
    FockOperatorSpace,
    QuadraticHamiltonian,
    auto_state,
    build_state,
)
from modeqfi.modes import ModeFamily, compute_overlaps, hermite_gauss_1d
from modeqfi.numerics import make_grid
from modeqfi.qfi import (
    QfiReport,
    extended_space_check,
    fd_fidelity_oracle,
    mode_parameter_qfi,
    population_fisher_information,
    root_fidelity,
    unitary_qfi,
    vacuum_extension,
    vacuum_term,
)
from modeqfi.scenarios import build_scenario

from test_fock import random_state


def number_hamiltonian(space, k=1.0):
    return QuadraticHamiltonian(space, k * np.eye(space.n_modes))


def pure_variance(state, h):
    psi = state.dense_eigenvectors()[:, 0]
    hm = h.matrix()
    mean = np.vdot(psi, hm @ psi).real
    second = np.vdot(hm @ psi, hm @ psi).real
    return 4 * (second - mean**2)


@pytest.mark.parametrize("n, k", [(4, 3.0), (7, 1.0), (1, 0.5)])
def test_unitary_qfi_superposition(n, k):
    space = FockOperatorSpace((n,))
    s = build_state("fock-superposition", {"amps": {0: 1.0, n: 1.0}}, space)
    assert unitary_qfi(s, number_hamiltonian(space, k)) == pytest.approx(k**2 * n**2, abs=1e-10)


def test_unitary_qfi_coherent_poisson():
    alpha = 1.7
    s = auto_state([("coherent", {"alpha": alpha})], tol=1e-14)
    assert unitary_qfi(s, number_hamiltonian(s.space)) == pytest.approx(4 * alpha**2, abs=1e-10)


def test_unitary_qfi_vanishes_for_commuting_state():
    s = auto_state([("thermal", {"mean": 1.5}), ("thermal", {"mean": 0.5})], tol=1e-12)
    h = QuadraticHamiltonian(s.space, np.diag([1.0, -2.0]))
    assert abs(unitary_qfi(s, h)) < 1e-10


def test_unitary_qfi_space_mismatch():
    s = auto_state([("coherent", {"alpha": 1.0})], tol=1e-8)
    with pytest.raises(DimensionMismatchError):
        unitary_qfi(s, number_hamiltonian(FockOperatorSpace((3,))))


@given(st.integers(0, 2**32 - 1))
def test_pure_state_reduction(seed):
    rng = np.random.default_rng(seed)
    space = FockOperatorSpace((4, 4))
    s = random_state(rng, space, rank=1)
    c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = QuadraticHamiltonian(space, c + c.conj().T)
    assert unitary_qfi(s, h) == pytest.approx(pure_variance(s, h), abs=1e-10 * max(1, pure_variance(s, h)))


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
def test_convexity(seed, lam):
    rng = np.random.default_rng(seed)
    space = FockOperatorSpace((3, 3))
    scenario = build_scenario("hg-displacement", {})
    ov = compute_overlaps(scenario.family)
    r1 = random_state(rng, space, rank=2, support=2)
    r2 = random_state(rng, space, rank=2, support=2)
    mixed = DensityOperator.from_matrix(space, lam * r1.matrix() + (1 - lam) * r2.matrix(), drop_below=1e-15)
    f_mix = mode_parameter_qfi(mixed, ov).total
    bound = lam * mode_parameter_qfi(r1, ov).total + (1 - lam) * mode_parameter_qfi(r2, ov).total
    assert f_mix <= bound + 1e-9


def test_population_fisher_information():
    assert population_fisher_information([0.5, 0.5, 0.0], [0.1, -0.1, 0.0]) == pytest.approx(0.04)
    with pytest.raises(DimensionMismatchError):
        population_fisher_information([1.0], [0.0, 0.0])
    with pytest.raises(ValidationError):
        population_fisher_information([1.1, -0.1], [0.0, 0.0])


def test_vacuum_term_checks():
    assert vacuum_term(np.eye(2), np.diag([1.0, 2.0])) == pytest.approx(12.0)
    with pytest.raises(DimensionMismatchError):
        vacuum_term(np.eye(2), np.eye(3))
    with pytest.raises(NumericalError):
        vacuum_term(np.array([[0, 1j], [0, 0]]), np.ones((2, 2)))


def test_report_invariants():
    r = QfiReport(1.0, 2.0, 3.0)
    assert r.total == 6.0
    assert r.as_dict()["total"] == 6.0
    QfiReport(-1e-13, 0.0, 0.0)
    with pytest.raises(NumericalError):
        QfiReport(-1e-6, 0.0, 0.0)


@pytest.mark.parametrize("state, n, mean", [("coherent", 4, 4), ("fock", 4, 4), ("thermal", 4, 4),
                                           ("superposition", 4, 2)])
def test_displaced_gaussian_total(state, n, mean):
    w = 1.0
    scenario = build_scenario("displaced-gaussian", {"w": w, "state": state, "N": n})
    r = mode_parameter_qfi(scenario.state, compute_overlaps(scenario.family))
    assert r.total == pytest.approx(4 * mean / w**2, abs=1e-8)
    assert r.unitary_term == 0


def test_linear_phase_total():
    scenario = build_scenario("oam-linear-phase", {"k": 2, "state": "superposition", "N": 5})
    r = mode_parameter_qfi(scenario.state, compute_overlaps(scenario.family))
    assert r.total == pytest.approx(4 * 25, abs=1e-8)
    assert abs(r.vacuum_term) < 1e-12


def test_hg_displacement_coherent_only_in_f1():
    w, n = 1.0, 4.0
    scenario = build_scenario("hg-displacement", {"w": w, "N1": n})
    ov = compute_overlaps(scenario.family.with_populated(("f1",)))
    state = auto_state([("coherent", {"alpha": 2.0})], tol=1e-13)
    r = mode_parameter_qfi(state, ov)
    assert r.total == pytest.approx(4 * n / w**2, abs=1e-8)
    assert r.unitary_term == 0


def test_mode_parameter_qfi_mode_count_mismatch():
    scenario = build_scenario("hg-displacement", {})
    state = auto_state([("coherent", {"alpha": 1.0})], tol=1e-8)
    with pytest.raises(DimensionMismatchError):
        mode_parameter_qfi(state, compute_overlaps(scenario.family))


def test_sql_ceiling_linear_in_populations():
    family = build_scenario("hg-displacement", {}).family.with_populated(("f1",))
    ov = compute_overlaps(family)
    values = [mode_parameter_qfi(auto_state([("coherent", {"alpha": math.sqrt(n)})], tol=1e-14), ov)
              for n in (3.0, 6.0)]
    assert all(v.unitary_term == 0 for v in values)
    assert values[1].total == pytest.approx(2 * values[0].total, abs=1e-9)


def test_root_fidelity_basic():
    space = FockOperatorSpace((3,))
    a = DensityOperator(space, [1.0], np.eye(4)[:, :1])
    b = DensityOperator(space, [0.5, 0.5], np.eye(4)[:, :2])
    assert root_fidelity(a, a) == pytest.approx(1.0)
    assert root_fidelity(a, b) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(DimensionMismatchError):
        root_fidelity(a, DensityOperator(FockOperatorSpace((4,)), [1.0], np.eye(5)[:, :1]))


def test_fd_oracle_pure_state():
    space = FockOperatorSpace((6,))
    s = build_state("fock-superposition", {"amps": {0: 1.0, 6: 1.0}}, space)
    h = number_hamiltonian(space, 0.5)
    v = unitary_qfi(s, h)
    assert abs(fd_fidelity_oracle(s, h, 1e-3) - v) < 1e-4 * max(v, 1)


def test_fd_oracle_stationary_state():
    s = auto_state([("thermal", {"mean": 0.5})], tol=1e-10)
    assert abs(fd_fidelity_oracle(s, number_hamiltonian(s.space))) < 1e-8


def test_fd_oracle_thermal_mach_zehnder():
    s = auto_state([("thermal", {"mean": 1.0}), ("coherent", {"alpha": 1.0})], tol=1e-12)
    h = QuadraticHamiltonian(s.space, 0.5 * np.array([[0, 1], [1, 0]]))
    v = unitary_qfi(s, h)
    assert v > 0.1
    assert abs(fd_fidelity_oracle(s, h, 1e-3) - v) < 1e-4 * v


def test_fd_oracle_step_range():
    s = auto_state([("coherent", {"alpha": 1.0})], tol=1e-8)
    with pytest.raises(ValidationError):
        fd_fidelity_oracle(s, number_hamiltonian(s.space), 0.1)


def test_extended_check_hg_displacement_one_extra_mode():
    n = 3.0
    family = build_scenario("hg-displacement", {}).family.with_populated(("f1",))
    state = auto_state([("coherent", {"alpha": math.sqrt(n)})], tol=1e-14)
    extended, decomposed = extended_space_check(family, state, 1)
    assert extended == pytest.approx(4 * n, abs=1e-7)
    assert decomposed == pytest.approx(4 * n, abs=1e-7)


def test_extended_check_mach_zehnder_no_extra_modes():
    scenario = build_scenario("mach-zehnder", {"N1": 2.0, "state2": "squeezed", "r2": 0.4})
    extended, decomposed = extended_space_check(scenario.family, scenario.state, 0)
    assert extended == pytest.approx(decomposed, rel=1e-10)
    assert vacuum_extension(scenario.family) == []


def test_extended_check_waist_with_f2_populated():
    scenario = build_scenario("hg-waist", {"N1": 1.0, "state2": "coherent", "N2": 0.5})
    extended, decomposed = extended_space_check(scenario.family, scenario.state, 1)
    assert extended == pytest.approx(decomposed, rel=1e-7)


def _displaced_hg_pair():
    # u0' ∝ u1 and u2' ∝ √2 u1 - √3 u3: two independent vacuum directions
    grid = make_grid("gauss-legendre", -8.0, 8.0, 200)
    x = grid.coords[0]
    return ModeFamily(grid, (0, 2), lambda n, t: hermite_gauss_1d(n, x + t, 1.0), (0, 2), 1.0)


def test_extended_check_span_deficiency():
    family = _displaced_hg_pair()
    assert len(vacuum_extension(family)) == 2
    with pytest.raises(SpanDeficiencyError):
        vacuum_extension(family, 1)
    with pytest.raises(ValidationError):
        vacuum_extension(family, 3)


def test_extended_check_two_extra_modes():
    family = _displaced_hg_pair()
    state = auto_state([("coherent", {"alpha": 1.0}), ("squeezed-vacuum", {"r": 0.5})], tol=1e-14)
    extended, decomposed = extended_space_check(family, state, 2)
    assert extended == pytest.approx(decomposed, rel=1e-9)


def test_mode_outside_grid_support():
    grid = make_grid("gauss-legendre", -8.0, 8.0, 120)
    x = grid.coords[0]
    family = ModeFamily(grid, ("f",), lambda _, t: hermite_gauss_1d(0, x * (1 + t), 1.0) * math.sqrt(1 + t),
                        ("f",), 1.0)
    state = auto_state([("coherent", {"alpha": 1.0})], tol=1e-14)
    extended, decomposed = extended_space_check(family, state)
    assert extended == pytest.approx(decomposed, rel=1e-7)
    assert decomposed == pytest.approx(4 * 1.0 * compute_overlaps(family).V[0, 0].real, rel=1e-12)
