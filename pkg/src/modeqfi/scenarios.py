"""Named, parametrized estimation scenarios with closed-form cross-checks.

Each scenario bundles a mode family, a product-state recipe, optional
population derivatives and, where one exists, an independent closed-form
value for the total QFI.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateSeparationError, UnknownScenarioError, ValidationError
from .fock import (
    DensityOperator,
    FockOperatorSpace,
    assemble_hamiltonian,
    auto_state,
    build_state,
    required_cutoff,
    thermal_populations,
)
from .modes import (
    ModeFamily,
    OverlapData,
    compute_overlaps,
    hermite_gauss_1d,
    hermite_gauss_1d_dw,
    hermite_gauss_1d_dx,
    hermite_gauss_2d,
    load_psf_csv,
)
from .numerics import CoordinateGrid, SampledFunction, make_grid
from .qfi import QfiReport, extended_space_check, mode_parameter_qfi, unitary_qfi, vacuum_term

DEFAULT_QUAD_N = 200
DEFAULT_CAPTURE_TOL = 1e-12
WINDOW = 8.0  # integration half-width in units of the family's length scale
DEGENERATE_OVERLAP = 1.0 - 1e-12


def quad_nodes(params: Mapping | None = None) -> int:
    if params and "quad_n" in params:
        return int(params["quad_n"])
    return int(os.environ.get("MODEQFI_QUAD_N", DEFAULT_QUAD_N))


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    params: dict
    family: ModeFamily
    state_recipe: tuple
    state: DensityOperator
    expected_closed_form: float | None = None
    population_derivatives: np.ndarray | None = None
    psf: PsfScenario | None = None


# State recipes and their closed-form moments

_STATE_ALIASES = ("coherent", "thermal", "fock", "superposition", "squeezed", "vacuum")


def state_factor(kind: str, N: float = 0.0, r: float = 0.0, phase: float = 0.0) -> tuple[str, dict]:
    """Single-mode factor from a short recipe name.

    ``superposition`` is ``(|0⟩ + |N⟩)/√2`` with integer ``N``; ``fock`` is
    ``|N⟩``; ``coherent`` has real amplitude ``√N``.
    """
    if kind == "coherent":
        if N < 0:
            raise ValidationError("mean photon number must be non-negative")
        return "coherent", {"alpha": math.sqrt(N)}
    if kind == "thermal":
        if N < 0:
            raise ValidationError("mean photon number must be non-negative")
        return "thermal", {"mean": float(N)}
    if kind in ("fock", "superposition"):
        n = int(round(N))
        if n != N or n < 0:
            raise ValidationError(f"{kind} state needs a non-negative integer N, got {N}")
        amps = {n: 1.0} if kind == "fock" else {0: 1 / math.sqrt(2), n: 1 / math.sqrt(2)}
        if kind == "superposition" and n == 0:
            amps = {0: 1.0}
        return "fock-superposition", {"amps": amps}
    if kind == "squeezed":
        if r < 0:
            raise ValidationError("squeezing parameter must be non-negative")
        return "squeezed-vacuum", {"r": float(r), "phase": float(phase)}
    if kind == "vacuum":
        return "vacuum", {}
    raise ValidationError(f"unknown state {kind!r}; expected one of {_STATE_ALIASES}")


def factor_mean(factor: tuple[str, dict]) -> float:
    kind, p = factor
    if kind == "coherent":
        return abs(p["alpha"]) ** 2
    if kind == "thermal":
        return p["mean"]
    if kind == "squeezed-vacuum":
        return math.sinh(p["r"]) ** 2
    if kind == "fock-superposition":
        weights = {n: abs(a) ** 2 for n, a in p["amps"].items()}
        return sum(n * w for n, w in weights.items()) / sum(weights.values())
    return 0.0


def factor_number_qfi(factor: tuple[str, dict]) -> float:
    """QFI of the factor under ``e^{-iNθ}``: 4 Var(N) for pure states, 0 for number-diagonal."""
    kind, p = factor
    if kind == "coherent":
        return 4.0 * abs(p["alpha"]) ** 2
    if kind in ("thermal", "vacuum"):
        return 0.0
    if kind == "squeezed-vacuum":
        return 8.0 * (math.sinh(p["r"]) * math.cosh(p["r"])) ** 2
    if kind == "fock-superposition":
        weights = {n: abs(a) ** 2 for n, a in p["amps"].items()}
        total = sum(weights.values())
        mean = sum(n * w for n, w in weights.items()) / total
        second = sum(n * n * w for n, w in weights.items()) / total
        return 4.0 * (second - mean**2)
    raise ValidationError(f"no closed form for {kind}")


def _squeeze_moments(factor) -> tuple[float, float, float] | None:
    """(sinh r, cosh r, phase) for squeezed vacuum or vacuum; None otherwise."""
    kind, p = factor
    if kind == "vacuum" or (kind == "fock-superposition" and set(p["amps"]) == {0}):
        return 0.0, 1.0, 0.0
    if kind == "squeezed-vacuum":
        return math.sinh(p["r"]), math.cosh(p["r"]), p["phase"]
    return None


def _single_mode_recipe(params: Mapping, suffix: str = "", default_state: str = "coherent",
                        default_N: float = 4.0) -> tuple[str, dict]:
    return state_factor(
        str(params.get(f"state{suffix}", default_state)),
        float(params.get(f"N{suffix}", default_N)),
        float(params.get(f"r{suffix}", 0.0)),
        float(params.get(f"phase{suffix}", 0.0)),
    )


def _build_state(factors, params) -> DensityOperator:
    return auto_state(factors, tol=float(params.get("capture_tol", DEFAULT_CAPTURE_TOL)))


# Single-mode scenarios

def _single_mode_scenario(name, params, grid, profile, derivative, length, closed_form_fn):
    family = ModeFamily(grid, ("f",), profile, ("f",), length, derivative)
    factor = _single_mode_recipe(params)
    state = _build_state([factor], params)
    return Scenario(name, dict(params), family, (factor,), state, closed_form_fn(factor))


def _positive(params, key, default):
    value = float(params.get(key, default))
    if not value > 0:
        raise ValidationError(f"{key} must be positive, got {value}")
    return value


def gaussian_amplitude(x, width):
    """``(2/π w²)^{1/4} e^{-x²/w²}``, unit L2 norm."""
    return (2.0 / (math.pi * width**2)) ** 0.25 * np.exp(-(x**2) / width**2)


def gaussian_amplitude_dx(x, width):
    return -2.0 * x / width**2 * gaussian_amplitude(x, width)


def displaced_gaussian(params: Mapping) -> Scenario:
    w = _positive(params, "w", 1.0)
    grid = make_grid("gauss-legendre", -WINDOW * w, WINDOW * w, quad_nodes(params))
    x = grid.coords[0]
    return _single_mode_scenario(
        "displaced-gaussian", params, grid,
        lambda _, t: gaussian_amplitude(x + t, w),
        lambda _: gaussian_amplitude_dx(x, w),
        w,
        lambda factor: 4.0 * factor_mean(factor) / w**2,
    )


def oam_linear_phase(params: Mapping) -> Scenario:
    k = float(params.get("k", 1))
    if k != int(k):
        raise ValidationError("the azimuthal winding k must be an integer")
    grid = make_grid("periodic", 0.0, 2 * math.pi, quad_nodes(params))
    phi = grid.coords[0]
    norm = 1.0 / math.sqrt(2 * math.pi)
    return _single_mode_scenario(
        "oam-linear-phase", params, grid,
        lambda _, t: norm * np.exp(-1j * k * (phi + t)),
        lambda _: -1j * k * norm * np.exp(-1j * k * phi),
        1.0,
        lambda factor: k**2 * factor_number_qfi(factor),
    )


def spectroscopy_frequency(params: Mapping) -> Scenario:
    T = float(params.get("T", 1.0))
    sigma = _positive(params, "sigma", 1.0)
    omega0 = float(params.get("omega0", 0.0))
    grid = make_grid("gauss-legendre", -WINDOW * sigma, WINDOW * sigma, quad_nodes(params))
    w = grid.coords[0]

    def profile(_, t):
        return gaussian_amplitude(w + t, sigma) * np.exp(-1j * (w - omega0 + t) * T)

    def derivative(_):
        return (gaussian_amplitude_dx(w, sigma) - 1j * T * gaussian_amplitude(w, sigma)) \
            * np.exp(-1j * (w - omega0) * T)

    return _single_mode_scenario(
        "spectroscopy-frequency", params, grid, profile, derivative, sigma,
        lambda factor: T**2 * factor_number_qfi(factor) + 4.0 * factor_mean(factor) / sigma**2,
    )


def pulsed_time(params: Mapping) -> Scenario:
    omega0 = float(params.get("omega0", 5.0))
    tau = _positive(params, "tau", 1.0)
    grid = make_grid("gauss-legendre", -WINDOW * tau, WINDOW * tau, quad_nodes(params))
    t_ = grid.coords[0]

    def profile(_, th):
        return gaussian_amplitude(t_ + th, tau) * np.exp(-1j * omega0 * (t_ + th))

    def derivative(_):
        return (gaussian_amplitude_dx(t_, tau) - 1j * omega0 * gaussian_amplitude(t_, tau)) \
            * np.exp(-1j * omega0 * t_)

    return _single_mode_scenario(
        "pulsed-time", params, grid, profile, derivative, tau,
        lambda factor: omega0**2 * factor_number_qfi(factor) + 4.0 * factor_mean(factor) / tau**2,
    )


# Two-mode scenarios

def _two_mode_factors(params, default_state2="vacuum", default_phase2=0.0):
    f1 = _single_mode_recipe(params, "1", "coherent", 4.0)
    merged = dict(params)
    merged.setdefault("phase2", default_phase2)
    f2 = _single_mode_recipe(merged, "2", default_state2, 0.0)
    return f1, f2


def _coherent_amplitude(factor) -> complex | None:
    kind, p = factor
    if kind == "coherent":
        return complex(p["alpha"])
    return None


def _hg_closed_form(f1, f2, w, vacuum_weight) -> float | None:
    """``w^-2 [4⟨H'²⟩ + vacuum_weight ⟨n2⟩]`` with ``H' = i(a2†a1 - a1†a2)``."""
    sq = _squeeze_moments(f2)
    if sq is None:
        return None
    s, c, phi = sq
    if s == 0:
        # mode 2 empty: any state in mode 1 gives 4⟨n1⟩
        return 4.0 * factor_mean(f1) / w**2
    alpha = _coherent_amplitude(f1)
    if alpha is None:
        return None
    n1 = abs(alpha) ** 2
    h2 = 2 * (alpha**2 * np.exp(-1j * phi)).real * s * c + (2 * n1 + 1) * s**2 + n1
    return (4.0 * h2 + vacuum_weight * s**2) / w**2


def _mz_closed_form(f1, f2) -> float | None:
    """``4⟨H²⟩`` with ``H = (a1†a2 + a2†a1)/2``; no vacuum loss."""
    sq = _squeeze_moments(f2)
    if sq is None:
        return None
    s, c, phi = sq
    if s == 0:
        return factor_mean(f1)
    alpha = _coherent_amplitude(f1)
    if alpha is None:
        return None
    n1 = abs(alpha) ** 2
    return float(-2 * (np.conj(alpha) ** 2 * np.exp(1j * phi)).real * s * c
                 + (2 * n1 + 1) * s**2 + n1)


def hg_displacement(params: Mapping) -> Scenario:
    """HG00 plus its normalized derivative mode ``-HG10`` under an x-displacement."""
    w = _positive(params, "w", 1.0)
    grid = make_grid("gauss-legendre", -WINDOW * w, WINDOW * w, quad_nodes(params), dimension=2)
    x, y = grid.coords
    orders = {"f1": (0, 1.0), "f2": (1, -1.0)}

    def profile(label, t):
        n, sign = orders[label]
        return sign * hermite_gauss_1d(n, x + t, w) * hermite_gauss_1d(0, y, w)

    def derivative(label):
        n, sign = orders[label]
        return sign * hermite_gauss_1d_dx(n, x, w) * hermite_gauss_1d(0, y, w)

    family = ModeFamily(grid, ("f1", "f2"), profile, ("f1", "f2"), w, derivative)
    f1, f2 = _two_mode_factors(params)
    state = _build_state([f1, f2], params)
    return Scenario("hg-displacement", dict(params), family, (f1, f2), state,
                    _hg_closed_form(f1, f2, w, 8.0))


def hg_waist(params: Mapping) -> Scenario:
    """HG00 and ``(HG20 + HG02)/√2`` under a change of the waist."""
    w = _positive(params, "w", 1.0)
    grid = make_grid("gauss-legendre", -WINDOW * w, WINDOW * w, quad_nodes(params), dimension=2)
    x, y = grid.coords

    def profile(label, t):
        if label == "f1":
            return hermite_gauss_2d(0, 0, x, y, w + t)
        return (hermite_gauss_2d(2, 0, x, y, w + t) + hermite_gauss_2d(0, 2, x, y, w + t)) / math.sqrt(2)

    def d_hg(m, n):
        return (hermite_gauss_1d_dw(m, x, w) * hermite_gauss_1d(n, y, w)
                + hermite_gauss_1d(m, x, w) * hermite_gauss_1d_dw(n, y, w))

    def derivative(label):
        if label == "f1":
            return d_hg(0, 0)
        return (d_hg(2, 0) + d_hg(0, 2)) / math.sqrt(2)

    family = ModeFamily(grid, ("f1", "f2"), profile, ("f1", "f2"), w, derivative)
    f1, f2 = _two_mode_factors(params)
    state = _build_state([f1, f2], params)
    return Scenario("hg-waist", dict(params), family, (f1, f2), state,
                    _hg_closed_form(f1, f2, w, 16.0))


def mach_zehnder(params: Mapping) -> Scenario:
    """Interferometer output modes ``(g1 e^{-iθ/2} ± g2 e^{iθ/2})/√2``.

    ``g1, g2`` are the first two 1D Hermite-Gauss modes. The default
    squeezing phase π anti-squeezes the quadrature the generator couples to.
    """
    w = _positive(params, "w", 1.0)
    grid = make_grid("gauss-legendre", -WINDOW * w, WINDOW * w, quad_nodes(params))
    x = grid.coords[0]
    g1, g2 = hermite_gauss_1d(0, x, w), hermite_gauss_1d(1, x, w)
    sign = {"f1": 1.0, "f2": -1.0}

    def profile(label, t):
        return (g1 * np.exp(-0.5j * t) + sign[label] * g2 * np.exp(0.5j * t)) / math.sqrt(2)

    def derivative(label):
        return (-0.5j * g1 + 0.5j * sign[label] * g2) / math.sqrt(2)

    family = ModeFamily(grid, ("f1", "f2"), profile, ("f1", "f2"), w, derivative)
    f1, f2 = _two_mode_factors(params, default_phase2=math.pi)
    state = _build_state([f1, f2], params)
    return Scenario("mach-zehnder", dict(params), family, (f1, f2), state, _mz_closed_form(f1, f2))


# Superresolution of two incoherent point sources

@dataclass(frozen=True, eq=False)
class PsfScenario:
    """Two point sources at ``±s/2`` imaged through ``ψ(x) = e^{-ikx} u(x)``.

    Attributes:
        grid: Image-plane grid.
        amplitude: Real PSF amplitude ``u(x)``, unit L2 norm.
        amplitude_derivative: ``du/dx``.
        k_phase: Wavenumber of the linear PSF phase.
        s: Source separation.
        eta: Collection efficiency.
        N: Mean photon number per source.
        width: Length scale of the PSF, used for finite-difference steps.
    """

    grid: CoordinateGrid
    amplitude: Callable[[np.ndarray], np.ndarray]
    amplitude_derivative: Callable[[np.ndarray], np.ndarray]
    k_phase: float
    s: float
    eta: float
    N: float
    width: float
    derived: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not self.s > 0:
            raise ValidationError("separation must be positive")
        if not 0 < self.eta <= 1:
            raise ValidationError("eta must lie in (0, 1]")
        if not self.N >= 0:
            raise ValidationError("mean photon number must be non-negative")
        norm = self._integral(self.amplitude(self.x) ** 2)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"PSF amplitude is not normalized: ∫u² = {norm!r}")
        delta = self.overlap(self.s)
        if delta > DEGENERATE_OVERLAP:
            raise DegenerateSeparationError(f"|δ| = {delta!r}: sources are indistinguishable")
        h = 1e-4 * self.width
        gamma = (-self.overlap(self.s + 2 * h) + 8 * self.overlap(self.s + h)
                 - 8 * self.overlap(self.s - h) + self.overlap(self.s - 2 * h)) / (12 * h)
        du = self.amplitude_derivative
        derived = {
            "delta": delta,
            "gamma": gamma,
            "beta": self._integral(du(self.x - self.s / 2) * du(self.x + self.s / 2)),
            "dp2": self._integral(du(self.x) ** 2),
            "n_plus": self.eta * (1 + delta) * self.N,
            "n_minus": self.eta * (1 - delta) * self.N,
        }
        object.__setattr__(self, "derived", derived)

    @property
    def x(self) -> np.ndarray:
        return self.grid.coords[0]

    def _integral(self, values) -> float:
        return float(np.sum(self.grid.weights * values))

    def overlap(self, s: float) -> float:
        """``|δ(s)| = ∫ u(x - s/2) u(x + s/2) dx``."""
        return self._integral(self.amplitude(self.x - s / 2) * self.amplitude(self.x + s / 2))

    @property
    def u(self) -> SampledFunction:
        return SampledFunction(self.grid, self.amplitude(self.x))

    def mode(self, sign: int, s: float) -> np.ndarray:
        """``f_±`` at separation ``s``."""
        delta = self.overlap(s)
        if delta > DEGENERATE_OVERLAP:
            raise DegenerateSeparationError(f"|δ| = {delta!r} at s = {s!r}")
        x = self.x
        pair = self.amplitude(x + s / 2) + sign * self.amplitude(x - s / 2)
        return np.exp(-1j * self.k_phase * (x + s / 2)) * pair / math.sqrt(2 * (1 + sign * delta))

    def mode_derivative(self, sign: int) -> np.ndarray:
        """``∂f_±/∂s`` at the scenario's separation, in closed form."""
        d, gamma = self.derived["delta"], self.derived["gamma"]
        x, s = self.x, self.s
        du = self.amplitude_derivative
        envelope = np.exp(-1j * self.k_phase * (x + s / 2)) \
            * (du(x + s / 2) - sign * du(x - s / 2)) / (2 * math.sqrt(2 * (1 + sign * d)))
        coeff = -0.5j * self.k_phase - sign * gamma / (2 * (1 + sign * d))
        return coeff * self.mode(sign, s) + envelope

    def family(self) -> ModeFamily:
        signs = {"+": 1, "-": -1}
        return ModeFamily(
            self.grid, ("+", "-"),
            lambda label, t: self.mode(signs[label], self.s + t),
            ("+", "-"),
            self.width,
            lambda label: self.mode_derivative(signs[label]),
        )

    def predicted_overlaps(self) -> dict:
        """Closed-form overlaps in terms of δ, γ, β and (Δp)²."""
        d, g, b, p2 = (self.derived[k] for k in ("delta", "gamma", "beta", "dp2"))
        k = self.k_phase
        out = {}
        for label, sign in (("+", 1), ("-", -1)):
            out[f"f{label}|f{label}'"] = -0.5j * k
            out[f"f{label}'|f{label}'"] = (k**2 / 4 + (p2 - sign * b) / (4 * (1 + sign * d))
                                           - g**2 / (4 * (1 + sign * d) ** 2))
        return out

    def vacuum_weights(self) -> tuple[float, float]:
        """``4[(f±'|f±') - |(f±'|f±)|²]``, independent of the phase wavenumber."""
        d, g, b, p2 = (self.derived[k] for k in ("delta", "gamma", "beta", "dp2"))
        return tuple((p2 - sign * b - g**2 / (1 + sign * d)) / (1 + sign * d) for sign in (1, -1))

    def classical_fisher(self) -> float:
        """Population Fisher information of the two thermal modes."""
        d, g = self.derived["delta"], self.derived["gamma"]
        n = self.eta * self.N
        return 2 * n * (g**2 / (2 * (1 + d) * (1 + (1 + d) * n))
                        + g**2 / (2 * (1 - d) * (1 + (1 - d) * n)))

    def thermal_closed_form(self) -> float:
        d, g, p2 = (self.derived[k] for k in ("delta", "gamma", "dp2"))
        n = self.eta * self.N
        return 2 * n * (p2 - n * (1 + n) * g**2 / ((1 + n) ** 2 - n**2 * d**2))


def gaussian_psf(sigma: float, s: float, k_phase: float = 0.0, eta: float = 1.0, N: float = 1.0,
                 n_nodes: int | None = None) -> PsfScenario:
    """Gaussian PSF ``u(x) = (2πσ²)^{-1/4} e^{-x²/4σ²}``."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    width = 2.0 * sigma
    half = WINDOW * width + s / 2
    grid = make_grid("gauss-legendre", -half, half, n_nodes or quad_nodes())
    return PsfScenario(grid, lambda x: gaussian_amplitude(x, width),
                       lambda x: gaussian_amplitude_dx(x, width), k_phase, s, eta, N, width)


def sampled_psf(psf: SampledFunction, s: float, k_phase: float = 0.0, eta: float = 1.0,
                N: float = 1.0) -> PsfScenario:
    """PSF from samples: ``u = |ψ|`` is spline-interpolated and renormalized.

    Shifted copies that leave the sampled window are zero.
    """
    x = psf.grid.coords[0]
    amp = np.abs(psf.values)
    amp = amp / math.sqrt(float(np.sum(psf.grid.weights * amp**2)))
    spline = CubicSpline(x, amp)
    dspline = spline.derivative()
    lo, hi = x[0], x[-1]

    def inside(f):
        return lambda z: np.where((z >= lo) & (z <= hi), f(np.clip(z, lo, hi)), 0.0)

    u, du = inside(spline), inside(dspline)
    # renormalize the interpolant on the quadrature grid
    scale = 1.0 / math.sqrt(float(np.sum(psf.grid.weights * u(x) ** 2)))
    rms = math.sqrt(float(np.sum(psf.grid.weights * x**2 * u(x) ** 2)) * scale**2)
    return PsfScenario(psf.grid, lambda z: scale * u(z), lambda z: scale * du(z),
                       k_phase, s, eta, N, max(rms, 1e-3 * (hi - lo)))


def superresolution_overlaps(psf: PsfScenario, method: str = "auto") -> OverlapData:
    """Quadrature overlaps of the symmetric/antisymmetric pair ``f±``."""
    return compute_overlaps(psf.family(), method)


def thermal_population_derivatives(psf: PsfScenario, cutoffs: tuple[int, int]) -> np.ndarray:
    """``dp_{n,m}/ds`` of the truncated, renormalized two-mode thermal populations."""
    dn = psf.eta * psf.N * psf.derived["gamma"]
    out = []
    for mean, dmean, cutoff in ((psf.derived["n_plus"], dn, cutoffs[0]),
                                (psf.derived["n_minus"], -dn, cutoffs[1])):
        n = np.arange(cutoff + 1)
        raw = thermal_populations(mean, cutoff)
        draw = raw * (n / mean - (n + 1) / (mean + 1)) * dmean if mean > 0 else np.zeros_like(raw)
        total = raw.sum()
        out.append((raw / total, draw / total - raw * draw.sum() / total**2))
    (pa, da), (pb, db) = out
    return np.kron(da, pb) + np.kron(pa, db)


def thermal_fisher_cutoff(mean: float, tol: float) -> int:
    """Smallest cutoff whose discarded tail carries less than ``tol`` of the Fisher information.

    Relative to the full value ``1/(m(m+1))``, the tail beyond ``c`` is
    ``Σ_{n>c} p_n (n - m)² / (m(m+1))``. It decays more slowly than the
    probability tail when ``m`` is small.
    """
    base = required_cutoff("thermal", {"mean": mean}, tol)
    if mean == 0:
        return base
    q = mean / (mean + 1)
    n = np.arange(4 * base + 64)
    p = (1 - q) * q**n
    terms = p * (n - mean) ** 2 / (mean * (mean + 1))
    tails = np.cumsum(terms[::-1])[::-1]  # tails[c] = Σ_{n≥c}
    ok = np.flatnonzero(tails[1:] < tol)
    return max(base, int(ok[0]) if ok.size else n[-1])


def superresolution_thermal_state(psf: PsfScenario, capture_tol: float = DEFAULT_CAPTURE_TOL,
                                  with_derivatives: bool = False) -> DensityOperator:
    means = (psf.derived["n_plus"], psf.derived["n_minus"])
    space = FockOperatorSpace(tuple(thermal_fisher_cutoff(m, capture_tol) for m in means))
    state = build_state("product", {"factors": [("thermal", {"mean": m}) for m in means]},
                        space, capture_tol)
    if with_derivatives:
        dp = thermal_population_derivatives(psf, state.space.cutoffs)
        state = state.with_population_derivatives(dp - dp.mean() if abs(dp.sum()) < 1e-10 else dp)
    return state


def superresolution_thermal_qfi(psf: PsfScenario, capture_tol: float = DEFAULT_CAPTURE_TOL,
                                overlaps: OverlapData | None = None) -> QfiReport:
    """Thermal sources: population term in closed form, vacuum term from quadrature.

    The vacuum term weights the quadrature overlaps with the exact thermal
    occupations ``N± = η(1 ± |δ|)N``; the unitary term is evaluated on the
    truncated thermal state and vanishes for number-diagonal states.
    """
    overlaps = overlaps or superresolution_overlaps(psf)
    state = superresolution_thermal_state(psf, capture_tol)
    hamiltonian = assemble_hamiltonian(overlaps, "populated-only", state.space)
    correlations = np.diag([psf.derived["n_plus"], psf.derived["n_minus"]]).astype(complex)
    return QfiReport(
        psf.classical_fisher(),
        unitary_qfi(state, hamiltonian),
        vacuum_term(overlaps.V, correlations),
        meta={"closed_form": psf.thermal_closed_form(), **psf.derived},
    )


def superresolution(params: Mapping) -> Scenario:
    sigma = _positive(params, "sigma", 1.0)
    s = _positive(params, "s", 1.0)
    k = float(params.get("k", 0.0))
    eta = float(params.get("eta", 1.0))
    N = float(params.get("N", 1.0))
    if "psf_csv" in params:
        psf = sampled_psf(load_psf_csv(params["psf_csv"]), s, k, eta, N)
    else:
        psf = gaussian_psf(sigma, s, k, eta, N, quad_nodes(params))
    family = psf.family()
    kind = str(params.get("state", "thermal"))
    tol = float(params.get("capture_tol", DEFAULT_CAPTURE_TOL))
    if kind == "thermal":
        state = superresolution_thermal_state(psf, tol, with_derivatives=True)
        factors = (("thermal", {"mean": psf.derived["n_plus"]}),
                   ("thermal", {"mean": psf.derived["n_minus"]}))
        return Scenario("superresolution", dict(params), family, factors, state,
                        psf.thermal_closed_form(), state.population_derivatives, psf)
    # eigenstates independent of the separation: no population term
    f_plus = state_factor(kind, N, float(params.get("r", 0.0)), float(params.get("phase", 0.0)))
    f_minus = _single_mode_recipe(params, "_minus", "vacuum", 0.0)
    state = _build_state([f_plus, f_minus], params)
    w_plus, w_minus = psf.vacuum_weights()
    closed = (k**2 / 4 * (factor_number_qfi(f_plus) + factor_number_qfi(f_minus))
              + w_plus * factor_mean(f_plus) + w_minus * factor_mean(f_minus))
    return Scenario("superresolution", dict(params), family, (f_plus, f_minus), state, closed,
                    None, psf)


@dataclass(frozen=True)
class ScenarioSpec:
    builder: Callable[[Mapping], Scenario]
    params: dict
    anchor: str


SCENARIOS: dict[str, ScenarioSpec] = {
    "displaced-gaussian": ScenarioSpec(
        displaced_gaussian, {"w": 1.0, "state": "coherent", "N": 4.0},
        "single Gaussian mode under transverse displacement; (f'|f') = 1/w^2, total = 4N/w^2"),
    "hg-displacement": ScenarioSpec(
        hg_displacement, {"w": 1.0, "state1": "coherent", "N1": 4.0, "state2": "vacuum", "r2": 0.0},
        "HG00 plus its derivative mode -HG10; w^2 F = F_Q[i(a2'a1 - a1'a2)] + 8<n2>"),
    "hg-waist": ScenarioSpec(
        hg_waist, {"w": 1.0, "state1": "coherent", "N1": 4.0, "state2": "vacuum", "r2": 0.0},
        "HG00 plus (HG20 + HG02)/sqrt2 under waist variation; w^2 F = F_Q[...] + 16<n2>"),
    "mach-zehnder": ScenarioSpec(
        mach_zehnder, {"state1": "coherent", "N1": 4.0, "state2": "vacuum", "r2": 0.0},
        "closed two-mode interferometer; H_I = (a2'a1 + a1'a2)/2, no vacuum loss"),
    "oam-linear-phase": ScenarioSpec(
        oam_linear_phase, {"k": 1, "state": "superposition", "N": 4.0},
        "azimuthal phase winding exp(-ik(phi + theta)); H_I = k N"),
    "pulsed-time": ScenarioSpec(
        pulsed_time, {"omega0": 5.0, "tau": 1.0, "state": "coherent", "N": 4.0},
        "pulse A(t + theta) exp(-i omega0 (t + theta)) for time positioning; H_I = omega0 N"),
    "spectroscopy-frequency": ScenarioSpec(
        spectroscopy_frequency, {"T": 1.0, "sigma": 1.0, "omega0": 0.0, "state": "coherent", "N": 4.0},
        "spectral mode A(w + theta) exp(-i(w - w0 + theta)T) for center-frequency estimation; H_I = T N"),
    "superresolution": ScenarioSpec(
        superresolution, {"sigma": 1.0, "s": 1.0, "k": 0.0, "eta": 1.0, "N": 1.0, "state": "thermal"},
        "separation of two incoherent point sources in the symmetric/antisymmetric modes f+-"),
}


def build_scenario(name: str, params: Mapping | None = None) -> Scenario:
    """Assemble a named scenario; missing parameters take their defaults.

    Raises:
        UnknownScenarioError: If ``name`` is not registered.
        ValidationError: For unphysical parameters.
    """
    if name not in SCENARIOS:
        raise UnknownScenarioError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    spec = SCENARIOS[name]
    merged = {**spec.params, **(params or {})}
    try:
        return spec.builder(merged)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"bad parameters for {name}: {exc}") from exc


def evaluate_scenario(scenario: Scenario, oracle: bool = False) -> QfiReport:
    """QFI breakdown of a scenario; ``oracle`` adds the explicit-vacuum-mode value.

    The closed form (when available) is stored in ``meta["closed_form"]``.
    """
    thermal_sr = scenario.psf is not None and scenario.population_derivatives is not None
    if thermal_sr:
        tol = float(scenario.params.get("capture_tol", DEFAULT_CAPTURE_TOL))
        report = superresolution_thermal_qfi(scenario.psf, tol)
    else:
        overlaps = compute_overlaps(scenario.family)
        report = mode_parameter_qfi(scenario.state, overlaps, scenario.population_derivatives)
    report.meta["scenario"] = scenario.name
    report.meta["closed_form"] = scenario.expected_closed_form
    if oracle:
        extended, _ = extended_space_check(scenario.family, scenario.state)
        report.oracle_value = extended
    return report
