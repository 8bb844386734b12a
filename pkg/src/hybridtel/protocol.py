"""The teleportation pipeline.

Resource preparation (ideal superposition and the heralded two-crystal
pipeline), the coherent-state Bell basis, the single-click Bell measurement,
the teleported output, and the closed-form second-order expressions used as
oracles throughout the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .errors import ConfigError, ZeroProbabilityError
from .fock import (
    DensityOperator,
    FockState,
    cat_state,
    coherent_state,
    fidelity,
    number_state,
    partial_trace,
    squeezed_vacuum,
    tensor,
    two_mode_squeezed,
    vacuum_state,
)
from .measurement import click_povm, condition_on
from .optics import BeamSplitterSpec, beam_splitter, phase_shift, symmetric_splitter


@dataclass(frozen=True)
class CvQubit:
    """Coherent-state qubit x|a> + y|-a> with real amplitude a.

    ``normalized`` rescales the coefficients so <in|in> = |x|^2 + |y|^2
    + 2 Re(x* y) e^{-2 a^2} equals 1.
    """

    x: complex
    y: complex
    alpha: float

    def norm_squared(self) -> float:
        overlap = math.exp(-2.0 * self.alpha ** 2)
        return float(abs(self.x) ** 2 + abs(self.y) ** 2
                     + 2.0 * (np.conj(self.x) * self.y).real * overlap)

    @classmethod
    def normalized(cls, x: complex, y: complex, alpha: float) -> "CvQubit":
        raw = cls(x, y, alpha)
        n = math.sqrt(raw.norm_squared())
        return cls(x / n, y / n, alpha)


def cv_qubit_state(qubit: CvQubit, dim: int, *, label: str = "A") -> FockState:
    plus = coherent_state(qubit.alpha, dim, label=label)
    minus = coherent_state(-qubit.alpha, dim, label=label)
    amps = qubit.x * plus.amplitudes + qubit.y * minus.amplitudes
    return FockState((dim,), amps, (label,)).normalized()


@dataclass(frozen=True)
class ResourceSpec:
    """Parameters of the entangled resource in modes C (bosonic) and D (qubit-like).

    kind "ideal": the exact cat/Fock superposition at amplitude ``alpha``.
    kind "physical": the heralded two-crystal pipeline -- single-mode squeezed
    vacuum in C, weak photon-pair state in (D, E), a low-reflectivity tap off
    C, interference of tap and herald arms on a splitter of transmissivity
    ``mix_ratio``, and a click of efficiency ``spcm1_eta`` on the output port
    where the two paths add in phase.  Raising ``mix_ratio`` favors the
    photon-pair path over the subtraction path.
    """

    kind: str = "ideal"
    alpha: float = 0.42
    zeta: float = 0.18
    two_mode_lambda: float = 0.1
    tap_reflectivity: float = 0.05
    spcm1_eta: float = 0.1
    mix_ratio: float = 0.5
    dim_c: int = 15
    dim_d: int = 2
    dim_ancilla: int = 4
    ancilla_tail_tol: float = 1e-5

    def __post_init__(self):
        if self.kind not in ("ideal", "physical"):
            raise ConfigError(f"resource kind must be 'ideal' or 'physical', got {self.kind!r}")
        if self.kind == "ideal" and not self.alpha > 0:
            raise ConfigError("ideal resource needs alpha > 0")
        if self.kind == "physical":
            if not 0.0 < self.tap_reflectivity < 1.0:
                raise ConfigError("tap reflectivity must be in (0, 1)")
            if not 0.0 <= self.mix_ratio <= 1.0:
                raise ConfigError("mix ratio must be in [0, 1]")
            if not 0.0 < self.spcm1_eta <= 1.0:
                raise ConfigError("herald detector efficiency must be in (0, 1]")


def ideal_resource(alpha: float, dims: tuple[int, int] = (15, 2), *,
                   labels: tuple[str, str] = ("C", "D")) -> FockState:
    """Entangled resource (cat_-|0> / N_- + cat_+|1> / N_+) / 2 over modes C, D.

    Projecting mode D onto |1> leaves the even cat in C; onto |0>, the odd cat.
    """
    if alpha <= 0:
        raise ValueError("resource amplitude must be positive")
    dim_c, dim_d = dims
    lc, ld = labels
    plus = coherent_state(alpha, dim_c, label=lc).amplitudes
    minus = coherent_state(-alpha, dim_c, label=lc).amplitudes
    amps = np.zeros((dim_c, dim_d), dtype=complex)
    amps[:, 0] = 0.5 * (plus - minus)
    amps[:, 1] = 0.5 * (plus + minus)
    return FockState((dim_c, dim_d), amps.reshape(-1), (lc, ld)).normalized()


def physical_resource(spec: ResourceSpec) -> tuple[DensityOperator, float]:
    """Heralded resource of the two-crystal pipeline.

    Returns ``(rho_CD, herald_probability)``.  Pipeline: squeezed vacuum in C;
    photon-pair state in (D, E); tap C onto vacuum mode T with the configured
    reflectivity; interfere T and E on a splitter of transmissivity
    ``mix_ratio``; apply the click effect on the T output and trace both
    ancillas.
    """
    if spec.kind != "physical":
        raise ConfigError("physical_resource needs a spec of kind 'physical'")
    cmode = squeezed_vacuum(spec.zeta, spec.dim_c, label="C")
    pair = two_mode_squeezed(spec.two_mode_lambda, (spec.dim_d, spec.dim_ancilla),
                             labels=("D", "E"), tail_tol=spec.ancilla_tail_tol)
    tap = vacuum_state(spec.dim_ancilla, label="T")
    joint = tensor([cmode, pair, tap])
    joint = beam_splitter(joint, BeamSplitterSpec(1.0 - spec.tap_reflectivity, ("C", "T")))
    joint = beam_splitter(joint, BeamSplitterSpec(spec.mix_ratio, ("T", "E")))
    # The detector watches the port where the two heralding paths interfere
    # in phase under the package splitter convention: the E output.
    clicked, prob = condition_on(joint, "E", click_povm(spec.spcm1_eta, spec.dim_ancilla),
                                 discard=True)
    rho_cd = partial_trace(clicked, ["C", "D"]).normalized()
    return rho_cd, prob


def build_resource(spec: ResourceSpec):
    """Resource state plus herald probability (1 for the ideal flavor)."""
    if spec.kind == "ideal":
        return ideal_resource(spec.alpha, (spec.dim_c, spec.dim_d)), 1.0
    return physical_resource(spec)


def path_rate_ratio(spec: ResourceSpec) -> float:
    """Herald-rate ratio of the subtraction path to the photon-pair path.

    Evaluated by switching off one crystal at a time and comparing the click
    probabilities.
    """
    _, rate_subtraction = physical_resource(replace(spec, two_mode_lambda=0.0))
    _, rate_pair = physical_resource(replace(spec, zeta=0.0))
    return rate_subtraction / rate_pair


def solve_mix_ratio(spec: ResourceSpec, target: float = 1.0 / 3.0,
                    *, xtol: float = 1e-6) -> float:
    """Mix ratio at which the two herald paths click at the target rate ratio.

    Bisection on the monotone map mix_ratio -> path_rate_ratio.
    """
    def objective(m: float) -> float:
        return path_rate_ratio(replace(spec, mix_ratio=m)) - target

    return float(bisect(objective, 1e-6, 1.0 - 1e-6, xtol=xtol))


def rate_ratio_condition(alpha_plus: float, alpha_minus: float) -> float:
    """Required herald-rate ratio (1 - e^{-2 a_-^2}) / (1 + e^{-2 a_+^2})."""
    if alpha_plus <= 0 or alpha_minus <= 0:
        raise ValueError("amplitudes must be positive")
    return (1.0 - math.exp(-2.0 * alpha_minus ** 2)) / (1.0 + math.exp(-2.0 * alpha_plus ** 2))


# ---------------------------------------------------------------------------
# Bell basis and the single-click Bell measurement

BELL_KINDS = ("phi+", "phi-", "psi+", "psi-")


def bell_state(kind: str, alpha: float, dims: tuple[int, int] = (15, 15), *,
               labels: tuple[str, str] = ("A", "C")) -> FockState:
    """Coherent-state Bell basis over two modes, normalization 1/sqrt(2 +/- 2e^{-4a^2})."""
    kind = kind.lower()
    if kind not in BELL_KINDS:
        raise ValueError(f"kind must be one of {BELL_KINDS}, got {kind!r}")
    if alpha <= 0:
        raise ValueError("Bell amplitude must be positive")
    da, dc = dims
    la, lc = labels
    p_a = coherent_state(alpha, da, label=la).amplitudes
    m_a = coherent_state(-alpha, da, label=la).amplitudes
    p_c = coherent_state(alpha, dc, label=lc).amplitudes
    m_c = coherent_state(-alpha, dc, label=lc).amplitudes
    sign = 1.0 if kind.endswith("+") else -1.0
    if kind.startswith("phi"):
        amps = np.outer(p_a, p_c) + sign * np.outer(m_a, m_c)
    else:
        amps = np.outer(p_a, m_c) + sign * np.outer(m_a, p_c)
    return FockState((da, dc), amps.reshape(-1), (la, lc)).normalized()


def bell_click(joint, mode_a: str, mode_c: str, eta: float):
    """Single-click Bell stage: symmetric splitter on (A, C), click of
    efficiency ``eta`` on A (mode C unmeasured), both modes traced out.

    Returns ``(posterior on the remaining modes, click probability)``.
    """
    mixed = beam_splitter(joint, symmetric_splitter((mode_a, mode_c)))
    dim_a = mixed.mode_dims[mixed.mode_index(mode_a)]
    clicked, prob = condition_on(mixed, mode_a, click_povm(eta, dim_a), discard=True)
    keep = [lab for lab in clicked.mode_labels if lab != mode_c]
    if keep:
        return partial_trace(clicked, keep).normalized(), prob
    return clicked, prob


def bell_project_ideal(joint, mode_a: str, mode_c: str):
    """Idealized Bell stage: symmetric splitter, then rank-1 projection onto
    |1> in A and |0> in C.  Keeps pure inputs pure."""
    mixed = beam_splitter(joint, symmetric_splitter((mode_a, mode_c)))
    dim_a = mixed.mode_dims[mixed.mode_index(mode_a)]
    dim_c = mixed.mode_dims[mixed.mode_index(mode_c)]
    state, p1 = condition_on(mixed, mode_a, number_state(1, dim_a), discard=True)
    state, p2 = condition_on(state, mode_c, number_state(0, dim_c), discard=True)
    return state, p1 * p2


def bell_click_probability(kind: str, alpha: float, eta: float, *,
                           dims: tuple[int, int] = (15, 15)) -> float:
    """Exact numeric click probability of the Bell stage for one Bell state."""
    state = bell_state(kind, alpha, dims)
    mixed = beam_splitter(state, symmetric_splitter(("A", "C")))
    povm = click_povm(eta, dims[0])
    from .fock import expectation

    return float(np.real(expectation(mixed, {"A": povm})))


def bell_click_probability_approx(kind: str, alpha: float, eta: float) -> float:
    """Small-amplitude, small-efficiency expansion of the click probability."""
    kind = kind.lower()
    if kind == "phi+":
        return 4.0 * eta * alpha ** 4
    if kind == "phi-":
        return eta * (1.0 + 4.0 / 3.0 * alpha ** 4)
    return 0.0


# ---------------------------------------------------------------------------
# teleportation

def teleport(input_a: FockState, resource, *, eta: float = 0.1,
             projection: str = "click", theta_c: float = 0.0,
             theta_d: float = 0.0) -> tuple[DensityOperator, float]:
    """Run the post-selected teleporter.

    ``input_a`` is a single-mode state in mode A; ``resource`` spans modes C
    and D (pure or mixed).  Resource phase shifts are applied first, then the
    Bell stage ("click": click effect of efficiency ``eta`` on A with C
    unmeasured; "ideal": rank-1 <1|_A <0|_C projection).

    Returns ``(rho_D, success_probability)``.
    """
    if projection not in ("click", "ideal"):
        raise ValueError(f"projection must be 'click' or 'ideal', got {projection!r}")
    if input_a.mode_labels[0] in resource.mode_labels:
        input_a = input_a.relabeled(["A"])
    shifted = resource
    if theta_c:
        shifted = phase_shift(shifted, "C", theta_c)
    if theta_d:
        shifted = phase_shift(shifted, "D", theta_d)
    if isinstance(shifted, DensityOperator):
        joint = _tensor_pure_with_density(input_a, shifted)
    else:
        joint = tensor([input_a, shifted])
    if projection == "click":
        out, prob = bell_click(joint, input_a.mode_labels[0], "C", eta)
    else:
        out, prob = bell_project_ideal(joint, input_a.mode_labels[0], "C")
    if prob < 1e-14:
        raise ZeroProbabilityError(f"teleportation success probability {prob:.2e}")
    rho = out.to_density() if isinstance(out, FockState) else out
    return rho.normalized(), prob


def _tensor_pure_with_density(state: FockState, rho: DensityOperator) -> DensityOperator:
    mat = np.kron(state.to_density().matrix, rho.matrix)
    return DensityOperator(state.mode_dims + rho.mode_dims, mat,
                           state.mode_labels + rho.mode_labels)


def ideal_output_state(phi: float, dim: int = 2, *, theta_c: float = 0.0,
                       theta_d: float = 0.0, label: str = "D") -> FockState:
    """First-order target (|0> + e^{i(phi + theta_d - theta_c)} |1>)/sqrt(2)."""
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1.0
    amps[1] = np.exp(1j * (phi + theta_d - theta_c))
    return FockState((dim,), amps, (label,)).normalized()


def analytic_output(phi: float, alpha: float, theta_c: float = 0.0,
                    theta_d: float = 0.0) -> DensityOperator:
    """Second-order closed form of the teleported qubit for input |a e^{i phi}>.

    Valid in the small-click-efficiency limit; diagonals are 1/2 and the
    off-diagonal carries the phase -(phi + theta_d - theta_c) with an
    amplitude-squared correction term.
    """
    chi = phi - theta_c
    off = 0.5 * np.exp(-1j * (phi + theta_d - theta_c)) * (
        1.0 + alpha ** 2 * (np.exp(2j * chi) - 1.0))
    mat = np.array([[0.5, off], [np.conj(off), 0.5]], dtype=complex)
    return DensityOperator((2,), mat, ("D",))


def analytic_fidelity(phi: float, alpha: float, theta_c: float = 0.0) -> float:
    """Fidelity of the second-order output against the first-order target:
    1 - (a^2/2)(1 - cos 2(phi - theta_c))."""
    return 1.0 - 0.5 * alpha ** 2 * (1.0 - math.cos(2.0 * (phi - theta_c)))


# ---------------------------------------------------------------------------
# diagnostics

def fit_cat_amplitude(obj, parity, *, lo: float = 0.05, hi: float = 1.5) -> float:
    """Amplitude of the even/odd cat that maximizes fidelity with ``obj``."""
    dim = obj.mode_dims[0]

    def neg_fid(a: float) -> float:
        return -fidelity(obj, cat_state(a, parity, dim, tail_tol=None))

    res = minimize_scalar(neg_fid, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-7})
    return float(res.x)
