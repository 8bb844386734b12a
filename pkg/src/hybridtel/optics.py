"""Mode transformations: beam splitters, phase shifts, loss, photon subtraction."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, NonUnitaryError, ZeroNormError
from .fock import (
    DensityOperator,
    FockState,
    annihilation_op,
    apply_mode_operator,
)

# Amplitude convention, fixed package-wide: a beam splitter of power
# transmissivity t maps coherent amplitudes
#     (a_i, a_j) -> (sqrt(t) a_i + sqrt(1-t) a_j,  sqrt(t) a_j - sqrt(1-t) a_i).
BS_CONVENTION = "tx-minus"


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Two-mode beam splitter: power transmissivity and the mode pair it acts on."""

    transmissivity: float
    modes: tuple[str, str]
    convention: str = BS_CONVENTION

    def __post_init__(self):
        if not 0.0 <= self.transmissivity <= 1.0:
            raise ValueError(f"transmissivity must be in [0, 1], got {self.transmissivity}")
        if self.convention != BS_CONVENTION:
            raise ValueError(f"unsupported convention {self.convention!r}")


def symmetric_splitter(modes: tuple[str, str]) -> BeamSplitterSpec:
    return BeamSplitterSpec(0.5, modes)


@functools.lru_cache(maxsize=64)
def _bs_unitary(d_i: int, d_j: int, transmissivity: float) -> np.ndarray:
    """Joint unitary on the (d_i * d_j) product space.

    Built by eigendecomposition of the Hermitian coupling generator
    H = i(a_i^dag a_j - a_j^dag a_i); U = exp(-i phi H) with
    sin(phi) = sqrt(1 - t).  Exact on the truncated space.
    """
    a_i = np.kron(annihilation_op(d_i).matrix, np.eye(d_j))
    a_j = np.kron(np.eye(d_i), annihilation_op(d_j).matrix)
    coupling = a_i.conj().T @ a_j
    h = 1j * (coupling - coupling.conj().T)
    phi = math.asin(math.sqrt(1.0 - transmissivity))
    evals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * phi * evals)) @ vecs.conj().T
    defect = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if defect > 1e-10:
        raise NonUnitaryError(f"beam-splitter unitary defect {defect:.2e}")
    u.flags.writeable = False
    return u


def beam_splitter(obj, spec: BeamSplitterSpec):
    """Apply the beam splitter to a FockState or DensityOperator.

    Photon number is conserved on the joint space; leakage past either
    truncation shows up as tail mass, not as norm loss.
    """
    mode_i, mode_j = spec.modes
    ki, kj = obj.mode_index(mode_i), obj.mode_index(mode_j)
    if ki == kj:
        raise DimensionMismatchError("beam splitter needs two distinct modes")
    d_i, d_j = obj.mode_dims[ki], obj.mode_dims[kj]
    u = _bs_unitary(d_i, d_j, float(spec.transmissivity))

    def act(tensor_in: np.ndarray, conjugate: bool, offset: int) -> np.ndarray:
        t = np.moveaxis(tensor_in, (offset + ki, offset + kj), (0, 1))
        shape = t.shape
        t = t.reshape(d_i * d_j, -1)
        t = (u.conj() if conjugate else u) @ t
        t = t.reshape(shape)
        return np.moveaxis(t, (0, 1), (offset + ki, offset + kj))

    if isinstance(obj, FockState):
        t = act(obj.tensor_view(), False, 0)
        return FockState(obj.mode_dims, t.reshape(-1), obj.mode_labels)
    n = obj.n_modes
    t = act(obj.tensor_view(), False, 0)
    t = act(t, True, n)
    return DensityOperator(obj.mode_dims, t.reshape(obj.dim, obj.dim), obj.mode_labels)


def phase_shift(obj, mode: str, theta: float):
    """Multiply the amplitude at Fock level n of ``mode`` by e^{i n theta}."""
    k = obj.mode_index(mode)
    d = obj.mode_dims[k]
    diag = np.exp(1j * theta * np.arange(d))
    return apply_mode_operator(obj, mode, np.diag(diag))


def loss_kraus(dim: int, eta: float) -> list[np.ndarray]:
    """Kraus operators of the binomial photon-loss channel with transmissivity eta.

    Identical to coupling the mode to a vacuum ancilla on a beam splitter of
    transmissivity eta and tracing the ancilla.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"loss transmissivity must be in [0, 1], got {eta}")
    ops = []
    for k in range(dim):
        mat = np.zeros((dim, dim), dtype=complex)
        for n in range(k, dim):
            mat[n - k, n] = math.sqrt(math.comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
        ops.append(mat)
    return ops


def loss_channel(obj, mode: str, eta: float) -> DensityOperator:
    """Binomial photon loss on one mode; always returns a DensityOperator."""
    rho = obj.to_density() if isinstance(obj, FockState) else obj
    k = rho.mode_index(mode)
    d = rho.mode_dims[k]
    if eta == 1.0:
        return rho
    out = np.zeros_like(rho.matrix)
    for kraus in loss_kraus(d, eta):
        out += apply_mode_operator(rho, mode, kraus).matrix
    return DensityOperator(rho.mode_dims, out, rho.mode_labels)


def photon_subtract(obj, mode: str):
    """Apply the annihilation operator to one mode.

    Returns ``(renormalized state, weight)`` where the weight is the
    pre-normalization squared norm (trace for density operators).
    """
    d = obj.mode_dims[obj.mode_index(mode)]
    lowered = apply_mode_operator(obj, mode, annihilation_op(d))
    if isinstance(obj, FockState):
        weight = lowered.norm() ** 2
        if weight < 1e-28:
            raise ZeroNormError(f"mode {mode!r} is vacuum; nothing to subtract")
        return lowered.normalized(), float(weight)
    weight = lowered.trace()
    if weight < 1e-28:
        raise ZeroNormError(f"mode {mode!r} is vacuum; nothing to subtract")
    return lowered.normalized(), float(weight)
