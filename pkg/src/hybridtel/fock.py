"""Truncated Fock-space states, density operators, and mode operators.

Conventions
-----------
* Quadrature operator X = (a + a^dag)/sqrt(2), so [X, P] = i and the vacuum
  quadrature variance is 1/2.  Every other module builds on this single
  convention.
* Multi-mode amplitudes are stored flat in row-major order over the per-mode
  truncated bases; the first mode label is the slowest index.
* Constructors renormalize after truncation (instead of erroring) as long as
  the top-level occupation of every mode stays below the tail tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateCatError,
    DimensionMismatchError,
    DuplicateModeLabelError,
    TruncationOverflowError,
    UnknownModeError,
    ZeroNormError,
)

DEFAULT_TAIL_TOL = 1e-8


def _as_labels(labels: Sequence[str]) -> tuple[str, ...]:
    labels = tuple(str(x) for x in labels)
    if len(set(labels)) != len(labels):
        raise DuplicateModeLabelError(f"duplicate mode labels in {labels}")
    return labels


@dataclass(frozen=True)
class FockState:
    """Pure state over one or more truncated Fock modes.

    Attributes
    ----------
    mode_dims:
        Per-mode truncation dimensions; mode m has basis |0>..|dim_m - 1>.
    amplitudes:
        Complex amplitudes, flat, row-major over ``mode_dims``.
    mode_labels:
        Ordered mode names (e.g. ("A", "C", "D")).
    """

    mode_dims: tuple[int, ...]
    amplitudes: np.ndarray
    mode_labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        labels = _as_labels(self.mode_labels)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1).copy()
        if len(labels) != len(dims):
            raise DimensionMismatchError("one label per mode required")
        if amps.size != math.prod(dims):
            raise DimensionMismatchError(
                f"amplitude vector of length {amps.size} does not match dims {dims}"
            )
        amps.flags.writeable = False
        object.__setattr__(self, "mode_dims", dims)
        object.__setattr__(self, "mode_labels", labels)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def mode_index(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise UnknownModeError(f"mode {label!r} not in {self.mode_labels}") from None

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.mode_dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "FockState":
        n = self.norm()
        if n < 1e-15:
            raise ZeroNormError("cannot normalize a zero state vector")
        return FockState(self.mode_dims, self.amplitudes / n, self.mode_labels)

    def overlap(self, other: "FockState") -> complex:
        if self.mode_dims != other.mode_dims:
            raise DimensionMismatchError(
                f"dims {self.mode_dims} vs {other.mode_dims}"
            )
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def mode_marginal(self, label: str) -> np.ndarray:
        """Photon-number probabilities of one mode (others traced out)."""
        k = self.mode_index(label)
        t = np.moveaxis(self.tensor_view(), k, 0).reshape(self.mode_dims[k], -1)
        return np.sum(np.abs(t) ** 2, axis=1)

    def top_level_mass(self, label: str | None = None) -> float:
        """Occupation probability of the top Fock level (max over modes)."""
        labels = [label] if label is not None else list(self.mode_labels)
        return max(float(self.mode_marginal(m)[-1]) for m in labels)

    def tail_ok(self, tol: float = DEFAULT_TAIL_TOL) -> bool:
        return self.top_level_mass() < tol

    def to_density(self) -> "DensityOperator":
        a = self.amplitudes
        return DensityOperator(self.mode_dims, np.outer(a, a.conj()), self.mode_labels)

    def relabeled(self, labels: Sequence[str]) -> "FockState":
        return FockState(self.mode_dims, self.amplitudes, _as_labels(labels))


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state over truncated Fock modes (square complex matrix)."""

    mode_dims: tuple[int, ...]
    matrix: np.ndarray
    mode_labels: tuple[str, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        labels = _as_labels(self.mode_labels)
        mat = np.asarray(self.matrix, dtype=complex).copy()
        d = math.prod(dims)
        if len(labels) != len(dims):
            raise DimensionMismatchError("one label per mode required")
        if mat.shape != (d, d):
            raise DimensionMismatchError(f"matrix shape {mat.shape} does not match dims {dims}")
        mat.flags.writeable = False
        object.__setattr__(self, "mode_dims", dims)
        object.__setattr__(self, "mode_labels", labels)
        object.__setattr__(self, "matrix", mat)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def mode_index(self, label: str) -> int:
        try:
            return self.mode_labels.index(label)
        except ValueError:
            raise UnknownModeError(f"mode {label!r} not in {self.mode_labels}") from None

    def tensor_view(self) -> np.ndarray:
        return self.matrix.reshape(self.mode_dims + self.mode_dims)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        t = np.trace(self.matrix)
        if abs(t) < 1e-15:
            raise ZeroNormError("cannot normalize a zero-trace operator")
        return DensityOperator(self.mode_dims, self.matrix / t, self.mode_labels)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))[0])

    def validate(self, herm_tol: float = 1e-10, eig_tol: float = 1e-9,
                 trace_tol: float = 1e-10) -> "DensityOperator":
        """Check the density-operator contract; raise ValueError on violation."""
        if self.hermiticity_defect() > herm_tol:
            raise ValueError(f"not Hermitian within {herm_tol}")
        if self.min_eigenvalue() < -eig_tol:
            raise ValueError(f"negative eigenvalue below -{eig_tol}")
        if abs(self.trace() - 1.0) > trace_tol:
            raise ValueError(f"trace {self.trace()} differs from 1 beyond {trace_tol}")
        return self

    def mode_marginal(self, label: str) -> np.ndarray:
        reduced = partial_trace(self, [label])
        return np.diag(reduced.matrix).real.copy()

    def top_level_mass(self, label: str | None = None) -> float:
        labels = [label] if label is not None else list(self.mode_labels)
        return max(float(self.mode_marginal(m)[-1]) for m in labels)

    def relabeled(self, labels: Sequence[str]) -> "DensityOperator":
        return DensityOperator(self.mode_dims, self.matrix, _as_labels(labels))


@dataclass(frozen=True)
class ModeOperator:
    """Operator on a single mode's truncated Fock space."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex).copy()
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"mode operator must be square, got {mat.shape}")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T)

    def is_povm_element(self, tol: float = 1e-10) -> bool:
        """True when 0 <= op <= identity (within tol), op Hermitian."""
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > tol:
            return False
        evals = np.linalg.eigvalsh(self.matrix)
        return bool(evals[0] >= -tol and evals[-1] <= 1.0 + tol)


@dataclass(frozen=True)
class AmplitudeParams:
    """Resource amplitude and phase bundle.

    The cat normalization factors are derived quantities and are recomputed
    on every access so they can never go stale.
    """

    alpha: complex = 0.0
    zeta: float = 0.0
    phi: float = 0.0
    theta_c: float = 0.0
    theta_d: float = 0.0

    @property
    def n_plus(self) -> float:
        a2 = abs(self.alpha) ** 2
        return 1.0 / math.sqrt(2.0 + 2.0 * math.exp(-2.0 * a2))

    @property
    def n_minus(self) -> float:
        a2 = abs(self.alpha) ** 2
        return 1.0 / math.sqrt(2.0 - 2.0 * math.exp(-2.0 * a2))


# ---------------------------------------------------------------------------
# constructors

def _check_tail(state: FockState, tail_tol: float, what: str) -> FockState:
    if tail_tol is not None and not state.tail_ok(tail_tol):
        raise TruncationOverflowError(
            f"{what}: top Fock level holds {state.top_level_mass():.3e} "
            f"probability (tolerance {tail_tol:.1e}); increase the truncation"
        )
    return state


def vacuum_state(dim: int, *, label: str = "A") -> FockState:
    return number_state(0, dim, label=label)


def number_state(n: int, dim: int, *, label: str = "A") -> FockState:
    if not 0 <= n < dim:
        raise DimensionMismatchError(f"|{n}> does not fit in dim {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FockState((dim,), amps, (label,))


def coherent_state(alpha: complex, dim: int, *, label: str = "A",
                   tail_tol: float = DEFAULT_TAIL_TOL) -> FockState:
    """Coherent state with amplitudes e^{-|a|^2/2} a^n / sqrt(n!), renormalized."""
    if dim < 2:
        raise DimensionMismatchError("coherent state needs dim >= 2")
    n = np.arange(dim)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, dim)))))
    mag = np.exp(-abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - 0.5 * log_fact) \
        if alpha != 0 else np.eye(dim)[0] * 1.0
    phase = np.exp(1j * n * np.angle(alpha)) if alpha != 0 else np.ones(dim)
    state = FockState((dim,), mag * phase, (label,)).normalized()
    return _check_tail(state, tail_tol, f"coherent_state(alpha={alpha})")


def cat_state(alpha: complex, parity, dim: int, *, label: str = "A",
              tail_tol: float = DEFAULT_TAIL_TOL) -> FockState:
    """Even (+) or odd (-) coherent-state superposition |a> +/- |-a>.

    The wrong-parity amplitudes are identically zero: the construction uses
    (1 +/- (-1)^n) factors rather than numerically cancelling two coherent
    vectors.
    """
    sign = {"+": 1, "-": -1, 1: 1, -1: -1}.get(parity)
    if sign is None:
        raise ValueError(f"parity must be '+' or '-', got {parity!r}")
    if sign < 0 and alpha == 0:
        raise DegenerateCatError("odd cat with alpha = 0 is the zero vector")
    base = coherent_state(alpha, dim, label=label, tail_tol=None)
    n = np.arange(dim)
    amps = base.amplitudes * (1 + sign * (-1.0) ** n)
    state = FockState((dim,), amps, (label,)).normalized()
    return _check_tail(state, tail_tol, f"cat_state(alpha={alpha}, parity={parity})")


def squeezed_vacuum(zeta: float, dim: int, *, label: str = "A",
                    tail_tol: float = DEFAULT_TAIL_TOL) -> FockState:
    """Momentum-squeezed vacuum: amplitudes tanh(z)^m sqrt((2m)!)/(2^m m!) on |2m>.

    The position quadrature is anti-squeezed: Var(X_theta) =
    (e^{2z} cos^2 theta + e^{-2z} sin^2 theta)/2.
    """
    if dim < 6:
        raise DimensionMismatchError("squeezed vacuum needs dim >= 6")
    if not math.isfinite(zeta):
        raise ValueError("squeezing parameter must be finite")
    amps = np.zeros(dim, dtype=complex)
    t = math.tanh(zeta)
    for m in range((dim + 1) // 2):
        if 2 * m < dim:
            amps[2 * m] = t ** m * math.sqrt(math.factorial(2 * m)) / (2 ** m * math.factorial(m))
    state = FockState((dim,), amps, (label,)).normalized()
    return _check_tail(state, tail_tol, f"squeezed_vacuum(zeta={zeta})")


def two_mode_squeezed(lam: float, dims: tuple[int, int], *,
                      labels: Sequence[str] = ("A", "B"),
                      tail_tol: float = DEFAULT_TAIL_TOL) -> FockState:
    """Photon-number-correlated pair state proportional to sum_n lam^n |n, n>."""
    if not 0 <= lam < 1:
        raise ValueError(f"two-mode squeezing magnitude must be in [0, 1), got {lam}")
    d1, d2 = dims
    amps = np.zeros((d1, d2), dtype=complex)
    for n in range(min(d1, d2)):
        amps[n, n] = lam ** n
    state = FockState((d1, d2), amps.reshape(-1), _as_labels(labels)).normalized()
    return _check_tail(state, tail_tol, f"two_mode_squeezed(lam={lam})")


def tensor(states: Iterable[FockState]) -> FockState:
    """Kronecker composition; mode order follows the concatenation order."""
    states = list(states)
    if not states:
        raise ValueError("tensor() needs at least one state")
    labels: list[str] = []
    for s in states:
        labels.extend(s.mode_labels)
    labels_t = _as_labels(labels)  # raises on duplicates
    amps = states[0].amplitudes
    dims: tuple[int, ...] = states[0].mode_dims
    for s in states[1:]:
        amps = np.kron(amps, s.amplitudes)
        dims = dims + s.mode_dims
    return FockState(dims, amps, labels_t)


# ---------------------------------------------------------------------------
# operators

def annihilation_op(dim: int) -> ModeOperator:
    if dim < 2:
        raise DimensionMismatchError("annihilation operator needs dim >= 2")
    mat = np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex)
    return ModeOperator(mat)


def number_op(dim: int) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(dim)).astype(complex))


def identity_op(dim: int) -> ModeOperator:
    return ModeOperator(np.eye(dim, dtype=complex))


def quadrature_op(dim: int, theta: float = 0.0) -> ModeOperator:
    """X_theta = (a e^{-i theta} + a^dag e^{i theta}) / sqrt(2)."""
    a = annihilation_op(dim).matrix
    return ModeOperator((a * np.exp(-1j * theta) + a.conj().T * np.exp(1j * theta)) / np.sqrt(2))


def _op_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, ModeOperator) else np.asarray(op, dtype=complex)


def apply_mode_operator(obj, mode: str, op) -> "FockState | DensityOperator":
    """Apply a single-mode operator: O|psi> for states, O rho O^dag for densities.

    The result is not renormalized.
    """
    m = _op_matrix(op)
    k = obj.mode_index(mode)
    if m.shape[0] != obj.mode_dims[k]:
        raise DimensionMismatchError(
            f"operator dim {m.shape[0]} vs mode {mode!r} dim {obj.mode_dims[k]}")
    if isinstance(obj, FockState):
        t = np.tensordot(m, obj.tensor_view(), axes=([1], [k]))
        t = np.moveaxis(t, 0, k)
        return FockState(obj.mode_dims, t.reshape(-1), obj.mode_labels)
    n = obj.n_modes
    t = obj.tensor_view()
    t = np.tensordot(m, t, axes=([1], [k]))
    t = np.moveaxis(t, 0, k)
    t = np.tensordot(m.conj(), t, axes=([1], [n + k]))
    t = np.moveaxis(t, 0, n + k)
    return DensityOperator(obj.mode_dims, t.reshape(obj.dim, obj.dim), obj.mode_labels)


def expectation(obj, ops: dict) -> complex:
    """Expectation value of a tensor product of single-mode operators.

    ``ops`` maps mode labels to ModeOperator/arrays; unspecified modes get the
    identity.
    """
    if isinstance(obj, FockState):
        acted = obj
        for mode, op in ops.items():
            acted = apply_mode_operator(acted, mode, op)
        return complex(np.vdot(obj.amplitudes, acted.amplitudes))
    t = obj.tensor_view()
    for mode, op in ops.items():
        k = obj.mode_index(mode)
        t = np.moveaxis(np.tensordot(_op_matrix(op), t, axes=([1], [k])), 0, k)
    return complex(np.trace(t.reshape(obj.dim, obj.dim)))


# ---------------------------------------------------------------------------
# metrics and reductions

def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    evals, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    evals = np.clip(evals, 0.0, None)
    return (vecs * np.sqrt(evals)) @ vecs.conj().T


def fidelity(x, y) -> float:
    """Fidelity between states/density operators on matching truncations.

    pure/pure -> |<x|y>|^2, pure/mixed -> <x|rho|x>, mixed/mixed -> Uhlmann.
    """
    if x.mode_dims != y.mode_dims:
        raise DimensionMismatchError(f"dims {x.mode_dims} vs {y.mode_dims}")
    x_pure = isinstance(x, FockState)
    y_pure = isinstance(y, FockState)
    if x_pure and y_pure:
        return float(min(abs(x.overlap(y)) ** 2, 1.0 + 1e-9))
    if x_pure != y_pure:
        psi = (x if x_pure else y).amplitudes
        rho = (y if x_pure else x).matrix
        return float(np.real(np.vdot(psi, rho @ psi)))
    s = _psd_sqrt(x.matrix)
    evals = np.linalg.eigvalsh(s @ y.matrix @ s)
    return float(np.sum(np.sqrt(np.clip(evals, 0.0, None))) ** 2)


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    """Trace out every mode not listed in ``keep`` (original order preserved)."""
    keep = list(keep)
    for label in keep:
        rho.mode_index(label)  # raises UnknownModeError
    keep_idx = [i for i, lab in enumerate(rho.mode_labels) if lab in keep]
    if len(keep_idx) == rho.n_modes:
        return rho
    n = rho.n_modes
    t = rho.tensor_view()
    letters = "abcdefghijklmnopqrstuvwxyz"
    ket = list(letters[:n])
    bra = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep_idx:
            bra[i] = ket[i]
    out = "".join(ket[i] for i in keep_idx) + "".join(letters[n + i] for i in keep_idx)
    reduced = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    new_dims = tuple(rho.mode_dims[i] for i in keep_idx)
    new_labels = tuple(rho.mode_labels[i] for i in keep_idx)
    d = math.prod(new_dims)
    return DensityOperator(new_dims, reduced.reshape(d, d), new_labels)
