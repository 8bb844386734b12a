"""Click detectors, conditional state updates, homodyne statistics, Wigner maps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import genlaguerre

from .errors import (
    DimensionMismatchError,
    GridCoverageError,
    UnknownModeError,
    ZeroProbabilityError,
)
from .fock import (
    DensityOperator,
    FockState,
    ModeOperator,
    apply_mode_operator,
    partial_trace,
    quadrature_op,
    _psd_sqrt,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class QuadratureRecord:
    """One homodyne sample: local-oscillator phase, outcome, mode label."""

    mode: str
    theta: float
    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise ValueError(f"quadrature value must be finite, got {self.x}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "x", float(self.x))


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a rectangular phase-space grid."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(x), len(p))

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        dp = self.p[1] - self.p[0]
        return float(np.trapezoid(np.trapezoid(self.values, dx=dp, axis=1), dx=dx))

    def at_origin(self) -> float:
        ix = int(np.argmin(np.abs(self.x)))
        ip = int(np.argmin(np.abs(self.p)))
        return float(self.values[ix, ip])


def click_povm(eta: float, dim: int) -> ModeOperator:
    """Effect of a non-discriminating detector: diag(1 - (1-eta)^n)."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency must be in (0, 1], got {eta}")
    n = np.arange(dim)
    return ModeOperator(np.diag(1.0 - (1.0 - eta) ** n).astype(complex))


def _effect_matrix(effect, dim: int) -> np.ndarray:
    """Accept a ModeOperator / array POVM element or a single-mode FockState
    (interpreted as the rank-1 projector onto it)."""
    if isinstance(effect, FockState):
        if effect.n_modes != 1:
            raise DimensionMismatchError("projector state must be single-mode")
        v = effect.normalized().amplitudes
        mat = np.outer(v, v.conj())
    elif isinstance(effect, ModeOperator):
        mat = effect.matrix
    else:
        mat = np.asarray(effect, dtype=complex)
    if mat.shape != (dim, dim):
        raise DimensionMismatchError(f"effect shape {mat.shape} vs mode dim {dim}")
    evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    if evals[0] < -1e-9 or evals[-1] > 1.0 + 1e-9:
        raise ValueError("effect is not a POVM element (needs 0 <= E <= 1)")
    return mat


def condition_on(obj, mode: str, effect, *, discard: bool = False):
    """Measurement update on one mode.

    Returns ``(posterior, probability)``.  The posterior keeps the measured
    mode (updated through the square root of the effect) unless ``discard``
    is set, in which case the mode is traced out.  Pure inputs stay pure
    whenever the mode is kept.
    """
    k = obj.mode_index(mode)
    d = obj.mode_dims[k]
    e = _effect_matrix(effect, d)

    if isinstance(obj, FockState):
        prob = float(np.real(
            np.vdot(obj.amplitudes, apply_mode_operator(obj, mode, e).amplitudes)))
        if prob < 1e-14:
            raise ZeroProbabilityError(f"effect on mode {mode!r} has probability {prob:.2e}")
        if not discard:
            post = apply_mode_operator(obj, mode, _psd_sqrt(e))
            return post.normalized(), prob
        t = np.moveaxis(obj.tensor_view(), k, 0).reshape(d, -1)
        reduced = np.einsum("nm,mr,ns->rs", e, t, t.conj()) / prob
        dims = tuple(x for i, x in enumerate(obj.mode_dims) if i != k)
        labels = tuple(x for i, x in enumerate(obj.mode_labels) if i != k)
        if not dims:
            raise DimensionMismatchError("cannot discard the only mode")
        reduced = 0.5 * (reduced + reduced.conj().T)
        return DensityOperator(dims, reduced, labels), prob

    # probability tr[(E x 1) rho]
    t = obj.tensor_view()
    t_e = np.moveaxis(np.tensordot(e, t, axes=([1], [k])), 0, k)
    prob = float(np.real(np.trace(t_e.reshape(obj.dim, obj.dim))))
    if prob < 1e-14:
        raise ZeroProbabilityError(f"effect on mode {mode!r} has probability {prob:.2e}")
    if discard:
        post = DensityOperator(obj.mode_dims, t_e.reshape(obj.dim, obj.dim), obj.mode_labels)
        keep = [lab for lab in obj.mode_labels if lab != mode]
        reduced = partial_trace(post, keep)
        mat = 0.5 * (reduced.matrix + reduced.matrix.conj().T) / prob
        return DensityOperator(reduced.mode_dims, mat, reduced.mode_labels), prob
    sqrt_e = _psd_sqrt(e)
    post = apply_mode_operator(obj, mode, sqrt_e)
    return DensityOperator(obj.mode_dims, post.matrix / prob, obj.mode_labels), prob


# ---------------------------------------------------------------------------
# homodyne statistics

def hermite_functions(dim: int, x: np.ndarray) -> np.ndarray:
    """Normalized oscillator eigenfunctions psi_n(x), n < dim, shape (dim, len(x)).

    Three-term recurrence in normalized form; stable for n up to a few hundred.
    Convention: vacuum density |psi_0|^2 has variance 1/2.
    """
    x = np.asarray(x, dtype=float)
    psi = np.empty((dim, x.size))
    psi[0] = np.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if dim > 1:
        psi[1] = math.sqrt(2.0) * x * psi[0]
    for n in range(2, dim):
        psi[n] = math.sqrt(2.0 / n) * x * psi[n - 1] - math.sqrt((n - 1) / n) * psi[n - 2]
    return psi


def quadrature_basis(dim: int, theta: float, x: np.ndarray) -> np.ndarray:
    """<n|x_theta> = e^{i n theta} psi_n(x); shape (dim, len(x))."""
    psi = hermite_functions(dim, x)
    return psi * np.exp(1j * theta * np.arange(dim))[:, None]


def default_x_grid(n: int = 2048, span: float = 8.0) -> np.ndarray:
    return np.linspace(-span, span, n)


def _single_mode_density(obj, mode: str | None):
    if isinstance(obj, FockState):
        if obj.n_modes == 1:
            return obj
        if mode is None:
            raise UnknownModeError("multi-mode input needs a mode label")
        rho = partial_trace(obj.to_density(), [mode])
        return rho
    if obj.n_modes == 1:
        return obj
    if mode is None:
        raise UnknownModeError("multi-mode input needs a mode label")
    return partial_trace(obj, [mode])


def quadrature_distribution(obj, mode: str | None, theta: float,
                            x_grid: np.ndarray) -> np.ndarray:
    """Probability density p(x | theta) of the X_theta homodyne outcome.

    The grid must span the state's mean +/- 6 standard deviations.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    single = _single_mode_density(obj, mode)
    d = single.mode_dims[0]
    label = single.mode_labels[0]
    from .fock import expectation  # local import to avoid cycle at module load

    xop = quadrature_op(d, theta)
    mean = float(np.real(expectation(single, {label: xop})))
    second = float(np.real(expectation(single, {label: xop.matrix @ xop.matrix})))
    sigma = math.sqrt(max(second - mean ** 2, 1e-12))
    if x_grid[0] > mean - 6 * sigma or x_grid[-1] < mean + 6 * sigma:
        raise GridCoverageError(
            f"grid [{x_grid[0]}, {x_grid[-1]}] misses mean {mean:.3f} +/- 6 x {sigma:.3f}")
    basis = quadrature_basis(d, theta, x_grid)  # (d, nx)
    if isinstance(single, FockState):
        return np.abs(np.einsum("n,nx->x", single.amplitudes, basis.conj())) ** 2
    dens = np.real(np.einsum("nx,nm,mx->x", basis.conj(), single.matrix, basis))
    return np.clip(dens, 0.0, None)


def _cdf_from_density(x_grid: np.ndarray, dens: np.ndarray) -> np.ndarray:
    dx = x_grid[1] - x_grid[0]
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * dx)))
    total = cdf[-1]
    if total <= 0:
        raise ZeroProbabilityError("density integrates to zero on the grid")
    return cdf / total


def sample_quadratures(obj, mode: str | None, thetas, *, seed: int | None = None,
                       rng: np.random.Generator | None = None,
                       x_grid: np.ndarray | None = None) -> list[QuadratureRecord]:
    """Draw one homodyne sample per entry of ``thetas`` by inverse-CDF lookup.

    Deterministic given the seed: uniforms are drawn in record order, and each
    distinct phase shares one gridded distribution.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    thetas = np.asarray(thetas, dtype=float) % TWO_PI
    grid = default_x_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    single = _single_mode_density(obj, mode)
    label = single.mode_labels[0] if mode is None else mode
    uniforms = rng.random(thetas.size)
    xs = np.empty(thetas.size)
    for theta in np.unique(thetas):
        sel = thetas == theta
        dens = quadrature_distribution(single, single.mode_labels[0], float(theta), grid)
        cdf = _cdf_from_density(grid, dens)
        xs[sel] = np.interp(uniforms[sel], cdf, grid)
    return [QuadratureRecord(label, float(t), float(v)) for t, v in zip(thetas, xs)]


def sample_quadrature_pairs(obj, modes: tuple[str, str], thetas: tuple[float, float],
                            n: int, *, seed: int | None = None,
                            rng: np.random.Generator | None = None,
                            x_grid: np.ndarray | None = None,
                            chunk: int = 8192) -> list[tuple[QuadratureRecord, QuadratureRecord]]:
    """Draw ``n`` correlated homodyne pairs from a two-mode joint state.

    The first mode is sampled from its marginal, the second from the
    conditional state given the first outcome (projection onto the improper
    quadrature eigenvector, exact on the truncated space).
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    mode_a, mode_b = modes
    theta_a, theta_b = (float(t) % TWO_PI for t in thetas)
    grid = default_x_grid() if x_grid is None else np.asarray(x_grid, dtype=float)

    if isinstance(obj, FockState):
        joint = obj if obj.n_modes == 2 else None
        if joint is None:
            rho = partial_trace(obj.to_density(), [mode_a, mode_b])
            return sample_quadrature_pairs(rho, modes, thetas, n, rng=rng, x_grid=grid)
        ka, kb = joint.mode_index(mode_a), joint.mode_index(mode_b)
        psi = joint.tensor_view()
        if ka == 1:
            psi = psi.T
        da, db = psi.shape
        basis_a = quadrature_basis(da, theta_a, grid)
        basis_b = quadrature_basis(db, theta_b, grid)
        dens_a = np.clip(np.sum(np.abs(basis_a.conj().T @ psi) ** 2, axis=1), 0.0, None)
        cdf_a = _cdf_from_density(grid, dens_a)
        u = rng.random((n, 2))
        xa = np.interp(u[:, 0], cdf_a, grid)
        xb = np.empty(n)
        for lo in range(0, n, chunk):
            hi = min(lo + chunk, n)
            ba = quadrature_basis(da, theta_a, xa[lo:hi])  # (da, m)
            cond = ba.conj().T @ psi                        # (m, db) unnormalized D amplitudes
            amp = cond @ basis_b.conj()                     # (m, nx)
            dens = np.abs(amp) ** 2
            dx = grid[1] - grid[0]
            cdf = np.concatenate(
                (np.zeros((hi - lo, 1)),
                 np.cumsum(0.5 * (dens[:, 1:] + dens[:, :-1]) * dx, axis=1)), axis=1)
            cdf /= cdf[:, -1:]
            for i in range(hi - lo):
                xb[lo + i] = np.interp(u[lo + i, 1], cdf[i], grid)
        return [
            (QuadratureRecord(mode_a, theta_a, float(a)), QuadratureRecord(mode_b, theta_b, float(b)))
            for a, b in zip(xa, xb)
        ]

    rho = partial_trace(obj, [mode_a, mode_b])
    first = rho.mode_labels.index(mode_a)
    da, db = rho.mode_dims if first == 0 else rho.mode_dims[::-1]
    t = rho.tensor_view()
    if first == 1:
        t = np.transpose(t, (1, 0, 3, 2))
    basis_a = quadrature_basis(da, theta_a, grid)
    basis_b = quadrature_basis(db, theta_b, grid)
    # marginal of mode A: sum_b <x_a, b| rho |x_a, b>
    dens_a = np.clip(np.real(np.einsum("nx,nbmb,mx->x", basis_a.conj(), t, basis_a)), 0.0, None)
    cdf_a = _cdf_from_density(grid, dens_a)
    u = rng.random((n, 2))
    xa = np.interp(u[:, 0], cdf_a, grid)
    xb = np.empty(n)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        ba = quadrature_basis(da, theta_a, xa[lo:hi])      # (da, m)
        cond = np.einsum("nk,nbmc,mk->kbc", ba.conj(), t, ba)  # (m, db, db)
        amp = np.einsum("bx,kbc,cx->kx", basis_b.conj(), cond, basis_b).real
        dens = np.clip(amp, 0.0, None)
        dx = grid[1] - grid[0]
        cdf = np.concatenate(
            (np.zeros((hi - lo, 1)),
             np.cumsum(0.5 * (dens[:, 1:] + dens[:, :-1]) * dx, axis=1)), axis=1)
        cdf /= cdf[:, -1:]
        for i in range(hi - lo):
            xb[lo + i] = np.interp(u[lo + i, 1], cdf[i], grid)
    return [
        (QuadratureRecord(mode_a, theta_a, float(a)), QuadratureRecord(mode_b, theta_b, float(b)))
        for a, b in zip(xa, xb)
    ]


# ---------------------------------------------------------------------------
# Wigner function

def _wigner_mn(m: int, n: int, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Phase-space kernel of |m><n| in the displaced-parity normalization
    (integral over dx dp equals tr |m><n| = delta_mn)."""
    if m < n:
        return np.conj(_wigner_mn(n, m, x, p))
    r2 = x ** 2 + p ** 2
    pref = np.exp(-r2) / np.pi
    coeff = math.sqrt(2.0 ** (m - n) * math.factorial(n) / math.factorial(m))
    poly = genlaguerre(n, m - n)(2.0 * r2)
    return pref * ((-1.0) ** n) * coeff * ((x - 1j * p) ** (m - n)) * poly


def wigner(obj, mode: str | None = None, *, x: np.ndarray | None = None,
           p: np.ndarray | None = None) -> WignerGrid:
    """Wigner function of a single-mode state on a rectangular grid.

    Normalized so the full phase-space integral is 1; the vacuum peaks at
    1/pi at the origin.  Multi-mode inputs are reduced to ``mode`` first.
    """
    single = _single_mode_density(obj, mode)
    rho = single.to_density() if isinstance(single, FockState) else single
    d = rho.mode_dims[0]
    x = np.linspace(-5.0, 5.0, 101) if x is None else np.asarray(x, dtype=float)
    p = np.linspace(-5.0, 5.0, 101) if p is None else np.asarray(p, dtype=float)
    xg, pg = np.meshgrid(x, p, indexing="ij")
    mat = rho.matrix
    w = np.zeros(xg.shape, dtype=complex)
    for m in range(d):
        w += mat[m, m].real * _wigner_mn(m, m, xg, pg)
        for n in range(m):
            w += 2.0 * np.real(mat[m, n] * _wigner_mn(m, n, xg, pg))
    return WignerGrid(x=x, p=p, values=np.real(w))
