"""Iterative maximum-likelihood homodyne reconstruction and phase estimators."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityOperator
from .measurement import QuadratureRecord, quadrature_basis
from .optics import loss_kraus

_PROB_FLOOR = 1e-300


@dataclass
class TomographyJob:
    """One reconstruction task.

    records:
        Homodyne samples of a single mode.
    dim:
        Fock truncation of the reconstructed matrix.
    efficiency:
        Detection efficiency to correct for; each quadrature projector is
        composed with the adjoint binomial-loss map so the pre-loss state is
        reconstructed directly.
    """

    records: list[QuadratureRecord]
    dim: int
    efficiency: float = 1.0
    max_iterations: int = 2000
    tol: float = 1e-10           # log-likelihood gain per sample
    n_phase_bins: int = 12
    n_x_bins: int = 128
    diluted: bool = False        # mix the update operator with the identity
    dilution_weight: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if not self.records:
            raise ValueError("no records to reconstruct from")
        if len(self.records) < self.dim ** 2:
            warnings.warn(
                f"only {len(self.records)} records for dim {self.dim}; "
                f"at least dim^2 = {self.dim ** 2} recommended", stacklevel=2)
        thetas = np.array([r.theta for r in self.records])
        folded = thetas % math.pi
        span = float(folded.max() - folded.min())
        if span < math.pi * (1.0 - 1.0 / max(self.n_phase_bins, 2)):
            warnings.warn(
                f"phase span {span:.2f} rad may be tomographically incomplete "
                "(>= pi recommended)", stacklevel=2)


@dataclass
class MaxlikResult:
    rho: DensityOperator
    log_likelihood: np.ndarray   # per-sample log-likelihood trace, one entry per iteration
    iterations: int
    converged: bool
    flags: list[str] = field(default_factory=list)


def _binned_projectors(job: TomographyJob) -> tuple[np.ndarray, np.ndarray]:
    """Group records into (theta, x) bins.

    Returns ``(vectors, counts)`` where ``vectors[j]`` is the Fock-basis
    quadrature eigenvector of bin j (shape (n_bins, dim)) and ``counts[j]``
    the number of samples in it.  Distinct phases are kept exactly when there
    are at most ``n_phase_bins`` of them, otherwise phases are histogrammed
    and represented by the per-bin mean.
    """
    thetas = np.array([r.theta for r in job.records])
    xs = np.array([r.x for r in job.records])
    unique = np.unique(thetas)
    groups: list[tuple[float, np.ndarray]] = []
    if unique.size <= job.n_phase_bins:
        for th in unique:
            groups.append((float(th), xs[thetas == th]))
    else:
        edges = np.linspace(0.0, 2.0 * math.pi, job.n_phase_bins + 1)
        which = np.clip(np.digitize(thetas, edges) - 1, 0, job.n_phase_bins - 1)
        for b in range(job.n_phase_bins):
            sel = which == b
            if np.any(sel):
                groups.append((float(thetas[sel].mean()), xs[sel]))
    lo, hi = xs.min(), xs.max()
    pad = 0.05 * (hi - lo + 1e-12)
    x_edges = np.linspace(lo - pad, hi + pad, job.n_x_bins + 1)
    centers = 0.5 * (x_edges[:-1] + x_edges[1:])
    vecs = []
    counts = []
    for theta, x_group in groups:
        hist, _ = np.histogram(x_group, bins=x_edges)
        mask = hist > 0
        basis = quadrature_basis(job.dim, theta, centers[mask])  # (dim, nbin)
        vecs.append(basis.T)
        counts.append(hist[mask].astype(float))
    return np.vstack(vecs), np.concatenate(counts)


def maxlik_reconstruct(job: TomographyJob) -> MaxlikResult:
    """Fixed-point iteration rho <- N[R(rho) rho R(rho)].

    R(rho) = sum_j (f_j / p_j) Pi_j with Pi_j the binned quadrature projector
    composed with the adjoint loss map for the configured efficiency, and
    p_j = tr(rho Pi_j).  Stops when the per-sample log-likelihood gain falls
    below ``job.tol`` or after ``job.max_iterations``.
    """
    vectors, counts = _binned_projectors(job)
    total = float(counts.sum())
    if job.efficiency < 1.0:
        kraus = loss_kraus(job.dim, job.efficiency)
        # adjoint map on rank-1 projectors: Pi~ = sum_k K_k^dag |w><w| K_k
        lifted = np.stack([vectors @ k.conj() for k in kraus], axis=0)  # (nk, nj, dim)
    else:
        lifted = vectors[None, :, :]

    dim = job.dim
    rho = np.eye(dim, dtype=complex) / dim
    loglik: list[float] = []
    flags: list[str] = []
    converged = False
    it = 0
    for it in range(1, job.max_iterations + 1):
        # p_j = sum_k <w_jk| rho |w_jk>
        probs = np.einsum("kjn,nm,kjm->j", lifted.conj(), rho, lifted).real
        probs = np.clip(probs, _PROB_FLOOR, None)
        ll = float(np.dot(counts, np.log(probs)) / total)
        loglik.append(ll)
        weights = counts / probs / total
        r_op = np.einsum("j,kjn,kjm->nm", weights, lifted, lifted.conj())
        if job.diluted:
            r_op = (1.0 - job.dilution_weight) * np.eye(dim) + job.dilution_weight * r_op
        new_rho = r_op @ rho @ r_op
        new_rho = 0.5 * (new_rho + new_rho.conj().T)
        tr = np.trace(new_rho).real
        if tr <= 0:
            flags.append("trace-collapse")
            break
        new_rho /= tr
        if len(loglik) >= 2 and loglik[-1] - loglik[-2] < job.tol:
            rho = new_rho
            converged = True
            break
        rho = new_rho
    if not converged:
        flags.append("non-convergence")
    out = DensityOperator((dim,), rho, ("D",)).normalized()
    return MaxlikResult(out, np.array(loglik), it, converged, flags)


# ---------------------------------------------------------------------------
# phase estimators

@dataclass(frozen=True)
class PhaseEstimate:
    value: float
    clamped: bool = False


def estimate_phase_from_variance(records: list[QuadratureRecord], window_size: int,
                                 zeta: float) -> list[PhaseEstimate]:
    """Phase of a squeezed-vacuum mode from windowed quadrature variances.

    Inverts Var(X_theta) = (e^{2z} cos^2 theta + e^{-2z} sin^2 theta)/2 (the
    position quadrature of the z > 0 squeezed vacuum is anti-squeezed) on the
    theta in [0, pi/2] branch.  Windows whose variance falls outside the
    invertible band are clamped and flagged.
    """
    if window_size < 50:
        raise ValueError("window_size must be at least 50")
    if zeta <= 0:
        raise ValueError("variance inversion needs zeta > 0")
    xs = np.array([r.x for r in records])
    estimates = []
    cosh2z, sinh2z = math.cosh(2 * zeta), math.sinh(2 * zeta)
    for lo in range(0, xs.size - window_size + 1, window_size):
        var = float(np.var(xs[lo:lo + window_size]))
        c = (2.0 * var - cosh2z) / sinh2z
        clamped = not -1.0 <= c <= 1.0
        c = min(max(c, -1.0), 1.0)
        estimates.append(PhaseEstimate(0.5 * math.acos(c), clamped))
    return estimates


def estimate_phase_difference(records_c: list[QuadratureRecord],
                              records_d: list[QuadratureRecord],
                              alpha: float) -> PhaseEstimate:
    """Phase difference of the two resource modes from paired samples.

    Inverts the correlation <X_C X_D> = alpha cos(theta_C - theta_D) on the
    [0, pi] branch; correlations beyond +/- alpha are clamped and flagged.
    """
    if len(records_c) != len(records_d) or not records_c:
        raise ValueError("need equally many, non-empty paired records")
    if alpha <= 0:
        raise ValueError("correlation inversion needs alpha > 0")
    corr = float(np.mean([rc.x * rd.x for rc, rd in zip(records_c, records_d)]))
    c = corr / alpha
    clamped = not -1.0 <= c <= 1.0
    c = min(max(c, -1.0), 1.0)
    return PhaseEstimate(math.acos(c), clamped)


def estimate_input_phase(records: list[QuadratureRecord], alpha_eff: float,
                         records_shifted: list[QuadratureRecord] | None = None
                         ) -> PhaseEstimate:
    """Input coherent phase from the mean homodyne reading <X> = sqrt(2) a_eff cos(phi).

    ``alpha_eff`` is the known effective displacement per interferometer arm
    (signed, so callers can absorb their port convention).  When a second
    record set taken a quarter period later is supplied, its mean sign picks
    the phi branch in (-pi, pi]; otherwise the [0, pi] branch is returned.
    """
    if not records:
        raise ValueError("no records")
    if alpha_eff == 0:
        raise ValueError("needs a nonzero effective displacement")
    mean = float(np.mean([r.x for r in records]))
    c = mean / (math.sqrt(2.0) * alpha_eff)
    clamped = not -1.0 <= c <= 1.0
    c = min(max(c, -1.0), 1.0)
    phi = math.acos(c)
    if records_shifted is not None:
        mean_shifted = float(np.mean([r.x for r in records_shifted]))
        # <X_{theta+pi/2}> = sqrt(2) a_eff sin(phi): negative mean -> lower branch
        if mean_shifted / alpha_eff < 0:
            phi = -phi
    return PhaseEstimate(phi, clamped)
