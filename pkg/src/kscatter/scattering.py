"""On-shell scattering matrix for a point-potential configuration.

At energy lambda > 0 the scattering matrix acts on L2(S2) as the identity
plus a finite-rank operator spanned by the plane-wave vectors
q_j(n) = lambda^(1/4) / (4 pi) * exp(i sqrt(lambda) n . x_j). Its coefficient
matrix is C = (kappa + i G)^(-1) with kappa = Re Q(lambda + i0) + c L and
G = Im Q(lambda + i0), the Gram matrix of the q_j. Unitarity is equivalent
to the Gram identity (C^-1 - (C^H)^-1) / (2i) = G, which holds by
construction; the grid-level defect measures only quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FOUR_PI, PointConfiguration
from .errors import (
    LengthMismatchError,
    NonpositiveEnergyError,
    SingularDenominatorError,
)
from .greens import SpectralPoint, q_matrix
from .sphere import SphereGrid, grid_for

#: Condition number beyond which the Krein denominator counts as singular.
COND_LIMIT = 1e14


@dataclass(frozen=True, eq=False)
class PlaneWaveVectors:
    """Samples q[j, i] = q_j(n_i) of the plane-wave vectors on a sphere grid."""

    lam: float
    q: np.ndarray  # (N, M)
    grid: SphereGrid


@dataclass(frozen=True, eq=False)
class SMatrixData:
    """Assembled finite-rank scattering data at one energy.

    ``kappa`` is Hermitian, ``gram`` real symmetric positive semidefinite,
    ``coeff`` the inverse of kappa + i gram. ``cond`` records the condition
    number of that denominator; ``path`` is "direct" or "scaled" depending on
    which assembly route produced the coefficients.
    """

    lam: float
    kappa: np.ndarray
    gram: np.ndarray
    coeff: np.ndarray
    qvecs: PlaneWaveVectors
    cond: float
    convention: float
    config: PointConfiguration
    path: str = "direct"

    @property
    def n_points(self) -> int:
        return self.kappa.shape[0]

    @property
    def grid(self) -> SphereGrid:
        return self.qvecs.grid


@dataclass(frozen=True, eq=False)
class CrossSectionResult:
    """Scattering amplitude at a fixed incoming direction with optical-theorem data."""

    lam: float
    n_in: np.ndarray
    f: np.ndarray  # amplitude sampled on the grid nodes
    f_forward: complex
    sigma_diff: np.ndarray  # |f|^2 per node
    sigma_total: float
    optical_lhs: float
    optical_rhs: float
    cond: float


def plane_wave_vectors(lam: float, config: PointConfiguration, grid: SphereGrid) -> PlaneWaveVectors:
    """Rows q_j sampled at the grid nodes."""
    if lam <= 0.0:
        raise NonpositiveEnergyError(f"plane-wave vectors require lambda > 0, got {lam}")
    phase = np.sqrt(lam) * (config.points @ grid.nodes.T)  # (N, M)
    return PlaneWaveVectors(lam=float(lam), q=(lam**0.25 / FOUR_PI) * np.exp(1j * phase), grid=grid)


def plane_wave_at(lam: float, config: PointConfiguration, direction) -> np.ndarray:
    """q_j evaluated at one direction (unit 3-vector), shape (N,)."""
    if lam <= 0.0:
        raise NonpositiveEnergyError(f"plane-wave vectors require lambda > 0, got {lam}")
    n = np.asarray(direction, dtype=float)
    return (lam**0.25 / FOUR_PI) * np.exp(1j * np.sqrt(lam) * (config.points @ n))


def gram_analytic(lam: float, config: PointConfiguration) -> np.ndarray:
    """Gram matrix of the plane-wave vectors in closed form.

    Off-diagonal sin(sqrt(lambda) r) / (4 pi r), diagonal sqrt(lambda)/(4 pi);
    entrywise equal to Im Q(lambda + i0).
    """
    if lam <= 0.0:
        raise NonpositiveEnergyError(f"gram matrix requires lambda > 0, got {lam}")
    pts = config.points
    n = pts.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    k = np.sqrt(lam)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    out = np.full((n, n), k / FOUR_PI)
    off = ~np.eye(n, dtype=bool)
    out[off] = np.sin(k * dist[off]) / (FOUR_PI * dist[off])
    return out


def gram_quadrature(qvecs: PlaneWaveVectors, grid: SphereGrid) -> np.ndarray:
    """Gram matrix from discrete inner products; cross-validates gram_analytic."""
    if qvecs.grid is not grid and qvecs.grid.size != grid.size:
        raise LengthMismatchError("plane-wave samples do not match grid")
    q = qvecs.q
    return (q * grid.weights[None, :]) @ q.conj().T


def assemble_s(
    lam: float,
    config: PointConfiguration,
    grid: SphereGrid | None = None,
    convention: float | None = None,
) -> SMatrixData:
    """Assemble the finite-rank scattering data at energy lambda.

    kappa = Re Q(lambda + i0) + c L and G = Im Q(lambda + i0), so the
    denominator kappa + i G equals Q(lambda + i0) + c L. Raises
    SingularDenominatorError when its condition number exceeds COND_LIMIT,
    which signals lambda at or near a spectral singularity of the
    perturbation.
    """
    if lam <= 0.0:
        raise NonpositiveEnergyError(f"scattering assembly requires lambda > 0, got {lam}")
    if grid is None:
        grid = grid_for(lam, config.diameter)
    c = float(config.coupling.convention if convention is None else convention)
    n = config.n_points
    qvecs = _qvecs_or_empty(lam, config, grid)
    if n == 0:
        return SMatrixData(
            lam=float(lam),
            kappa=np.zeros((0, 0)),
            gram=np.zeros((0, 0)),
            coeff=np.zeros((0, 0), dtype=complex),
            qvecs=qvecs,
            cond=1.0,
            convention=c,
            config=config,
        )
    q_bnd = q_matrix(SpectralPoint.boundary_plus(lam), config).entries
    kappa = q_bnd.real + c * config.coupling.dense()
    gram = gram_analytic(lam, config)
    denom = kappa + 1j * gram
    cond = float(np.linalg.cond(denom))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularDenominatorError(
            f"Krein denominator at lambda={lam} is numerically singular (cond={cond:.3e})"
        )
    coeff = np.linalg.solve(denom, np.eye(n, dtype=complex))
    return SMatrixData(
        lam=float(lam),
        kappa=kappa,
        gram=gram,
        coeff=coeff,
        qvecs=qvecs,
        cond=cond,
        convention=c,
        config=config,
    )


def assemble_s_scaled(
    lam: float,
    config: PointConfiguration,
    grid: SphereGrid | None = None,
    convention: float | None = None,
) -> SMatrixData:
    """Assembly through the |L|^(-1/2)-scaled denominator for invertible L.

    Inverts B (Re Q + i G) B / c + J_L with B = |L|^(-1/2) and J_L = L |L|^-1,
    then scales back: C = B Gamma B / c. Algebraically identical to the direct
    route whenever both are well conditioned; useful when L has widely spread
    eigenvalues. Requires 0 in the resolvent set of L.
    """
    if lam <= 0.0:
        raise NonpositiveEnergyError(f"scattering assembly requires lambda > 0, got {lam}")
    if grid is None:
        grid = grid_for(lam, config.diameter)
    c = float(config.coupling.convention if convention is None else convention)
    n = config.n_points
    qvecs = _qvecs_or_empty(lam, config, grid)
    if n == 0:
        return SMatrixData(
            lam=float(lam),
            kappa=np.zeros((0, 0)),
            gram=np.zeros((0, 0)),
            coeff=np.zeros((0, 0), dtype=complex),
            qvecs=qvecs,
            cond=1.0,
            convention=c,
            config=config,
            path="scaled",
        )
    b_half = config.coupling.abs_inv_sqrt()
    j_sign = config.coupling.sign_operator()
    q_bnd = q_matrix(SpectralPoint.boundary_plus(lam), config).entries
    kappa = q_bnd.real + c * config.coupling.dense()
    gram = gram_analytic(lam, config)
    core = b_half @ (q_bnd.real + 1j * gram) @ b_half / c + j_sign
    cond = float(np.linalg.cond(core))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularDenominatorError(
            f"scaled Krein denominator at lambda={lam} is numerically singular (cond={cond:.3e})"
        )
    gamma = np.linalg.solve(core, np.eye(n, dtype=complex))
    coeff = b_half @ gamma @ b_half / c
    return SMatrixData(
        lam=float(lam),
        kappa=kappa,
        gram=gram,
        coeff=coeff,
        qvecs=qvecs,
        cond=cond,
        convention=c,
        config=config,
        path="scaled",
    )


def _qvecs_or_empty(lam: float, config: PointConfiguration, grid: SphereGrid) -> PlaneWaveVectors:
    if config.n_points == 0:
        return PlaneWaveVectors(lam=float(lam), q=np.zeros((0, grid.size), dtype=complex), grid=grid)
    return plane_wave_vectors(lam, config, grid)


def s_kernel(smat: SMatrixData, n, n_prime) -> complex:
    """Off-identity kernel K(n, n') = -2i sum_jk C_jk q_k(n) conj(q_j(n'))."""
    if smat.n_points == 0:
        return 0.0 + 0.0j
    qn = plane_wave_at(smat.lam, smat.config, n)
    qp = plane_wave_at(smat.lam, smat.config, n_prime)
    return complex(-2j * (qn @ (smat.coeff.T @ np.conj(qp))))


def kernel_matrix(smat: SMatrixData) -> np.ndarray:
    """K sampled on all grid node pairs, shape (M, M)."""
    grid = smat.grid
    if smat.n_points == 0:
        return np.zeros((grid.size, grid.size), dtype=complex)
    q = smat.qvecs.q
    return -2j * (q.T @ smat.coeff.T @ np.conj(q))


def grid_operator_matrix(smat: SMatrixData) -> np.ndarray:
    """Dense matrix of S acting on node-value vectors: I + K diag(weights)."""
    grid = smat.grid
    op = kernel_matrix(smat) * grid.weights[None, :]
    op[np.diag_indices(grid.size)] += 1.0
    return op


def s_apply(smat: SMatrixData, values: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Apply S to a function sampled on the grid via quadrature inner products."""
    values = np.asarray(values, dtype=complex)
    if values.shape != (grid.size,):
        raise LengthMismatchError("sphere function length does not match grid")
    if smat.n_points == 0:
        return values.copy()
    q = smat.qvecs.q
    ip = (q.conj() * grid.weights[None, :]) @ values  # <f, q_j>
    return values - 2j * (q.T @ (smat.coeff.T @ ip))


def cayley_on_span(smat: SMatrixData) -> np.ndarray:
    """Matrix of S restricted to the plane-wave span: (kappa - iG)(kappa + iG)^(-1).

    Row s holds the coefficients of S q_s over the q_j.
    """
    return (smat.kappa - 1j * smat.gram) @ smat.coeff


def det_s(smat: SMatrixData) -> complex:
    """Determinant of S on L2(S2) via the finite-rank structure.

    det S = det(kappa - iG) / det(kappa + iG); unimodular for Hermitian
    couplings since the numerator is then the conjugate-transpose determinant.
    """
    if smat.n_points == 0:
        return 1.0 + 0.0j
    sign_n, log_n = np.linalg.slogdet(smat.kappa - 1j * smat.gram)
    sign_d, log_d = np.linalg.slogdet(smat.kappa + 1j * smat.gram)
    if sign_d == 0:
        raise SingularDenominatorError("Krein denominator has zero determinant")
    return complex(sign_n / sign_d * np.exp(log_n - log_d))


def unitarity_defect(smat: SMatrixData) -> float:
    """Relative grid unitarity defect ||S^H W S - W||_F / ||W||_F.

    Uses the finite-rank factorization S = I + P E R so the M x M defect
    matrix R^H (E^H + E + E^H Gq E) R is never materialized; the inner
    N x N core isolates the quadrature error of the Gram matrix without
    large-term cancellation.
    """
    grid = smat.grid
    w = grid.weights
    w_norm = float(np.sqrt(np.sum(w * w)))
    if smat.n_points == 0:
        return 0.0
    q = smat.qvecs.q
    r_fac = q.conj() * w[None, :]  # (N, M)
    e_core = -2j * smat.coeff.T
    gq = r_fac @ q.T  # quadrature Gram, transposed indexing
    m_core = e_core.conj().T + e_core + e_core.conj().T @ gq @ e_core
    rr = r_fac @ r_fac.conj().T
    val = np.trace(m_core @ rr @ m_core.conj().T @ rr).real
    return float(np.sqrt(max(val, 0.0)) / w_norm)


def unitarity_defect_dense(smat: SMatrixData) -> float:
    """Defect from the explicit grid matrix; O(M^3), for cross-checks only."""
    grid = smat.grid
    s_op = grid_operator_matrix(smat)
    w = grid.weights
    delta = s_op.conj().T @ (w[:, None] * s_op) - np.diag(w)
    return float(np.linalg.norm(delta) / np.linalg.norm(np.diag(w)))


def cross_section(
    lam: float,
    config: PointConfiguration,
    grid: SphereGrid | None = None,
    n_in=(0.0, 0.0, 1.0),
    smat: SMatrixData | None = None,
) -> CrossSectionResult:
    """Scattering amplitude and cross sections for one incoming direction.

    The amplitude convention is K(n, n') = (i sqrt(lambda) / (2 pi)) f(n, n'),
    i.e. f(n) = (2 pi / (i sqrt(lambda))) K(n, n_in). The optical theorem
    sigma_total = (4 pi / sqrt(lambda)) Im f(n_in) then follows from grid
    unitarity and pins the kernel sign.
    """
    if smat is None:
        smat = assemble_s(lam, config, grid)
    grid = smat.grid
    k = np.sqrt(smat.lam)
    n_in = np.asarray(n_in, dtype=float)
    n_in = n_in / np.linalg.norm(n_in)
    if smat.n_points == 0:
        zero = np.zeros(grid.size, dtype=complex)
        return CrossSectionResult(
            lam=smat.lam,
            n_in=n_in,
            f=zero,
            f_forward=0.0 + 0.0j,
            sigma_diff=np.zeros(grid.size),
            sigma_total=0.0,
            optical_lhs=0.0,
            optical_rhs=0.0,
            cond=smat.cond,
        )
    q = smat.qvecs.q
    q_in = plane_wave_at(smat.lam, smat.config, n_in)
    col = smat.coeff.T @ np.conj(q_in)
    kernel_col = -2j * (q.T @ col)  # K(n_i, n_in)
    pref = 2.0 * np.pi / (1j * k)
    f = pref * kernel_col
    f_forward = complex(pref * (-2j) * (q_in @ col))
    sigma_diff = np.abs(f) ** 2
    sigma_total = float(np.sum(grid.weights * sigma_diff))
    optical_rhs = float(FOUR_PI / k * f_forward.imag)
    return CrossSectionResult(
        lam=smat.lam,
        n_in=n_in,
        f=f,
        f_forward=f_forward,
        sigma_diff=sigma_diff,
        sigma_total=sigma_total,
        optical_lhs=sigma_total,
        optical_rhs=optical_rhs,
        cond=smat.cond,
    )
