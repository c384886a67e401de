"""Point-potential configurations and coupling operators.

A configuration is an ordered family of distinct carrier points in R^3
together with a coupling operator L (diagonal real weights or a full
Hermitian matrix). Truncated infinite families are ordinary finite
configurations produced by a generator such as :func:`lattice_line`;
their admissibility is assessed by :func:`check_summability` on the
partial sums of ``|L|^(-1/2)`` entries and their delta-weighted variant.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicatePointError,
    EmptyConfigurationError,
    NegativeDeltaError,
    NonHermitianCouplingError,
    SingularLError,
    ZeroWeightError,
)

FOUR_PI = 4.0 * np.pi

#: Relative threshold below which distinct parsed points are flagged as
#: numerically coincident (warning only; exact duplicates are errors).
NEAR_DUPLICATE_RTOL = 1e-12

_HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class CouplingOperator:
    """Coupling operator L plus the scale applied to it in the Krein denominator.

    Exactly one of ``weights`` (diagonal L) and ``matrix`` (full Hermitian L)
    is set. ``convention`` is the factor c in the denominator Q + cL; the
    default is 4*pi, the alternative is 1.
    """

    weights: np.ndarray | None = None
    matrix: np.ndarray | None = None
    convention: float = FOUR_PI

    @staticmethod
    def diagonal(weights, convention: float = FOUR_PI) -> "CouplingOperator":
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size and np.any(w == 0.0):
            raise ZeroWeightError("diagonal coupling weights must all be nonzero")
        return CouplingOperator(weights=w, convention=float(convention))

    @staticmethod
    def hermitian(matrix, convention: float = FOUR_PI) -> "CouplingOperator":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"coupling matrix must be square, got shape {m.shape}")
        scale = np.abs(m).max() if m.size else 0.0
        if m.size and np.abs(m - m.conj().T).max() > _HERMITICITY_RTOL * max(scale, 1.0):
            raise NonHermitianCouplingError("coupling matrix is not Hermitian to machine tolerance")
        return CouplingOperator(matrix=m, convention=float(convention))

    @property
    def is_diagonal(self) -> bool:
        return self.weights is not None

    @property
    def size(self) -> int:
        return self.weights.size if self.is_diagonal else self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        """L as a dense matrix (complex for Hermitian input, real for diagonal)."""
        if self.is_diagonal:
            return np.diag(self.weights.astype(float))
        return self.matrix.copy()

    def abs_inv_sqrt(self) -> np.ndarray:
        """Entries of |L|^(-1/2).

        Diagonal couplings give diag(1/sqrt|w_n|); full Hermitian couplings
        are handled spectrally at the truncation order. Raises
        :class:`SingularLError` when 0 is (numerically) in the spectrum of L.
        """
        if self.is_diagonal:
            return np.diag(1.0 / np.sqrt(np.abs(self.weights)))
        evals, evecs = np.linalg.eigh(self.matrix)
        if evals.size and np.abs(evals).min() <= 1e-14 * max(np.abs(evals).max(), 1.0):
            raise SingularLError("0 is in the spectrum of L; |L|^(-1/2) undefined")
        return (evecs * (1.0 / np.sqrt(np.abs(evals)))) @ evecs.conj().T

    def sign_operator(self) -> np.ndarray:
        """J_L = L |L|^(-1), the unitary sign of L (involution for invertible L)."""
        if self.is_diagonal:
            return np.diag(np.sign(self.weights))
        evals, evecs = np.linalg.eigh(self.matrix)
        if evals.size and np.abs(evals).min() <= 1e-14 * max(np.abs(evals).max(), 1.0):
            raise SingularLError("0 is in the spectrum of L; sign operator undefined")
        return (evecs * np.sign(evals)) @ evecs.conj().T


@dataclass(frozen=True)
class SeparationData:
    """Separation data of a carrier family.

    ``delta[0]`` is the distance of the first point to the origin;
    ``delta[n]`` for n >= 1 is the minimum pairwise distance among the
    first n+1 points, hence non-increasing. ``d`` is the overall minimum
    pairwise distance (None for a single point).
    """

    d: float | None
    delta: np.ndarray


@dataclass(frozen=True)
class PointConfiguration:
    """Validated carrier points with their coupling operator."""

    points: np.ndarray  # (N, 3)
    coupling: CouplingOperator
    separation: SeparationData | None = field(default=None)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def diameter(self) -> float:
        if self.n_points < 2:
            return 0.0
        diff = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())


@dataclass(frozen=True)
class SummabilityReport:
    """Partial sums of the admissibility series at increasing truncation orders."""

    orders: tuple[int, ...]
    sum_b: tuple[float, ...]
    sum_b_over_delta: tuple[float, ...] | None
    verdict: str  # "pass" | "fail" | "inconclusive"
    tail_estimate: float | None
    detail: str = ""


def build_configuration(points, coupling: CouplingOperator) -> PointConfiguration:
    """Validate points against the coupling and attach separation data.

    Raises DuplicatePointError for exactly coincident carriers and
    DimensionMismatchError when the coupling size differs from the point
    count. Near-duplicates (closer than ``NEAR_DUPLICATE_RTOL`` times the
    configuration diameter) only warn; the resulting ill-conditioning is
    reported downstream through condition numbers.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        pts = pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise DimensionMismatchError(f"points must be an (N, 3) array, got shape {pts.shape}")
    n = pts.shape[0]
    if coupling.size != n:
        raise DimensionMismatchError(
            f"coupling has size {coupling.size} but configuration has {n} points"
        )
    if n >= 2:
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        iu = np.triu_indices(n, k=1)
        pair = dist[iu]
        if np.any(pair == 0.0):
            m, k = iu[0][pair == 0.0][0], iu[1][pair == 0.0][0]
            raise DuplicatePointError(f"points {m} and {k} coincide")
        diam = pair.max()
        if diam > 0 and pair.min() < NEAR_DUPLICATE_RTOL * diam:
            warnings.warn(
                "nearly coincident carrier points; expect an ill-conditioned Q-matrix",
                stacklevel=2,
            )
    cfg = PointConfiguration(points=pts, coupling=coupling)
    sep = separation_sequence(cfg) if n >= 1 else None
    return PointConfiguration(points=pts, coupling=coupling, separation=sep)


def separation_sequence(config: PointConfiguration) -> SeparationData:
    """Separation sequence delta_n and overall minimum distance d.

    delta_0 = |x_0|; delta_n = min |x_j - x_k| over 0 <= j != k <= n.
    """
    pts = config.points
    n = pts.shape[0]
    if n == 0:
        raise EmptyConfigurationError("separation data requires at least one point")
    delta = np.empty(n)
    delta[0] = np.linalg.norm(pts[0])
    if n == 1:
        return SeparationData(d=None, delta=delta)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    running = np.inf
    for m in range(1, n):
        running = min(running, dist[m, :m].min())
        delta[m] = running
    return SeparationData(d=float(delta[-1]), delta=delta)


def check_summability(
    delta,
    weights=None,
    b_matrix=None,
    truncation_orders=None,
    finite: bool = True,
) -> SummabilityReport:
    """Assess the admissibility series sum |b_nm| and sum |b_nm| / delta_m.

    For diagonal couplings b_nm = delta_nm / sqrt|w_n|, so pass ``weights``;
    full couplings require the caller to supply the ``b_matrix`` of
    |L|^(-1/2) entries (see :meth:`CouplingOperator.abs_inv_sqrt`).

    ``finite=True`` marks a genuinely finite family, whose sums always
    converge (verdict "pass"); the 1/delta sum is then reported only when
    all delta are positive. ``finite=False`` treats the data as the
    truncation of an infinite family and applies a successive-tail ratio
    test at the given truncation orders: pass when the increments shrink
    geometrically, fail when the partial sums grow without the ratio test
    passing, inconclusive otherwise. A delta_m <= 0 inside the evaluated
    1/delta sum raises :class:`NegativeDeltaError`.
    """
    delta = np.asarray(delta, dtype=float).reshape(-1)
    if (weights is None) == (b_matrix is None):
        raise DimensionMismatchError("provide exactly one of weights / b_matrix")
    if weights is not None:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size != delta.size:
            raise DimensionMismatchError("weights and delta lengths differ")
        if np.any(w == 0.0):
            raise ZeroWeightError("zero weight in summability data")
        row_abs = 1.0 / np.sqrt(np.abs(w))  # per-index contribution to sum |b_nm|
        col_abs = row_abs  # b is diagonal
    else:
        b = np.abs(np.asarray(b_matrix, dtype=complex))
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] != delta.size:
            raise DimensionMismatchError("b_matrix must be square and match delta length")
        row_abs = b.sum(axis=0)  # sum over n of |b_nm| at fixed m
        col_abs = row_abs

    size = delta.size
    if truncation_orders is None:
        orders = [size] if finite else [max(1, (k * size) // 4) for k in (1, 2, 3, 4)]
    else:
        orders = sorted({int(k) for k in truncation_orders})
        if not orders or orders[0] < 1 or orders[-1] > size:
            raise DimensionMismatchError("truncation orders must lie in 1..len(delta)")

    sums_b = [float(row_abs[:k].sum()) for k in orders]

    evaluate_delta_sum = (not finite) or bool(np.all(delta > 0.0))
    sums_bd = None
    if evaluate_delta_sum:
        if np.any(delta[: orders[-1]] <= 0.0):
            raise NegativeDeltaError("delta_m <= 0 encountered in the 1/delta_m sum")
        sums_bd = [float((col_abs[:k] / delta[:k]).sum()) for k in orders]

    if finite:
        return SummabilityReport(
            orders=tuple(orders),
            sum_b=tuple(sums_b),
            sum_b_over_delta=tuple(sums_bd) if sums_bd is not None else None,
            verdict="pass",
            tail_estimate=0.0,
            detail="finite family; sums are finite",
        )

    verdict, tail, detail = _ratio_verdict(orders, sums_b, sums_bd)
    return SummabilityReport(
        orders=tuple(orders),
        sum_b=tuple(sums_b),
        sum_b_over_delta=tuple(sums_bd),
        verdict=verdict,
        tail_estimate=tail,
        detail=detail,
    )


def _ratio_verdict(orders, sums_b, sums_bd):
    """Successive-tail ratio test applied jointly to both partial-sum families."""
    if len(orders) < 3:
        return "inconclusive", None, "need at least 3 truncation orders for the ratio test"
    verdicts = []
    tails = []
    for sums in (sums_b, sums_bd):
        inc = np.diff(np.asarray(sums))
        scale = max(sums[-1], 1e-300)
        if np.all(inc <= 1e-15 * scale):
            verdicts.append("pass")
            tails.append(0.0)
            continue
        if np.any(inc < 0):
            verdicts.append("inconclusive")
            tails.append(None)
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = inc[1:] / inc[:-1]
        ratios = ratios[np.isfinite(ratios)]
        if ratios.size == 0:
            verdicts.append("inconclusive")
            tails.append(None)
        elif ratios.max() <= 0.9:
            r = float(ratios[-1])
            verdicts.append("pass")
            tails.append(float(inc[-1]) * r / (1.0 - r))
        elif ratios.min() >= 0.999:
            verdicts.append("fail")
            tails.append(None)
        else:
            verdicts.append("inconclusive")
            tails.append(None)
    if all(v == "pass" for v in verdicts):
        return "pass", max(t for t in tails), "increments decay geometrically in both series"
    if "fail" in verdicts:
        return "fail", None, "partial sums grow without the ratio test passing"
    return "inconclusive", None, "increment decay too slow or irregular to classify"


def lattice_line(count: int, spacing: float = 1.0, weight_law: str = "n^4"):
    """Points (n*spacing, 0, 0) for n = 1..count with weights from a power law.

    ``weight_law`` is either "n^p" (w_n = n**p, 1-based n) or a numeric
    literal for constant weights. Returns (points, weights) arrays.
    """
    if count < 1:
        raise DimensionMismatchError("lattice_line count must be >= 1")
    if spacing <= 0:
        raise DimensionMismatchError("lattice_line spacing must be positive")
    n = np.arange(1, count + 1, dtype=float)
    law = weight_law.strip()
    if law.startswith("n^"):
        try:
            p = float(law[2:])
        except ValueError as exc:
            raise DimensionMismatchError(f"bad weight law {weight_law!r}") from exc
        w = n**p
    else:
        try:
            w = np.full(count, float(law))
        except ValueError as exc:
            raise DimensionMismatchError(f"bad weight law {weight_law!r}") from exc
    pts = np.zeros((count, 3))
    pts[:, 0] = n * spacing
    return pts, w
