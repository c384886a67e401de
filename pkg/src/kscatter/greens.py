"""Free-space Green function of the 3D Laplacian resolvent and its Q-matrix.

The kernel of (-Laplacian - z)^(-1) is g(z; r) = exp(i sqrt(z) r) / (4 pi r)
with the square-root branch fixed by Im sqrt(z) > 0. Spectral parameters are
either interior points of the resolvent set (off the nonnegative real axis)
or boundary values lambda + i0 on the positive axis, where sqrt becomes the
nonnegative real root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import FOUR_PI, PointConfiguration
from .errors import (
    BoundaryEnergyError,
    CoincidentSpectralPointsError,
    EmptyConfigurationError,
    NonpositiveEnergyError,
    ZeroDistanceError,
)


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter z with its branch-resolved square root.

    Interior points satisfy Im sqrt(z) > 0 strictly (this admits the negative
    real axis, which lies in the resolvent set). Boundary points represent
    lambda + i0 with lambda > 0 and carry the real root sqrt(lambda) >= 0.
    """

    z: complex
    sqrt_z: complex
    boundary: bool = False

    @staticmethod
    def interior(z) -> "SpectralPoint":
        z = complex(z)
        if z.imag == 0.0:
            if z.real >= 0.0:
                raise BoundaryEnergyError(
                    "z on the nonnegative real axis is not an interior spectral point"
                )
            z = complex(z.real, 0.0)  # normalize -0.0 imaginary parts
        s = np.sqrt(complex(z))
        if s.imag <= 0.0:
            s = -s
        return SpectralPoint(z=z, sqrt_z=complex(s), boundary=False)

    @staticmethod
    def boundary_plus(lam: float) -> "SpectralPoint":
        lam = float(lam)
        if lam <= 0.0:
            raise NonpositiveEnergyError(f"boundary value requires lambda > 0, got {lam}")
        return SpectralPoint(z=complex(lam), sqrt_z=complex(np.sqrt(lam)), boundary=True)

    def conjugate(self) -> "SpectralPoint":
        if self.boundary:
            raise BoundaryEnergyError("lambda - i0 boundary values are not represented")
        return SpectralPoint.interior(np.conj(self.z))


@dataclass(frozen=True)
class QMatrix:
    """Matrix of Green-function values between carrier points.

    Symmetric (not Hermitian) by construction: entries depend only on the
    pairwise distances, with the regularized diagonal i sqrt(z) / (4 pi).
    """

    z: SpectralPoint
    entries: np.ndarray

    def herglotz_part(self) -> np.ndarray:
        """(Q(z) - Q(z)^H) / (2i), positive semidefinite for Im z > 0."""
        q = self.entries
        return (q - q.conj().T) / 2j


def free_green(z: SpectralPoint, r: float) -> complex:
    """g(z; r) = exp(i sqrt(z) r) / (4 pi r) for r > 0."""
    if r <= 0.0:
        raise ZeroDistanceError("free Green function is singular at zero distance")
    return complex(np.exp(1j * z.sqrt_z * r) / (FOUR_PI * r))


def q_matrix(z: SpectralPoint, config: PointConfiguration) -> QMatrix:
    """Q(z) of a configuration: off-diagonal g(z; |x_m - x_n|), diagonal i sqrt(z)/(4 pi)."""
    pts = config.points
    n = pts.shape[0]
    if n == 0:
        raise EmptyConfigurationError("Q-matrix requires at least one point")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] == 0.0):
        raise ZeroDistanceError("coincident carrier points give a singular Q-matrix entry")
    entries = np.zeros((n, n), dtype=complex)
    entries[off] = np.exp(1j * z.sqrt_z * dist[off]) / (FOUR_PI * dist[off])
    entries[np.diag_indices(n)] = 1j * z.sqrt_z / FOUR_PI
    return QMatrix(z=z, entries=entries)


def overlap_oracle(z: SpectralPoint, z0: SpectralPoint, x_m, x_n) -> complex:
    """Closed form of the Green-column overlap (Q(z) - Q(z0)) / (z - z0) entry.

    For distinct carriers this is (g(z; r) - g(z0; r)) / (z - z0); for a
    coincident pair the difference quotient of the regularized diagonal,
    i / (4 pi (sqrt(z) + sqrt(z0))).
    """
    _require_distinct(z, z0)
    r = float(np.linalg.norm(np.asarray(x_m, dtype=float) - np.asarray(x_n, dtype=float)))
    if r == 0.0:
        return complex(1j / (FOUR_PI * (z.sqrt_z + z0.sqrt_z)))
    return complex((free_green(z, r) - free_green(z0, r)) / (z.z - z0.z))


def overlap_numeric(
    z: SpectralPoint,
    z0: SpectralPoint,
    x_m,
    x_n,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> complex:
    """Overlap integral of two Green columns by real-space quadrature.

    Computes the volume integral of conj(g(conj(z0); x - x_m)) g(z; x - x_n)
    in spherical coordinates about the midpoint of the carriers, exploiting
    axial symmetry to reduce to a radial-angular double integral. The radial
    range is truncated where the exponential envelope
    exp(-(Im sqrt(z) + Im sqrt(z0)) rho) drops below 1e-14. Cross-validates
    :func:`overlap_oracle`; both spectral points must be interior.
    """
    _require_distinct(z, z0)
    if z.boundary or z0.boundary:
        raise BoundaryEnergyError("numeric overlap integration requires interior points")
    xm = np.asarray(x_m, dtype=float)
    xn = np.asarray(x_n, dtype=float)
    a = 0.5 * float(np.linalg.norm(xm - xn))  # half separation
    decay = z.sqrt_z.imag + z0.sqrt_z.imag
    rho_max = 14.0 * np.log(10.0) / decay + a + 2.0

    s, s0 = z.sqrt_z, z0.sqrt_z

    def angular(rho: float) -> complex:
        # conj(g(conj(z0); r)) = g(z0; r), so the integrand is g(z0; R_m) g(z; R_n)
        def u_int(u: float) -> complex:
            rm = np.sqrt(rho * rho + a * a + 2.0 * rho * a * u)
            rn = np.sqrt(rho * rho + a * a - 2.0 * rho * a * u)
            return (
                np.exp(1j * (s0 * rm + s * rn))
                / (FOUR_PI * FOUR_PI * max(rm, 1e-300) * max(rn, 1e-300))
            )

        re = integrate.quad(lambda u: u_int(u).real, -1.0, 1.0, epsabs=atol, epsrel=rtol, limit=200)[0]
        im = integrate.quad(lambda u: u_int(u).imag, -1.0, 1.0, epsabs=atol, epsrel=rtol, limit=200)[0]
        return complex(re, im)

    def radial(part) -> float:
        fn = lambda rho: part(2.0 * np.pi * rho * rho * angular(rho))
        pieces = [(0.0, a), (a, rho_max)] if a > 0.0 else [(0.0, rho_max)]
        return sum(
            integrate.quad(fn, lo, hi, epsabs=atol, epsrel=rtol, limit=300)[0]
            for lo, hi in pieces
        )

    return complex(radial(lambda v: v.real), radial(lambda v: v.imag))


def _require_distinct(z: SpectralPoint, z0: SpectralPoint) -> None:
    if z.z == z0.z:
        raise CoincidentSpectralPointsError("overlap requires z != z0")
