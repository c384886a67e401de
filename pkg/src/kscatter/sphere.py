"""Quadrature grids on the unit sphere closed under the antipodal map.

Product rule: Gauss-Legendre nodes in cos(theta) times uniform nodes in phi.
The node set is mirrored explicitly so that node[antipode[i]] == -node[i]
holds exactly in floating point, which the antiunitary conjugation operator
relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError, OddPhiCountError


@dataclass(frozen=True, eq=False)
class SphereGrid:
    nodes: np.ndarray  # (M, 3) unit vectors
    weights: np.ndarray  # (M,) positive, summing to 4 pi
    antipode: np.ndarray  # (M,) index permutation, an involution
    n_theta: int
    n_phi: int

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


def make_grid(n_theta: int, n_phi: int) -> SphereGrid:
    """Product Gauss-Legendre x trapezoid grid with exact antipodal pairing.

    ``n_phi`` must be even so that phi -> phi + pi is an index shift.
    """
    n_theta = int(n_theta)
    n_phi = int(n_phi)
    if n_theta < 2:
        raise OddPhiCountError(f"n_theta must be >= 2, got {n_theta}")
    if n_phi < 4 or n_phi % 2 != 0:
        raise OddPhiCountError(f"n_phi must be an even integer >= 4, got {n_phi}")

    mu, w_theta = np.polynomial.legendre.leggauss(n_theta)
    # enforce exact +/- symmetry of the Legendre nodes and weights
    mu = 0.5 * (mu - mu[::-1])
    w_theta = 0.5 * (w_theta + w_theta[::-1])
    sin_theta = np.sqrt(1.0 - mu * mu)

    half = n_phi // 2
    phi = 2.0 * np.pi * np.arange(half) / n_phi
    cos_phi = np.empty(n_phi)
    sin_phi = np.empty(n_phi)
    cos_phi[:half] = np.cos(phi)
    sin_phi[:half] = np.sin(phi)
    cos_phi[half:] = -cos_phi[:half]
    sin_phi[half:] = -sin_phi[:half]

    nodes = np.empty((n_theta * n_phi, 3))
    weights = np.empty(n_theta * n_phi)
    antipode = np.empty(n_theta * n_phi, dtype=np.intp)
    w_phi = 2.0 * np.pi / n_phi
    for k in range(n_theta):
        base = k * n_phi
        nodes[base : base + n_phi, 0] = sin_theta[k] * cos_phi
        nodes[base : base + n_phi, 1] = sin_theta[k] * sin_phi
        nodes[base : base + n_phi, 2] = mu[k]
        weights[base : base + n_phi] = w_theta[k] * w_phi
        k_mirror = n_theta - 1 - k
        j = np.arange(n_phi)
        antipode[base + j] = k_mirror * n_phi + (j + half) % n_phi
    return SphereGrid(nodes=nodes, weights=weights, antipode=antipode, n_theta=n_theta, n_phi=n_phi)


def inner_product(f: np.ndarray, g: np.ndarray, grid: SphereGrid) -> complex:
    """Discrete L2(S2) pairing sum_i w_i f_i conj(g_i)."""
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (grid.size,) or g.shape != (grid.size,):
        raise LengthMismatchError("sphere function length does not match grid")
    return complex(np.sum(grid.weights * f * np.conj(g)))


def j_conjugate(values: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Antipodal conjugation (Jw)(n) = conj(w(-n)), realized by index permutation."""
    values = np.asarray(values)
    if values.shape != (grid.size,):
        raise LengthMismatchError("sphere function length does not match grid")
    return np.conj(values[grid.antipode])


def default_resolution(lam: float, diameter: float) -> tuple[int, int]:
    """Resolution rule for plane-wave bandwidth sqrt(lambda) * diameter.

    Returns (n_theta, n_phi) with n_theta >= max(8, ceil(sqrt(lambda) D) + 8)
    and n_phi = 2 n_theta, enough for the quadrature Gram matrix to match its
    analytic counterpart to ~1e-10.
    """
    bandwidth = math.sqrt(max(lam, 0.0)) * max(diameter, 0.0)
    n_theta = max(8, int(math.ceil(bandwidth)) + 8)
    return n_theta, 2 * n_theta


def grid_for(lam: float, diameter: float) -> SphereGrid:
    """Grid at the default resolution for the given energy and configuration size."""
    n_theta, n_phi = default_resolution(lam, diameter)
    return make_grid(n_theta, n_phi)
