"""Grids, trait quadrature and the pointwise maps between n, rho, p, v and sigma.

Fields are plain numpy arrays. A population field has shape ``(N_y, *cells)``
(one layer per trait node), scalar fields have shape ``cells``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParameterError

# sigma is set to zero where rho <= RHO_FLOOR_REL * rho_M
RHO_FLOOR_REL = 1e-14


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cell-centred mesh on a box, Dirichlet-zero ghost layer on every side.

    All axes share the same spacing ``h``.
    """

    extents: tuple[tuple[float, float], ...]
    cells: tuple[int, ...]
    h: float = field(init=False)

    def __post_init__(self):
        extents = tuple((float(a), float(b)) for a, b in self.extents)
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        if len(extents) not in (1, 2) or len(cells) != len(extents):
            raise ParameterError("grid must be 1D or 2D with one cell count per axis")
        spacings = []
        for (a, b), nc in zip(extents, cells):
            if nc < 4:
                raise ParameterError(f"need at least 4 cells per axis, got {nc}")
            if not b > a:
                raise ParameterError(f"empty axis extent [{a}, {b}]")
            spacings.append((b - a) / nc)
        if not np.allclose(spacings, spacings[0], rtol=1e-12, atol=0.0):
            raise ParameterError(f"axes must share one spacing, got {spacings}")
        object.__setattr__(self, "h", spacings[0])

    @classmethod
    def line(cls, x_min: float, x_max: float, n_cells: int) -> "SpatialGrid":
        return cls(((x_min, x_max),), (n_cells,))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    def axis_centers(self, axis: int = 0) -> np.ndarray:
        a, _ = self.extents[axis]
        return a + (np.arange(self.cells[axis]) + 0.5) * self.h

    @property
    def x(self) -> np.ndarray:
        """Cell centres of a 1D grid."""
        if self.dim != 1:
            raise DimensionError("x is only defined for 1D grids; use coordinates()")
        return self.axis_centers(0)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis_centers(k) for k in range(self.dim)), indexing="ij"))

    def radius_squared(self) -> np.ndarray:
        """|x|^2 at every cell centre."""
        return sum(c * c for c in self.coordinates())

    def integrate(self, f: np.ndarray) -> float:
        return float(self.cell_volume * np.sum(f))


@dataclass(frozen=True)
class PhenotypeMesh:
    """Midpoint quadrature on the trait interval [0, 1]."""

    n_nodes: int

    def __post_init__(self):
        if int(self.n_nodes) < 1:
            raise ParameterError("phenotype mesh needs at least one node")

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n_nodes) + 0.5) / self.n_nodes

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n_nodes, 1.0 / self.n_nodes)

    def integrate(self, layers: np.ndarray) -> np.ndarray:
        """Quadrature over the leading (trait) axis."""
        layers = np.asarray(layers, dtype=float)
        if layers.shape[0] != self.n_nodes:
            raise DimensionError(
                f"expected {self.n_nodes} trait layers, got leading dimension {layers.shape[0]}"
            )
        # equal weights: one division after a fixed-order sum
        acc = layers[0].copy()
        for j in range(1, self.n_nodes):
            acc += layers[j]
        return acc / self.n_nodes


def _check_gamma(gamma: float, allow_unit: bool) -> float:
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 1.0 or (gamma == 1.0 and not allow_unit):
        raise ParameterError(f"pressure exponent must satisfy gamma > 1, got {gamma}")
    return gamma


def total_density(n: np.ndarray, mesh: PhenotypeMesh, grid: SpatialGrid | None = None) -> np.ndarray:
    """rho = sum_j w_j n_j."""
    n = np.asarray(n, dtype=float)
    if grid is not None and n.shape[1:] != grid.shape:
        raise DimensionError(f"population shape {n.shape[1:]} does not match grid {grid.shape}")
    return mesh.integrate(n)


def pressure(rho: np.ndarray, gamma: float, *, allow_unit: bool = False) -> np.ndarray:
    """Power-law pressure p = rho**gamma.

    ``allow_unit`` admits gamma == 1 (linear pressure), used only by the
    space-homogeneous logistic check.
    """
    gamma = _check_gamma(gamma, allow_unit)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("density must be nonnegative")
    return rho ** gamma


def v_field(rho: np.ndarray, gamma: float, *, allow_unit: bool = False) -> np.ndarray:
    """v = rho**(gamma + 1), formed as rho * p so that v == rho * pressure(rho)."""
    gamma = _check_gamma(gamma, allow_unit)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise DomainError("density must be nonnegative")
    return rho * rho ** gamma


def fraction_densities(n: np.ndarray, rho: np.ndarray, rho_floor: float = RHO_FLOOR_REL) -> np.ndarray:
    """sigma_j = n_j / rho where rho > rho_floor, zero elsewhere."""
    n = np.asarray(n, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if n.shape[1:] != rho.shape:
        raise DimensionError(f"population shape {n.shape[1:]} does not match density {rho.shape}")
    occupied = rho > rho_floor
    safe = np.where(occupied, rho, 1.0)
    return np.where(occupied, n / safe, 0.0)


def uniform_population(profile: np.ndarray, mesh: PhenotypeMesh) -> np.ndarray:
    """Population whose trait composition is uniform: n_j = rho for every node."""
    profile = np.asarray(profile, dtype=float)
    return np.broadcast_to(profile, (mesh.n_nodes,) + profile.shape).copy()


def check_population(n: np.ndarray, grid: SpatialGrid, mesh: PhenotypeMesh) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    expected: Sequence[int] = (mesh.n_nodes,) + grid.shape
    if n.shape != tuple(expected):
        raise DimensionError(f"population shape {n.shape} != {tuple(expected)}")
    return n
