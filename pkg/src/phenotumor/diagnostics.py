"""Discrete versions of the functionals the a priori estimates control.

Gradient integrands are evaluated on faces (two-point differences, zero ghost
values outside the grid) and summed over axes, so in 2D the fourth-power
quantities use sum_k |d_k p|^4. Second derivatives use centred stencils at
cell centres.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .core_fields import PhenotypeMesh, SpatialGrid, fraction_densities
from .errors import DimensionError, ParameterError

P_FLOOR_REL = 1e-12
FREE_BOUNDARY_REL = 1e-6


def _pad(f: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0)] * f.ndim
    pad[axis] = (1, 1)
    return np.pad(f, pad)


def _faces(f: np.ndarray, axis: int):
    """Values left and right of every face along ``axis`` (N + 1 faces)."""
    g = _pad(f, axis)
    n = f.shape[axis]
    lo = [slice(None)] * f.ndim
    hi = [slice(None)] * f.ndim
    lo[axis] = slice(0, n + 1)
    hi[axis] = slice(1, n + 2)
    return g[tuple(lo)], g[tuple(hi)]


def face_positions(grid: SpatialGrid, axis: int = 0) -> np.ndarray:
    a, _ = grid.extents[axis]
    return a + np.arange(grid.cells[axis] + 1) * grid.h


def _window_mask(grid: SpatialGrid, axis: int, window):
    if window is None:
        return 1.0
    if grid.dim != 1:
        raise DimensionError("window restriction is only available in 1D")
    xf = face_positions(grid, axis)
    return ((xf >= window[0]) & (xf <= window[1])).astype(float)


def grad_integral(p: np.ndarray, grid: SpatialGrid, power: int = 2, window=None) -> float:
    """h^d sum over faces of |D_h p|^power."""
    total = 0.0
    for ax in range(grid.dim):
        left, right = _faces(p, ax)
        d = (right - left) / grid.h
        total += float(np.sum(np.abs(d) ** power * _window_mask(grid, ax, window)))
    return grid.cell_volume * total


def _weighted_faces(p, grid, power, exponent, p_floor, window):
    total = 0.0
    for ax in range(grid.dim):
        left, right = _faces(p, ax)
        d = (right - left) / grid.h
        pbar = np.maximum(0.5 * (left + right), p_floor)
        total += float(np.sum(np.abs(d) ** power / pbar ** exponent * _window_mask(grid, ax, window)))
    return grid.cell_volume * total


def entropy_dissipation(rho: np.ndarray, gamma: float, grid: SpatialGrid, window=None) -> float:
    """4 gamma/(gamma+1)^2 * integral of |grad rho^((gamma+1)/2)|^2."""
    rho = np.asarray(rho, dtype=float)
    q = rho ** ((gamma + 1.0) / 2.0)
    return 4.0 * gamma / (gamma + 1.0) ** 2 * grad_integral(q, grid, 2, window)


def ab_weighted_grad(p: np.ndarray, gamma: float, grid: SpatialGrid, p_M: float = 1.0, window=None) -> float:
    """(1/gamma) * integral of |grad p|^2 / p^(1 - 1/gamma), face means floored."""
    p = np.asarray(p, dtype=float)
    return _weighted_faces(p, grid, 2, 1.0 - 1.0 / gamma, P_FLOOR_REL * p_M, window) / gamma


def kappa(alpha: float, gamma: float) -> float:
    """Coefficient alpha/6 * (1 - alpha*gamma) of the weighted L4 estimate."""
    return alpha / 6.0 * (1.0 - alpha * gamma)


def weighted_grad4(p: np.ndarray, alpha: float, gamma: float, grid: SpatialGrid,
                   p_M: float = 1.0) -> tuple[float, float]:
    """(integral of |grad p|^4 / p^(1-alpha), kappa(alpha)); requires 0 <= alpha < 1/gamma."""
    if not 0.0 <= alpha < 1.0 / gamma:
        raise ParameterError(f"alpha must lie in [0, 1/gamma) = [0, {1.0 / gamma:g}), got {alpha}")
    value = _weighted_faces(np.asarray(p, dtype=float), grid, 4, 1.0 - alpha, P_FLOOR_REL * p_M, None)
    return value, kappa(alpha, gamma)


def weighted_grad4_raw(p, alpha, grid, p_M=1.0) -> float:
    """Same integral without the admissibility check on alpha."""
    return _weighted_faces(np.asarray(p, dtype=float), grid, 4, 1.0 - alpha, P_FLOOR_REL * p_M, None)


def laplacian(f: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Five-point (three-point in 1D) Laplacian with zero ghost values."""
    out = np.zeros_like(f, dtype=float)
    for ax in range(grid.dim):
        g = _pad(f, ax)
        n = f.shape[ax]
        sl = lambda a, b: tuple(slice(a, b) if k == ax else slice(None) for k in range(f.ndim))  # noqa: E731
        out += (g[sl(2, n + 2)] - 2.0 * g[sl(1, n + 1)] + g[sl(0, n)]) / grid.h ** 2
    return out


def hessian_squared(p: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """sum_{k,l} (d_k d_l p)^2 at cell centres."""
    p = np.asarray(p, dtype=float)
    h = grid.h
    total = np.zeros_like(p)
    second = []
    for ax in range(grid.dim):
        g = _pad(p, ax)
        n = p.shape[ax]
        sl = lambda a, b: tuple(slice(a, b) if k == ax else slice(None) for k in range(p.ndim))  # noqa: E731
        second.append((g[sl(2, n + 2)] - 2.0 * g[sl(1, n + 1)] + g[sl(0, n)]) / h ** 2)
    for d2 in second:
        total += d2 ** 2
    if grid.dim == 2:
        g = np.pad(p, 1)
        pxy = (g[2:, 2:] - g[2:, :-2] - g[:-2, 2:] + g[:-2, :-2]) / (4.0 * h * h)
        total += 2.0 * pxy ** 2
    return total


def central_gradient_sq(p: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    total = np.zeros_like(p, dtype=float)
    for ax in range(grid.dim):
        g = _pad(p, ax)
        n = p.shape[ax]
        sl = lambda a, b: tuple(slice(a, b) if k == ax else slice(None) for k in range(p.ndim))  # noqa: E731
        total += ((g[sl(2, n + 2)] - g[sl(0, n)]) / (2.0 * grid.h)) ** 2
    return total


def hessian_weighted(p: np.ndarray, grid: SpatialGrid) -> tuple[float, float]:
    """(integral of p |D^2 p|^2, integral of |grad p|^4), both by cell quadrature."""
    p = np.asarray(p, dtype=float)
    return (grid.integrate(p * hessian_squared(p, grid)),
            grid.integrate(central_gradient_sq(p, grid) ** 2))


def hessian_weighted_interior(p: np.ndarray, grid: SpatialGrid) -> float:
    return grid.integrate(np.asarray(p) * hessian_squared(p, grid))


def saturation_residual(p: np.ndarray, rho: np.ndarray, grid: SpatialGrid) -> float:
    """integral of |p (1 - rho)|."""
    return grid.integrate(np.abs(np.asarray(p) * (1.0 - np.asarray(rho))))


def complementarity_residual(p: np.ndarray, growth: np.ndarray, grid: SpatialGrid) -> float:
    """integral of |p (Delta_h p + growth)|; growth is the trait integral of the reaction term."""
    p = np.asarray(p, dtype=float)
    return grid.integrate(np.abs(p * (laplacian(p, grid) + np.asarray(growth))))


def laplacian_weighted(p: np.ndarray, mean_rate: np.ndarray, grid: SpatialGrid) -> float:
    """integral of p (Delta_h p + mean growth rate)^2 (recorded, not bounded by any criterion)."""
    p = np.asarray(p, dtype=float)
    return grid.integrate(p * (laplacian(p, grid) + np.asarray(mean_rate)) ** 2)


def free_boundary(p: np.ndarray, grid: SpatialGrid, threshold: float | None = None, p_M: float = 1.0):
    """Sorted crossing points of p = threshold (1D) or the indicator of {p > threshold} (2D)."""
    thr = FREE_BOUNDARY_REL * p_M if threshold is None else threshold
    p = np.asarray(p, dtype=float)
    if grid.dim != 1:
        return p > thr
    x = np.concatenate(([grid.x[0] - grid.h], grid.x, [grid.x[-1] + grid.h]))
    f = np.concatenate(([0.0], p, [0.0])) - thr
    out = []
    for i in range(f.size - 1):
        a, b = f[i], f[i + 1]
        if (a < 0) != (b < 0):
            out.append(x[i] + (x[i + 1] - x[i]) * a / (a - b))
    return np.array(sorted(out))


def basic_norms(rho: np.ndarray, sigma: np.ndarray, grid: SpatialGrid):
    """(mass, sup rho, second moment, sup sigma)."""
    rho = np.asarray(rho, dtype=float)
    return (grid.integrate(rho),
            float(np.max(rho)) if rho.size else 0.0,
            grid.integrate(rho * grid.radius_squared()),
            float(np.max(sigma)) if np.size(sigma) else 0.0)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    sup_rho: float
    second_moment: float
    grad_p_l2: float
    grad_p_l4: float
    entropy_dissipation: float
    ab_weighted: float
    hessian_weighted: float
    laplacian_weighted: float
    saturation_residual: float
    complementarity_residual: float
    sigma_sup: float
    weighted_grad4: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        names = [f.name for f in fields(self) if f.name != "weighted_grad4"]
        return names + [f"weighted_grad4_a{a:g}" for a in sorted(self.weighted_grad4)]

    def values(self) -> list[float]:
        d = asdict(self)
        wg = d.pop("weighted_grad4")
        return list(d.values()) + [wg[a] for a in sorted(wg)]


def evaluate(t, n, rho, p, reaction_term, mean_rate, grid: SpatialGrid, mesh: PhenotypeMesh,
             gamma: float, p_M: float = 1.0, alphas=(0.1, 0.25, 0.4)) -> DiagnosticsRecord:
    """All diagnostics of one state. ``reaction_term`` is the per-layer reaction (shape of n)."""
    sigma = fraction_densities(n, rho, 1e-14 * p_M ** (1.0 / gamma))
    mass, sup_rho, m2, s_sup = basic_norms(rho, sigma, grid)
    growth = mesh.integrate(reaction_term)
    return DiagnosticsRecord(
        t=float(t),
        mass=mass,
        sup_rho=sup_rho,
        second_moment=m2,
        grad_p_l2=grad_integral(p, grid, 2),
        grad_p_l4=grad_integral(p, grid, 4),
        entropy_dissipation=entropy_dissipation(rho, gamma, grid),
        ab_weighted=ab_weighted_grad(p, gamma, grid, p_M),
        hessian_weighted=hessian_weighted_interior(p, grid),
        laplacian_weighted=laplacian_weighted(p, mean_rate, grid),
        saturation_residual=saturation_residual(p, rho, grid),
        complementarity_residual=complementarity_residual(p, growth, grid),
        sigma_sup=s_sup,
        weighted_grad4={float(a): weighted_grad4_raw(p, a, grid, p_M) for a in alphas},
    )
