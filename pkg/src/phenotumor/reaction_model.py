"""Growth-rate families R(y, p), their admissibility check, and initial data.

Two families are supported:

* ``linear_inhibition``: R(y, p) = (g0 + g1*y) * (1 - p/p_M)
* ``custom_tabulated``: samples R(y_k, p_l) on a lattice, bilinear in (y, p),
  extrapolated linearly in p beyond the last sample.

An optional trait-mixing kernel K(eta, y, p) replaces the diagonal term
n(y) R(y, p) by the integral of n(eta) K(eta, y, p) over eta.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core_fields import (
    PhenotypeMesh,
    SpatialGrid,
    fraction_densities,
    total_density,
)
from .errors import DimensionError, DomainError, ModeError, ParameterError

N_PRESSURE_SAMPLES = 64
N_TRAIT_SAMPLES = 65


@dataclass(frozen=True)
class ReactionSpec:
    family: str = "linear_inhibition"
    g0: float = 1.0
    g1: float = 0.0
    p_M: float = 1.0
    table_y: np.ndarray | None = None
    table_p: np.ndarray | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in ("linear_inhibition", "custom_tabulated"):
            raise ParameterError(f"unknown reaction family {self.family!r}")
        if not self.p_M > 0:
            raise ParameterError(f"homeostatic pressure must be positive, got {self.p_M}")
        if self.family == "custom_tabulated":
            if self.table is None or self.table_y is None or self.table_p is None:
                raise ParameterError("custom_tabulated needs table_y, table_p and table")
            ty = np.asarray(self.table_y, dtype=float)
            tp = np.asarray(self.table_p, dtype=float)
            tab = np.asarray(self.table, dtype=float)
            if tab.shape != (ty.size, tp.size):
                raise DimensionError(f"table shape {tab.shape} != ({ty.size}, {tp.size})")
            if tp.size < 2 or np.any(np.diff(tp) <= 0) or tp[0] != 0.0:
                raise ParameterError("table pressures must start at 0 and increase strictly")
            if ty.size > 1 and np.any(np.diff(ty) <= 0):
                raise ParameterError("table traits must increase strictly")
            if not np.all(np.isfinite(tab)):
                raise ParameterError("table entries must be finite")
            object.__setattr__(self, "table_y", ty)
            object.__setattr__(self, "table_p", tp)
            object.__setattr__(self, "table", tab)

    @classmethod
    def linear(cls, g0: float = 1.0, g1: float = 0.0, p_M: float = 1.0) -> "ReactionSpec":
        return cls("linear_inhibition", g0=float(g0), g1=float(g1), p_M=float(p_M))

    @classmethod
    def zero(cls, p_M: float = 1.0) -> "ReactionSpec":
        """R == 0. Fails validation by design; ``solver.run`` skips that check for it."""
        return cls.linear(0.0, 0.0, p_M)

    @classmethod
    def tabulated(cls, y, p, values, p_M: float) -> "ReactionSpec":
        return cls("custom_tabulated", p_M=float(p_M), table_y=y, table_p=p, table=values)

    @property
    def is_zero(self) -> bool:
        if self.family == "linear_inhibition":
            return self.g0 == 0.0 and self.g1 == 0.0
        return not np.any(self.table)

    @property
    def sup_norm(self) -> float:
        """||R||_inf = sup_y R(y, 0)."""
        if self.family == "linear_inhibition":
            return float(max(self.g0, self.g0 + self.g1))
        return float(np.max(self.table[:, 0]))

    def trait_independent(self) -> bool:
        if self.family == "linear_inhibition":
            return self.g1 == 0.0
        return bool(np.all(self.table == self.table[0]))

    def _growth(self, y):
        return self.g0 + self.g1 * np.asarray(y, dtype=float)

    def _interp_p(self, p):
        """Rows of the table evaluated at pressures p: shape (len(table_y), *p.shape)."""
        tp = self.table_p
        p = np.asarray(p, dtype=float)
        idx = np.clip(np.searchsorted(tp, p, side="right") - 1, 0, tp.size - 2)
        theta = (p - tp[idx]) / (tp[idx + 1] - tp[idx])
        lo = self.table[:, idx]
        hi = self.table[:, idx + 1]
        return lo + theta * (hi - lo)

    def _interp_y(self, rows, y):
        ty = self.table_y
        y = np.asarray(y, dtype=float)
        if ty.size == 1:
            return np.broadcast_to(rows[0], y.shape + rows.shape[1:]).copy()
        k = np.clip(np.searchsorted(ty, y, side="right") - 1, 0, ty.size - 2)
        s = np.clip((y - ty[k]) / (ty[k + 1] - ty[k]), 0.0, 1.0)
        s = s.reshape(s.shape + (1,) * (rows.ndim - 1))
        return rows[k] + s * (rows[k + 1] - rows[k])

    def rates(self, y_nodes, p) -> np.ndarray:
        """R(y_j, p_i) on every (trait node, cell) pair; shape (len(y_nodes), *p.shape)."""
        y_nodes = np.atleast_1d(np.asarray(y_nodes, dtype=float))
        p = np.asarray(p, dtype=float)
        if self.family == "linear_inhibition":
            g = self._growth(y_nodes).reshape((-1,) + (1,) * p.ndim)
            return g * (1.0 - p / self.p_M)
        rows = self._interp_p(p)
        if self.table_y.size == y_nodes.size and np.array_equal(self.table_y, y_nodes):
            return rows
        return self._interp_y(rows, y_nodes)


def reaction_rate(y: float, p: float, spec: ReactionSpec) -> float:
    """Pointwise R(y, p)."""
    if p < 0:
        raise DomainError(f"pressure must be nonnegative, got {p}")
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"trait must lie in [0, 1], got {y}")
    return float(spec.rates([y], np.asarray(float(p)))[0])


@dataclass
class Violation:
    condition: str
    y: float
    p: float
    value: float


@dataclass
class ValidationReport:
    ok: bool
    sup_norm: float
    violations: list[Violation] = field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return f"reaction admissible (||R||_inf = {self.sup_norm:g})"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  {v.condition} at y={v.y:g}, p={v.p:g} (value {v.value:g})" for v in self.violations[:10]]
        return "\n".join(lines)


def validate_reaction(spec: ReactionSpec, n_p: int = N_PRESSURE_SAMPLES) -> ValidationReport:
    """Check R(., 0) > 0, R(., p_M) <= 0 and p -> R nonincreasing on a sample lattice."""
    if spec.family == "linear_inhibition":
        ys = np.linspace(0.0, 1.0, N_TRAIT_SAMPLES)
        ps = np.linspace(0.0, spec.p_M, n_p)
    else:
        ys = spec.table_y
        ps = np.union1d(np.linspace(0.0, spec.p_M, n_p), spec.table_p[spec.table_p <= spec.p_M])
    vals = spec.rates(ys, ps)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    violations = []
    for k, y in enumerate(ys):
        if not vals[k, 0] > 0:
            violations.append(Violation("R(y,0) > 0", float(y), 0.0, float(vals[k, 0])))
        if not vals[k, -1] <= 0:
            violations.append(Violation("R(y,p_M) <= 0", float(y), float(ps[-1]), float(vals[k, -1])))
        inc = np.diff(vals[k]) > 1e-12 * scale
        for l in np.flatnonzero(inc):
            violations.append(
                Violation("dR/dp <= 0", float(y), float(ps[l + 1]), float(vals[k, l + 1] - vals[k, l]))
            )
    if spec.family == "custom_tabulated":
        tab_inc = np.diff(spec.table, axis=1) > 1e-12 * scale
        for k, l in zip(*np.nonzero(tab_inc)):
            v = Violation("dR/dp <= 0", float(spec.table_y[k]), float(spec.table_p[l + 1]),
                          float(spec.table[k, l + 1] - spec.table[k, l]))
            if v not in violations:
                violations.append(v)
    return ValidationReport(ok=not violations, sup_norm=spec.sup_norm, violations=violations)


def mean_reaction(sigma: np.ndarray, p: np.ndarray, mesh: PhenotypeMesh, spec: ReactionSpec) -> np.ndarray:
    """Trait-averaged growth rate sum_j w_j sigma_j R(y_j, p)."""
    sigma = np.asarray(sigma, dtype=float)
    p = np.asarray(p, dtype=float)
    if sigma.shape != (mesh.n_nodes,) + p.shape:
        raise DimensionError(f"sigma shape {sigma.shape} incompatible with p {p.shape}")
    return mesh.integrate(sigma * spec.rates(mesh.nodes, p))


def read_tabulated_csv(path, p_M: float) -> ReactionSpec:
    """Read R(y, p) samples: header row holds pressures, first column traits."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if len(rows) < 2:
        raise ParameterError(f"{path}: need a header row and at least one trait row")
    try:
        ps = np.array([float(c) for c in rows[0][1:]])
        ys = np.array([float(r[0]) for r in rows[1:]])
        vals = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise ParameterError(f"{path}: non-numeric entry ({exc})") from exc
    return ReactionSpec.tabulated(ys, ps, vals, p_M)


@dataclass(frozen=True)
class MutationKernel:
    """K(eta_k, y_j, p) sampled at pressures ``p_samples``; values shape (N_y, N_y, n_p)."""

    p_samples: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ps = np.asarray(self.p_samples, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 3 or vals.shape[0] != vals.shape[1] or vals.shape[2] != ps.size:
            raise DimensionError(f"kernel values shape {vals.shape} incompatible with {ps.size} pressures")
        if ps.size < 2 or np.any(np.diff(ps) <= 0):
            raise ParameterError("kernel pressures must increase strictly")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("kernel values must be finite")
        object.__setattr__(self, "p_samples", ps)
        object.__setattr__(self, "values", vals)

    @property
    def n_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values, axis=2) <= 1e-12 * max(self.sup_norm, 1.0)))

    def at(self, p: np.ndarray) -> np.ndarray:
        """K(eta_k, y_j, p_i); shape (N_y, N_y, *p.shape)."""
        ps = self.p_samples
        p = np.asarray(p, dtype=float)
        idx = np.clip(np.searchsorted(ps, p, side="right") - 1, 0, ps.size - 2)
        theta = (p - ps[idx]) / (ps[idx + 1] - ps[idx])
        lo = self.values[:, :, idx]
        return lo + theta * (self.values[:, :, idx + 1] - lo)

    @classmethod
    def diagonal(cls, spec: ReactionSpec, mesh: PhenotypeMesh, p_samples) -> "MutationKernel":
        """Kernel concentrated on eta == y, scaled by 1/w so that it reproduces n R(y, p)."""
        p_samples = np.asarray(p_samples, dtype=float)
        rates = spec.rates(mesh.nodes, p_samples)
        vals = np.zeros((mesh.n_nodes, mesh.n_nodes, p_samples.size))
        for j in range(mesh.n_nodes):
            vals[j, j] = rates[j] / mesh.weights[j]
        return cls(p_samples, vals)

    @classmethod
    def constant(cls, c: float, mesh: PhenotypeMesh, p_max: float = 1.0) -> "MutationKernel":
        return cls(np.array([0.0, p_max]), np.full((mesh.n_nodes, mesh.n_nodes, 2), float(c)))


def mutation_reaction(n: np.ndarray, p: np.ndarray, kernel: MutationKernel | None,
                      mesh: PhenotypeMesh) -> np.ndarray:
    """out_j = sum_k w_k n_k K(eta_k, y_j, p)."""
    if kernel is None:
        raise ModeError("mutation mode requested but no kernel is configured")
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    if kernel.n_nodes != mesh.n_nodes or n.shape != (mesh.n_nodes,) + p.shape:
        raise DimensionError("population, pressure and kernel shapes disagree")
    kp = kernel.at(p)
    w = mesh.weights
    out = np.zeros_like(n)
    for k in range(mesh.n_nodes):
        out += (w[k] * n[k]) * kp[k]
    return out


# --- initial data ----------------------------------------------------------

@dataclass
class InitialData:
    n0: np.ndarray
    provenance: str = "analytic"


def box_profile(grid: SpatialGrid, half_width: float, level: float, center: float = 0.0) -> np.ndarray:
    """level on the box max_k |x_k - center| <= half_width, zero elsewhere."""
    mask = np.ones(grid.shape, dtype=bool)
    for c in grid.coordinates():
        mask &= np.abs(c - center) <= half_width
    return np.where(mask, float(level), 0.0)


def truncated_gaussian(grid: SpatialGrid, amplitude: float, width: float, cutoff: float) -> np.ndarray:
    """amplitude * exp(-|x|^2 / width^2), set to zero for |x| > cutoff."""
    r2 = grid.radius_squared()
    return np.where(r2 <= cutoff ** 2, amplitude * np.exp(-r2 / width ** 2), 0.0)


def lift_initial_data(n0: np.ndarray, eps: float, grid: SpatialGrid) -> np.ndarray:
    """n0 + eps * exp(-|x|^2) on every trait layer (identity for eps == 0)."""
    if eps < 0:
        raise ParameterError(f"eps must be nonnegative, got {eps}")
    n0 = np.asarray(n0, dtype=float)
    if eps == 0:
        return n0.copy()
    return n0 + eps * np.exp(-grid.radius_squared())


@dataclass
class WellPreparedReport:
    ok: bool
    rho_max: float
    rho_M: float
    at_bound: bool
    sigma_sup: float
    second_moment: float
    exceed_locations: list[tuple[int, ...]] = field(default_factory=list)
    boundary_clear: bool = True


def check_well_prepared(n0: np.ndarray, gamma: float, p_M: float, grid: SpatialGrid,
                        mesh: PhenotypeMesh, rtol: float = 1e-12) -> WellPreparedReport:
    """0 <= rho0 <= p_M^(1/gamma), sup_y n0/rho0 and the second moment of rho0."""
    n0 = np.asarray(n0, dtype=float)
    rho0 = total_density(n0, mesh, grid)
    rho_M = p_M ** (1.0 / gamma)
    over = rho0 > rho_M * (1.0 + rtol)
    locations = [tuple(int(i) for i in ix) for ix in np.argwhere(over)]
    sigma = fraction_densities(n0, rho0, 1e-14 * rho_M)
    rho_max = float(np.max(rho0)) if rho0.size else 0.0
    edge = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        sl = [slice(None)] * grid.dim
        sl[ax] = 0
        edge[tuple(sl)] = True
        sl[ax] = -1
        edge[tuple(sl)] = True
    boundary_clear = not np.any(rho0[edge] > 0)
    ok = bool(np.all(n0 >= 0) and not locations)
    return WellPreparedReport(
        ok=ok,
        rho_max=rho_max,
        rho_M=rho_M,
        at_bound=bool(ok and rho_max > 0 and abs(rho_max - rho_M) <= rtol * rho_M),
        sigma_sup=float(np.max(sigma)) if sigma.size else 0.0,
        second_moment=grid.integrate(rho0 * grid.radius_squared()),
        exceed_locations=locations,
        boundary_clear=boundary_clear,
    )
