"""Explicit finite-volume integration of the trait-structured Darcy system.

Each trait layer is advanced by forward Euler with donor-cell upwinding
against the face velocity u = -D_h p, optional viscosity eps * Lap_h n and
the reaction term. All layers share the velocity, so the trait integral of
the update is exactly the upwind update of rho (``step_density_only``).
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .core_fields import (
    RHO_FLOOR_REL,
    PhenotypeMesh,
    SpatialGrid,
    _check_gamma,
    check_population,
    fraction_densities,
)
from .diagnostics import P_FLOOR_REL, DiagnosticsRecord, _faces, _pad, evaluate
from .errors import BoundaryContactError, ParameterError, StepError
from .reaction_model import (
    MutationKernel,
    ReactionSpec,
    check_well_prepared,
    mutation_reaction,
    validate_reaction,
)

FLUSH_REL = 1e-14
CONTACT_REL = 1e-10
DT_GUARD = 1e-30
BOUNDARY_POLICIES = ("abort", "warn", "ignore")


@dataclass
class SolverConfig:
    gamma: float = 2.0
    eps: float = 0.0
    reaction: ReactionSpec = field(default_factory=ReactionSpec.linear)
    c_cfl: float = 0.4
    T: float = 1.0
    snapshot_times: tuple = ()
    record_interval: float | None = None
    mutation: MutationKernel | None = None
    boundary_policy: str = "abort"
    alphas: tuple = (0.1, 0.25, 0.4)
    average_window: tuple | None = None
    allow_unit_gamma: bool = False
    compiled: bool = True

    def __post_init__(self):
        _check_gamma(self.gamma, self.allow_unit_gamma)
        if self.eps < 0:
            raise ParameterError(f"eps must be nonnegative, got {self.eps}")
        if not 0 < self.c_cfl <= 1:
            raise ParameterError(f"CFL factor must lie in (0, 1], got {self.c_cfl}")
        if self.T < 0:
            raise ParameterError(f"end time must be nonnegative, got {self.T}")
        if self.boundary_policy not in BOUNDARY_POLICIES:
            raise ParameterError(f"boundary policy must be one of {BOUNDARY_POLICIES}")
        self.snapshot_times = tuple(sorted(float(s) for s in self.snapshot_times))
        self.alphas = tuple(float(a) for a in self.alphas)

    @property
    def p_M(self) -> float:
        return self.reaction.p_M

    @property
    def rho_M(self) -> float:
        return self.reaction.p_M ** (1.0 / self.gamma)

    @property
    def mutation_mode(self) -> bool:
        return self.mutation is not None

    @property
    def rate_bound(self) -> float:
        """||R||_inf, or the kernel bound in mutation mode."""
        if self.mutation is not None:
            return self.mutation.sup_norm
        return self.reaction.sup_norm

    @property
    def window(self) -> tuple[float, float]:
        if self.average_window is not None:
            return tuple(self.average_window)
        return (0.5 * self.T, self.T)


@dataclass
class SimulationState:
    t: float
    n: np.ndarray
    grid: SpatialGrid
    mesh: PhenotypeMesh
    rho: np.ndarray
    p: np.ndarray
    v: np.ndarray
    sigma: np.ndarray
    rates: np.ndarray
    reaction_term: np.ndarray
    mean_rate: np.ndarray
    steps: int = 0
    flushed: int = 0

    @property
    def growth(self) -> np.ndarray:
        """Trait integral of the reaction term."""
        return self.mesh.integrate(self.reaction_term)


def _densities(n, mesh, gamma):
    rho = mesh.integrate(n)
    return rho, rho ** gamma


def _reaction_term(n, p, rates, mesh, config):
    if config.mutation is not None:
        return mutation_reaction(n, p, config.mutation, mesh)
    return n * rates


def make_state(n, grid: SpatialGrid, mesh: PhenotypeMesh, config: SolverConfig,
               t: float = 0.0, steps: int = 0, flushed: int = 0) -> SimulationState:
    """Wrap a population field with every derived field recomputed from it."""
    n = check_population(n, grid, mesh).copy()
    rho, p = _densities(n, mesh, config.gamma)
    rates = config.reaction.rates(mesh.nodes, p)
    react = _reaction_term(n, p, rates, mesh, config)
    sigma = fraction_densities(n, rho, RHO_FLOOR_REL * config.rho_M)
    growth = mesh.integrate(react)
    occupied = rho > 0
    mean_rate = np.where(occupied, growth / np.where(occupied, rho, 1.0), 0.0)
    return SimulationState(t=float(t), n=n, grid=grid, mesh=mesh, rho=rho, p=p,
                           v=rho * p, sigma=sigma, rates=rates, reaction_term=react,
                           mean_rate=mean_rate, steps=steps, flushed=flushed)


def _max_face_jump(p: np.ndarray) -> float:
    out = 0.0
    for ax in range(p.ndim):
        left, right = _faces(p, ax)
        out = max(out, float(np.max(np.abs(right - left))))
    return out


def _dt_bound(h, dim, gamma, eps, c_cfl, pmax, max_jump, rate):
    diff = 2.0 * dim * (gamma * pmax + eps)
    dt_diff = h * h / diff if diff > 0 else math.inf
    dt_adv = h / (max_jump / h + DT_GUARD)
    dt_react = 1.0 / (2.0 * rate) if rate > 0 else math.inf
    # keeps the per-step pressure growth factor (1 + dt R)^gamma below e^c_cfl
    dt_press = 1.0 / (gamma * rate) if rate > 0 else math.inf
    return c_cfl * min(dt_diff, dt_adv, dt_react, dt_press)


def stable_dt(state: SimulationState, config: SolverConfig) -> float:
    """c_cfl * min(h^2 / (2d(gamma p_max + eps)), h / max|D_h p|, 1/(2||R||), 1/(gamma ||R||)).

    ||R|| here is the larger of sup_y R(y, 0) and the largest |R| on the current
    state. Returns T when every bound is infinite (vacuum without reaction).
    """
    rate = max(config.rate_bound, float(np.max(np.abs(state.rates))) if config.mutation is None else 0.0)
    dt = _dt_bound(state.grid.h, state.grid.dim, config.gamma, config.eps, config.c_cfl,
                   float(np.max(state.p)), _max_face_jump(state.p), rate)
    if not math.isfinite(dt):
        dt = config.T if config.T > 0 else 1.0
    return dt


def transport_rhs(n: np.ndarray, p: np.ndarray, h: float, eps: float) -> np.ndarray:
    """-div(upwind(n) u) + eps Lap_h n for every layer, u = -D_h p, zero ghosts."""
    out = np.zeros_like(n)
    dim = p.ndim
    for ax in range(dim):
        pl, pr = _faces(p, ax)
        u = -(pr - pl) / h
        nl, nr = _faces(n, ax + 1)
        flux = np.where(u > 0.0, nl, nr) * u
        m = p.shape[ax]
        lo = tuple(slice(0, m) if k == ax + 1 else slice(None) for k in range(n.ndim))
        hi = tuple(slice(1, m + 1) if k == ax + 1 else slice(None) for k in range(n.ndim))
        out += -(flux[hi] - flux[lo]) / h
        if eps != 0.0:
            g = _pad(n, ax + 1)
            c0 = tuple(slice(0, m) if k == ax + 1 else slice(None) for k in range(n.ndim))
            c1 = tuple(slice(1, m + 1) if k == ax + 1 else slice(None) for k in range(n.ndim))
            c2 = tuple(slice(2, m + 2) if k == ax + 1 else slice(None) for k in range(n.ndim))
            out += eps * ((g[c2] - 2.0 * g[c1]) + g[c0]) / (h * h)
    return out


def _advance(n, p, react, dt, grid, eps, flush_tol, compiled):
    """One Euler update with the negativity guard. Returns (new n, min raw, where, flushed, finite)."""
    if compiled and grid.dim == 1:
        out = np.empty_like(n)
        vmin, jmin, imin, nflush, bad = _kernels.advance_1d(n, p, react, dt, grid.h, eps, flush_tol, out)
        return out, vmin, (int(jmin), int(imin)), int(nflush), not bad
    raw = n + dt * (transport_rhs(n, p, grid.h, eps) + react)
    finite = bool(np.all(np.isfinite(raw)))
    k = int(np.argmin(raw))
    vmin = float(raw.flat[k])
    where = np.unravel_index(k, raw.shape)
    small = (raw < 0.0) & (raw >= -flush_tol)
    nflush = int(np.count_nonzero(small))
    raw[small] = 0.0
    return raw, vmin, tuple(int(i) for i in where), nflush, finite


def _guard(vmin, where, finite, flush_tol, t):
    if not finite:
        raise StepError(f"non-finite values after step at t={t:.6g}", t=t)
    if vmin < -flush_tol:
        raise StepError(f"negative value {vmin:.3e} at {where}, t={t:.6g} (guard {flush_tol:.1e})",
                        t=t, min_value=vmin, location=where)


def _edge_max(rho: np.ndarray) -> float:
    out = 0.0
    for ax in range(rho.ndim):
        for idx in (0, -1):
            sl = tuple(idx if k == ax else slice(None) for k in range(rho.ndim))
            out = max(out, float(np.max(rho[sl])))
    return out


def step(state: SimulationState, dt: float, config: SolverConfig, *, force: bool = False) -> SimulationState:
    """Advance every trait layer by one explicit step of size dt."""
    if dt <= 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    if not force and dt > stable_dt(state, config) * (1.0 + 1e-12):
        raise ParameterError(f"dt={dt:.3e} exceeds the stable step {stable_dt(state, config):.3e}")
    flush_tol = FLUSH_REL * config.rho_M
    new, vmin, where, nflush, finite = _advance(state.n, state.p, state.reaction_term, dt,
                                                state.grid, config.eps, flush_tol, config.compiled)
    t = state.t + dt
    _guard(vmin, where, finite, flush_tol, t)
    new_state = make_state(new, state.grid, state.mesh, config, t=t, steps=state.steps + 1,
                           flushed=state.flushed + nflush)
    mode = _contact_mode(config)
    if mode and _edge_max(new_state.rho) > CONTACT_REL * config.rho_M:
        msg = f"support reached the boundary at t={t:.6g}"
        if mode == 1:
            raise BoundaryContactError(msg, t=t)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return new_state


def step_density_only(rho: np.ndarray, dt: float, config: SolverConfig, grid: SpatialGrid,
                      mesh: PhenotypeMesh | None = None) -> np.ndarray:
    """Advance the total density alone: upwind rho (-D_h p) flux, viscosity and rho * mean rate.

    The mean rate averages R(y_j, p) with uniform trait fractions; for a
    trait-independent R it is R(p) and the update equals the trait integral
    of ``step``.
    """
    if dt <= 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    rho = np.asarray(rho, dtype=float)
    mesh = mesh or PhenotypeMesh(1)
    p = rho ** config.gamma
    mean_rate = mesh.integrate(config.reaction.rates(mesh.nodes, p))
    react = (rho * mean_rate)[None]
    flush_tol = FLUSH_REL * config.rho_M
    new, vmin, where, _, finite = _advance(rho[None], p, react, dt, grid, config.eps,
                                           flush_tol, config.compiled)
    _guard(vmin, where, finite, flush_tol, dt)
    return new[0]


def layer_sum_defect(state: SimulationState, dt: float, config: SolverConfig) -> float:
    """max |sum_j w_j n_j^new - rho^new| where rho^new advances rho with the layer-summed growth.

    The upwind flux is linear in n for a shared velocity, so this vanishes up
    to rounding.
    """
    flush_tol = FLUSH_REL * config.rho_M
    layers, *_ = _advance(state.n, state.p, state.reaction_term, dt, state.grid, config.eps,
                          flush_tol, config.compiled)
    dens, *_ = _advance(state.rho[None], state.p, state.growth[None], dt, state.grid, config.eps,
                        flush_tol, config.compiled)
    return float(np.max(np.abs(state.mesh.integrate(layers) - dens[0])))


@dataclass
class Monitors:
    """Running checks of the discrete invariants along one run."""

    mass0: float = 0.0
    max_gronwall_ratio: float = 0.0
    max_sup_rho: float = 0.0
    min_raw: float = math.inf
    flushed: int = 0
    max_rel_mass_drift: float = 0.0
    min_dt: float = math.inf
    max_dt: float = 0.0


@dataclass
class Trajectory:
    final: SimulationState
    config: SolverConfig
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    integrals: dict = field(default_factory=dict)
    window_integrals: dict = field(default_factory=dict)
    monitors: Monitors = field(default_factory=Monitors)
    steps: int = 0
    wall_time: float = 0.0
    boundary_warnings: list = field(default_factory=list)

    def window_average(self, name: str) -> float:
        a, b = self.config.window
        return self.window_integrals[name] / (b - a) if b > a else float("nan")


def integrand_names(alphas) -> list[str]:
    return list(_kernels.INTEGRAND_NAMES) + [f"weighted_grad4_a{a:g}" for a in alphas]


def _integrands_numpy(rho, p, growth, mean_rate, grid, gamma, p_M, alphas):
    from . import diagnostics as dg

    vals = [
        dg.grad_integral(p, grid, 2),
        dg.grad_integral(p, grid, 4),
        dg.entropy_dissipation(rho, gamma, grid),
        dg.ab_weighted_grad(p, gamma, grid, p_M),
        dg.hessian_weighted_interior(p, grid),
        dg.laplacian_weighted(p, mean_rate, grid),
        dg.saturation_residual(p, rho, grid),
        dg.complementarity_residual(p, growth, grid),
    ]
    vals += [dg.weighted_grad4_raw(p, a, grid, p_M) for a in alphas]
    return np.array(vals)


def _event_times(config: SolverConfig) -> list[float]:
    T = config.T
    events = {T}
    events.update(s for s in config.snapshot_times if 0 < s < T)
    interval = config.record_interval if config.record_interval else T / 100.0
    if interval > 0:
        k = 1
        while k * interval < T * (1 - 1e-12):
            events.add(k * interval)
            k += 1
    a, b = config.window
    events.update(s for s in (a, b) if 0 < s < T)
    return sorted(events)


def _record(state: SimulationState, config: SolverConfig) -> DiagnosticsRecord:
    return evaluate(state.t, state.n, state.rho, state.p, state.reaction_term, state.mean_rate,
                    state.grid, state.mesh, config.gamma, config.p_M, config.alphas)


def _fused_ok(config: SolverConfig, grid: SpatialGrid, callback) -> bool:
    return (config.compiled and grid.dim == 1 and callback is None and config.mutation is None
            and config.reaction.family == "linear_inhibition")


def run(n0: np.ndarray, config: SolverConfig, grid: SpatialGrid, mesh: PhenotypeMesh, *,
        check: bool = True, callback=None) -> Trajectory:
    """Integrate from t = 0 to config.T with the adaptive stable step.

    Diagnostics records are taken every ``record_interval`` (default T/100),
    snapshots at ``snapshot_times`` and at both ends; step sizes are clipped
    so that these instants are hit exactly. Time integrals of the diagnostic
    integrands are left Riemann sums over the actual step sequence.
    ``callback(t, rho, n)`` is invoked for every state after the initial one.
    """
    n0 = check_population(n0, grid, mesh)
    if check:
        # R == 0 is the pure porous-medium case; the inhibition assumptions do not apply
        report = validate_reaction(config.reaction)
        if not report.ok and not config.reaction.is_zero:
            raise ParameterError("reaction rate violates the inhibition assumptions:\n" + report.summary())
        prep = check_well_prepared(n0, config.gamma, config.p_M, grid, mesh)
        if not prep.ok:
            raise ParameterError(
                f"initial density exceeds rho_M={prep.rho_M:.6g} at {prep.exceed_locations[:5]}"
                if prep.exceed_locations else "initial data must be nonnegative")
        if config.mutation is not None and not config.mutation.monotone():
            raise ParameterError("mutation kernel must be nonincreasing in p")

    start = time.perf_counter()
    cfg = config
    names = integrand_names(cfg.alphas)
    state0 = make_state(n0, grid, mesh, cfg)
    traj = Trajectory(final=state0, config=cfg)
    traj.snapshots.append((0.0, state0.n.copy()))
    traj.records.append(_record(state0, cfg))

    mon = np.zeros(_kernels.N_MON)
    mon[_kernels.MON_MASS0] = grid.integrate(state0.rho)
    mon[_kernels.MON_SUP] = float(np.max(state0.rho)) if state0.rho.size else 0.0
    mon[_kernels.MON_MINRAW] = math.inf
    mon[_kernels.MON_MINDT] = math.inf
    mon[_kernels.MON_CONTACT] = -1.0
    integ = np.zeros(len(names))
    win = np.zeros(len(names))

    record_interval = cfg.record_interval if cfg.record_interval else cfg.T / 100.0
    snap_set = set(cfg.snapshot_times)
    events = _event_times(cfg) if cfg.T > 0 else []
    advance = _FusedLoop(cfg, grid, mesh, mon, integ, win) if _fused_ok(cfg, grid, callback) \
        else _GenericLoop(cfg, grid, mesh, mon, integ, win, callback)

    n = state0.n.copy()
    t = 0.0
    steps = 0
    for k, target in enumerate(events):
        n, t, s = advance(n, t, target, observe_first=steps > 0)
        steps += s
        last = k == len(events) - 1
        is_snap = t in snap_set or last
        on_record = abs(t / record_interval - round(t / record_interval)) < 1e-9 or last
        if is_snap or on_record:
            st = make_state(n, grid, mesh, cfg, t=t, steps=steps, flushed=int(mon[_kernels.MON_FLUSHED]))
            if on_record:
                traj.records.append(_record(st, cfg))
            if is_snap:
                traj.snapshots.append((t, st.n.copy()))
    if steps > 0:
        n, t, _ = advance(n, t, t, observe_first=True)

    traj.final = make_state(n, grid, mesh, cfg, t=t, steps=steps, flushed=int(mon[_kernels.MON_FLUSHED]))
    traj.steps = steps
    traj.monitors = Monitors(
        mass0=float(mon[_kernels.MON_MASS0]),
        max_gronwall_ratio=float(mon[_kernels.MON_GRONWALL]),
        max_sup_rho=float(mon[_kernels.MON_SUP]),
        min_raw=float(mon[_kernels.MON_MINRAW]),
        flushed=int(mon[_kernels.MON_FLUSHED]),
        max_rel_mass_drift=float(mon[_kernels.MON_DRIFT]),
        min_dt=float(mon[_kernels.MON_MINDT]),
        max_dt=float(mon[_kernels.MON_MAXDT]),
    )
    if mon[_kernels.MON_CONTACT] >= 0:
        traj.boundary_warnings.append(float(mon[_kernels.MON_CONTACT]))
        warnings.warn(f"support reached the boundary at t={mon[_kernels.MON_CONTACT]:.6g}",
                      RuntimeWarning, stacklevel=2)
    traj.integrals = dict(zip(names, integ.tolist()))
    traj.window_integrals = dict(zip(names, win.tolist()))
    traj.wall_time = time.perf_counter() - start
    return traj


def _contact_mode(config: SolverConfig) -> int:
    # the eps-lifted data are not compactly supported, so contact is meaningless there
    if config.boundary_policy == "ignore" or config.eps > 0:
        return 0
    return 1 if config.boundary_policy == "abort" else 2


class _FusedLoop:
    """Compiled stepping for 1D linear-inhibition runs."""

    def __init__(self, cfg, grid, mesh, mon, integ, win):
        self.cfg, self.grid, self.mon, self.integ, self.win = cfg, grid, mon, integ, win
        spec = cfg.reaction
        self.g = np.ascontiguousarray(spec.g0 + spec.g1 * mesh.nodes)
        shape = (mesh.n_nodes,) + grid.shape
        self.buf = np.empty(shape)
        self.rho = np.empty(grid.shape)
        self.p = np.empty(grid.shape)
        self.react = np.empty(shape)
        self.growth = np.empty(grid.shape)
        self.alphas = np.array(cfg.alphas, dtype=float)
        self.vals = np.zeros(integ.size)
        self.err = np.zeros(4)

    def __call__(self, n, t, target, observe_first):
        cfg = self.cfg
        n = np.ascontiguousarray(n)
        a, b = cfg.window
        t_new, steps, status, which = _kernels.segment_linear_1d(
            n, self.buf, self.rho, self.p, self.react, self.growth, self.g, cfg.p_M, cfg.gamma,
            cfg.eps, self.grid.h, cfg.c_cfl, cfg.rate_bound, t, target, observe_first,
            FLUSH_REL * cfg.rho_M, CONTACT_REL * cfg.rho_M, _contact_mode(cfg),
            P_FLOOR_REL * cfg.p_M, self.alphas, a, b, self.vals, self.integ, self.win, self.mon, self.err)
        if which == 1:
            n, self.buf = self.buf, n
        if status == _kernels.STATUS_NONFINITE:
            raise StepError(f"non-finite values after step at t={t_new:.6g}", t=t_new)
        if status == _kernels.STATUS_NEGATIVE:
            where = (int(self.err[2]), int(self.err[3]))
            raise StepError(f"negative value {self.err[1]:.3e} at {where}, t={t_new:.6g}",
                            t=t_new, min_value=float(self.err[1]), location=where)
        if status == _kernels.STATUS_CONTACT:
            raise BoundaryContactError(
                f"support reached the boundary at t={self.err[0]:.6g} (edge density {self.err[1]:.3e})",
                t=float(self.err[0]))
        return n.copy(), t_new, int(steps)


class _GenericLoop:
    """Python stepping loop: any dimension, tabulated rates, mutation kernels, callbacks."""

    def __init__(self, cfg, grid, mesh, mon, integ, win, callback):
        self.cfg, self.grid, self.mesh = cfg, grid, mesh
        self.mon, self.integ, self.win, self.callback = mon, integ, win, callback
        self.compiled = cfg.compiled and grid.dim == 1
        self.alphas = np.array(cfg.alphas, dtype=float)
        self.vals = np.zeros(integ.size)
        self.rho = np.empty(grid.shape)
        self.p = np.empty(grid.shape)

    def _observe(self, t, rho, n, mass, rmax):
        mon, cfg = self.mon, self.cfg
        mon[_kernels.MON_SUP] = max(mon[_kernels.MON_SUP], rmax)
        if mon[_kernels.MON_MASS0] > 0:
            m0 = mon[_kernels.MON_MASS0]
            mon[_kernels.MON_GRONWALL] = max(mon[_kernels.MON_GRONWALL],
                                             mass / (m0 * math.exp(cfg.rate_bound * t)))
            mon[_kernels.MON_DRIFT] = max(mon[_kernels.MON_DRIFT], abs(mass - m0) / m0)
        mode = _contact_mode(cfg)
        if mode:
            edge = _edge_max(rho)
            if edge > CONTACT_REL * cfg.rho_M:
                if mode == 1:
                    raise BoundaryContactError(
                        f"support reached the boundary at t={t:.6g} (edge density {edge:.3e})", t=t)
                if mon[_kernels.MON_CONTACT] < 0:
                    mon[_kernels.MON_CONTACT] = t
        if self.callback is not None:
            self.callback(t, rho.copy(), n)

    def __call__(self, n, t, target, observe_first):
        cfg, grid, mesh, mon = self.cfg, self.grid, self.mesh, self.mon
        gamma, eps, h = cfg.gamma, cfg.eps, grid.h
        flush_tol = FLUSH_REL * cfg.rho_M
        steps = 0
        first = observe_first
        y = mesh.nodes
        a, b = cfg.window
        while True:
            if self.compiled:
                rho, p = self.rho, self.p
                pmax, jump, rsum, rmax = _kernels.prepare_1d(n, gamma, rho, p)
                mass = h * rsum
            else:
                rho, p = _densities(n, mesh, gamma)
                pmax, jump = float(np.max(p)), _max_face_jump(p)
                mass, rmax = grid.integrate(rho), float(np.max(rho))
            if first:
                self._observe(t, rho, n, mass, rmax)
            first = True
            if t >= target:
                return n, t, steps
            rates = cfg.reaction.rates(y, p)
            react = _reaction_term(n, p, rates, mesh, cfg)
            rate = cfg.rate_bound if cfg.mutation is not None else max(cfg.rate_bound, float(np.max(np.abs(rates))))
            dt = _dt_bound(h, grid.dim, gamma, eps, cfg.c_cfl, pmax, jump, rate)
            hit = not dt < target - t
            if hit:
                dt = target - t
            growth = mesh.integrate(react)
            if self.compiled:
                _kernels.integrands_1d(rho, p, growth, h, gamma, P_FLOOR_REL * cfg.p_M, self.alphas, self.vals)
                vals = self.vals
            else:
                occupied = rho > 0
                mean_rate = np.where(occupied, growth / np.where(occupied, rho, 1.0), 0.0)
                vals = _integrands_numpy(rho, p, growth, mean_rate, grid, gamma, cfg.p_M, cfg.alphas)
            self.integ += vals * dt
            overlap = min(t + dt, b) - max(t, a)
            if overlap > 0:
                self.win += vals * overlap
            n, vmin, where, nflush, finite = _advance(n, p, react, dt, grid, eps, flush_tol, self.compiled)
            t = target if hit else t + dt
            steps += 1
            _guard(vmin, where, finite, flush_tol, t)
            mon[_kernels.MON_MINRAW] = min(mon[_kernels.MON_MINRAW], vmin)
            mon[_kernels.MON_FLUSHED] += nflush
            mon[_kernels.MON_MINDT] = min(mon[_kernels.MON_MINDT], dt)
            mon[_kernels.MON_MAXDT] = max(mon[_kernels.MON_MAXDT], dt)


def with_options(config: SolverConfig, **changes) -> SolverConfig:
    return replace(config, **changes)
