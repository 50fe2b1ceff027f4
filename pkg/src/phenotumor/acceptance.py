"""The acceptance suite: nine numbered checks plus a CSV schema check.

``Suite`` caches the shared simulations (Barenblatt refinement, gamma sweep,
eps sweep), so running every criterion costs each simulation once.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .core_fields import PhenotypeMesh, SpatialGrid
from .diagnostics import free_boundary, kappa
from .errors import PhenotumorError
from .experiments import (
    DIAGNOSTICS_COLUMNS,
    cmd_epsilon_sweep,
    cmd_gamma_sweep,
    diagnostics_header,
    execute_run,
    initial_population,
    load_reference_config,
)
from .oracles import BarenblattProfile, barenblatt_density, barenblatt_self_test, convergence_order
from .reaction_model import ReactionSpec
from .solver import FLUSH_REL, SolverConfig, layer_sum_defect, make_state, run, stable_dt, step

BARENBLATT_CELLS = (100, 200, 400, 800)
GAMMAS = (5.0, 20.0, 80.0, 320.0)
EPSILONS = (0.1, 0.03, 0.01, 0.0)
ALPHAS = (0.1, 0.25, 0.4)


@dataclass
class CriterionResult:
    number: str
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


@dataclass
class RunCheck:
    """Invariant monitors of one simulation, for the cross-run invariant criterion."""

    label: str
    ok_run: bool
    min_raw: float
    flush_tol: float
    gronwall: float
    sup_rho: float
    sup_bound: float
    drift: float | None = None
    drift_bound: float | None = None
    error: str = ""


def _mon_check(label, traj, cfg: SolverConfig, grid: SpatialGrid) -> RunCheck:
    m = traj.monitors
    conservative = cfg.reaction.is_zero and cfg.eps == 0
    return RunCheck(
        label, True, m.min_raw, FLUSH_REL * cfg.rho_M, m.max_gronwall_ratio, m.max_sup_rho,
        cfg.rho_M * (1.0 + 10.0 * grid.h),
        drift=m.max_rel_mass_drift if conservative else None,
        drift_bound=1e-13 * traj.steps / 1e3 if conservative else None,
    )


class Suite:
    def __init__(self, config_dir=None, jobs: int = 1, out=None):
        self.config_dir = config_dir
        self.jobs = jobs
        self.out = out
        self.checks: list[RunCheck] = []
        self.timings: dict[str, float] = {}

    def _config(self, name):
        return load_reference_config(name, self.config_dir)

    def _timed(self, key, func):
        start = time.perf_counter()
        value = func()
        self.timings[key] = time.perf_counter() - start
        return value

    # -- shared simulations ---------------------------------------------------

    @cached_property
    def barenblatt_profile(self) -> BarenblattProfile:
        cfg = self._config("barenblatt")
        return BarenblattProfile.from_params(cfg.solver.gamma, cfg.grid.dim, cfg.initial.get("mass", 1.0),
                                             cfg.initial.get("t0", 0.1))

    @cached_property
    def barenblatt_runs(self) -> dict:
        base = self._config("barenblatt")

        def go():
            out = {}
            for nc in BARENBLATT_CELLS:
                grid = SpatialGrid(base.grid.extents, (nc,))
                cfg = replace(base, grid=grid)
                traj = execute_run(cfg, self._out(f"barenblatt_{nc}"))
                self.checks.append(_mon_check(f"barenblatt N={nc}", traj, cfg.solver, grid))
                out[nc] = (cfg, traj)
            return out
        return self._timed("barenblatt", go)

    @cached_property
    def gamma_sweep(self):
        cfg = self._config("saturated_growth")
        res = self._timed("gamma_sweep", lambda: cmd_gamma_sweep(
            cfg, GAMMAS, out=self.out, jobs=self.jobs, write=self.out is not None))
        for g, row in zip(GAMMAS, res.rows):
            self._sweep_check(f"gamma sweep gamma={g:g}", row, cfg.with_solver(gamma=g))
        return res

    @cached_property
    def eps_sweep(self):
        cfg = self._config("saturated_growth").with_solver(gamma=5.0)
        res = self._timed("eps_sweep", lambda: cmd_epsilon_sweep(
            cfg, EPSILONS, out=self.out, jobs=self.jobs, write=self.out is not None))
        for e, row in zip(EPSILONS, res.rows):
            self._sweep_check(f"eps sweep eps={e:g}", row, cfg.with_solver(eps=e))
        return res

    def _sweep_check(self, label, row, cfg):
        if row["status"] != "ok":
            self.checks.append(RunCheck(label, False, math.nan, 0, math.nan, math.nan, math.nan, error=row["status"]))
            return
        m = row["monitors"]
        self.checks.append(RunCheck(label, True, m.min_raw, FLUSH_REL * cfg.solver.rho_M, m.max_gronwall_ratio,
                                    m.max_sup_rho, cfg.solver.rho_M * (1.0 + 10.0 * cfg.grid.h)))

    def _out(self, name):
        return False if self.out is None else Path(self.out) / name

    # -- criteria -------------------------------------------------------------

    def c1_barenblatt(self) -> CriterionResult:
        prof = self.barenblatt_profile
        report = barenblatt_self_test(prof, times=(0.0, self._config("barenblatt").solver.T))
        if not report.ok:
            return CriterionResult("1", "Barenblatt convergence", False, "oracle self-test failed: " + report.summary())
        T = self._config("barenblatt").solver.T
        errors, spacings = [], []
        for nc, (cfg, traj) in self.barenblatt_runs.items():
            exact = barenblatt_density(cfg.grid.x, T, prof)
            errors.append(cfg.grid.integrate(np.abs(traj.final.rho - exact)))
            spacings.append(cfg.grid.h)
        order = convergence_order(errors, spacings).order
        runtime = self.timings.get("barenblatt", 0.0)
        ok = order >= 0.75 and errors[-1] < 2e-2 * prof.mass and runtime < 120.0
        return CriterionResult("1", "Barenblatt convergence", ok,
                               f"L1 errors {', '.join(f'{e:.3e}' for e in errors)}; order {order:.3f} (>= 0.75); "
                               f"error at N={BARENBLATT_CELLS[-1]} {errors[-1]:.3e} (< {2e-2 * prof.mass:.0e}); "
                               f"runtime {runtime:.1f}s (< 120s)",
                               {"errors": errors, "order": order, "runtime": runtime})

    def c2_logistic(self) -> CriterionResult:
        """Flat data under R = 1 - p with gamma = 1: the centre follows the logistic ODE."""
        grid = SpatialGrid.line(-10.0, 10.0, 401)
        mesh = PhenotypeMesh(1)
        n0 = np.full((1, 401), 0.5)
        T = math.log(3.0)
        errors, dts = [], []
        for c in (0.4, 0.2, 0.1):
            cfg = SolverConfig(gamma=1.0, allow_unit_gamma=True, reaction=ReactionSpec.linear(1.0, 0.0, 1.0),
                               c_cfl=c, T=T, boundary_policy="ignore")
            traj = run(n0, cfg, grid, mesh)
            self.checks.append(_mon_check(f"logistic c_cfl={c}", traj, cfg, grid))
            errors.append(abs(traj.final.rho[200] - 0.75))
            dts.append(traj.monitors.max_dt)
        order = convergence_order(errors, dts).order
        ok = errors[0] < 1e-3 and 0.8 <= order <= 1.2
        return CriterionResult("2", "logistic ODE oracle", ok,
                               f"|rho(ln 3) - 0.75| = {errors[0]:.3e} at default step (< 1e-3); "
                               f"order in dt {order:.3f} (1 +- 0.2)", {"errors": errors, "dts": dts, "order": order})

    def c3_invariants(self) -> CriterionResult:
        # make sure the shared runs have happened
        self.barenblatt_runs, self.gamma_sweep, self.eps_sweep  # noqa: B018
        layer = self._layer_sum()
        bad = []
        for c in self.checks:
            if not c.ok_run:
                bad.append(f"{c.label}: {c.error}")
                continue
            if c.min_raw < -c.flush_tol:
                bad.append(f"{c.label}: positivity guard ({c.min_raw:.2e})")
            if c.gronwall > 1.0 + 1e-10:
                bad.append(f"{c.label}: mass/Gronwall ratio {c.gronwall:.12g}")
            if c.sup_rho > c.sup_bound:
                bad.append(f"{c.label}: sup rho {c.sup_rho:.6g} > {c.sup_bound:.6g}")
            if c.drift is not None and c.drift > c.drift_bound:
                bad.append(f"{c.label}: mass drift {c.drift:.2e} > {c.drift_bound:.2e}")
        if layer > 1e-12:
            bad.append(f"layer-sum defect {layer:.2e} per step")
        worst_g = max((c.gronwall for c in self.checks if c.ok_run), default=0.0)
        drifts = [c.drift for c in self.checks if c.drift is not None]
        detail = (f"{len(self.checks)} runs; max mass/Gronwall ratio {worst_g:.12g}; "
                  f"max layer-sum defect {layer:.2e}; max conservative drift {max(drifts, default=0):.2e}")
        if bad:
            detail += "; violations: " + " | ".join(bad)
        return CriterionResult("3", "invariant suite", not bad, detail, {"layer_sum": layer, "violations": bad})

    def _layer_sum(self) -> float:
        """Largest per-step layer-sum defect along the first 0.2 time units of the trait-structured scenario."""
        cfg = self._config("saturated_growth").with_solver(T=0.2)
        state = make_state(initial_population(cfg), cfg.grid, cfg.mesh, cfg.solver)
        worst = 0.0
        while state.t < cfg.solver.T:
            dt = min(stable_dt(state, cfg.solver), cfg.solver.T - state.t)
            worst = max(worst, layer_sum_defect(state, dt, cfg.solver))
            state = step(state, dt, cfg.solver, force=True)
        return worst

    def c4_incompressible(self) -> CriterionResult:
        res = self.gamma_sweep
        if res.failures:
            return CriterionResult("4", "incompressible limit", False, f"failed runs: {[r['status'] for r in res.failures]}")
        sat, comp = res.column("saturation_avg"), res.column("complementarity_avg")
        dec = bool(np.all(np.diff(sat) < 0) and np.all(np.diff(comp) < 0))
        ratio_s, ratio_c = sat[-1] / sat[0], comp[-1] / comp[0]
        runtime = self.timings.get("gamma_sweep", 0.0)
        ok = dec and ratio_s < 0.25 and ratio_c < 0.25 and runtime < 1200.0
        return CriterionResult("4", "incompressible limit", ok,
                               f"saturation {_seq(sat)}, complementarity {_seq(comp)}; strictly decreasing: {dec}; "
                               f"gamma=320 / gamma=5 ratios {ratio_s:.3f}, {ratio_c:.3f} (< 0.25); runtime {runtime:.0f}s",
                               {"saturation": sat.tolist(), "complementarity": comp.tolist()})

    def c5_regularization(self) -> CriterionResult:
        res = self.eps_sweep
        if res.failures:
            return CriterionResult("5", "regularization limit", False, f"failed runs: {[r['status'] for r in res.failures]}")
        d = res.column("l2_v_diff")
        ok = bool(np.all(np.diff(d) < 0))
        return CriterionResult("5", "regularization limit", ok,
                               f"||v_eps(T) - v_0(T)||_L2 for eps {list(EPSILONS)}: {_seq(d)}; strictly decreasing: {ok}",
                               {"l2_v": d.tolist(), "l1_rho": res.column("l1_rho_diff").tolist()})

    def c6_uniform_l4(self) -> CriterionResult:
        res = self.gamma_sweep
        if res.failures:
            return CriterionResult("6", "gamma-uniform L4 bound", False, "gamma sweep had failed runs")
        l4, hess = res.column("grad_p_l4_int"), res.column("hessian_weighted_int")
        ok = bool(np.all(l4[1:] <= 2 * l4[0]) and np.all(hess[1:] <= 2 * hess[0]))
        return CriterionResult("6", "gamma-uniform L4 bound", ok,
                               f"int |grad p|^4: {_seq(l4)}; int p|D2 p|^2: {_seq(hess)} (each <= 2x the gamma=5 value)",
                               {"l4": l4.tolist(), "hessian": hess.tolist()})

    def c7_weighted_l4(self) -> CriterionResult:
        runs = self.barenblatt_runs
        gamma = self._config("barenblatt").solver.gamma
        parts, ok = [], gamma > 1.5
        values = {}
        for a in ALPHAS:
            if not a < 1.0 / gamma:
                ok = False
                parts.append(f"alpha={a} inadmissible")
                continue
            k = kappa(a, gamma)
            v400 = k * runs[400][1].integrals[f"weighted_grad4_a{a:g}"]
            v800 = k * runs[800][1].integrals[f"weighted_grad4_a{a:g}"]
            change = abs(v800 - v400) / abs(v400) if v400 else math.inf
            ok &= math.isfinite(v400) and math.isfinite(v800) and change < 0.2
            parts.append(f"alpha={a:g}: {v400:.4g} -> {v800:.4g} ({change:.1%})")
            values[a] = (v400, v800, change)
        return CriterionResult("7", "weighted L4 diagnostic", bool(ok),
                               "kappa * integral at N=400 -> 800: " + "; ".join(parts) + " (< 20%)", values)

    def c8_entropy_ab(self) -> CriterionResult:
        from .diagnostics import ab_weighted_grad, entropy_dissipation
        cfg, traj = self.barenblatt_runs[800]
        st = traj.final
        fb = free_boundary(st.p, cfg.grid, p_M=cfg.reaction.p_M)
        window = (0.8 * fb[0], 0.8 * fb[-1])
        e = entropy_dissipation(st.rho, cfg.solver.gamma, cfg.grid, window)
        a = ab_weighted_grad(st.p, cfg.solver.gamma, cfg.grid, cfg.reaction.p_M, window)
        rel = abs(e - a) / abs(a)
        return CriterionResult("8", "entropy / AB identity", rel < 0.05,
                               f"on [{window[0]:.3f}, {window[1]:.3f}]: entropy {e:.6g}, AB {a:.6g}, "
                               f"relative gap {rel:.2e} (< 5%)", {"entropy": e, "ab": a, "rel": rel})

    def c9_viscous_positivity(self) -> CriterionResult:
        cfg = self._config("viscous_positivity")
        eps, gamma = cfg.solver.eps, cfg.solver.gamma
        K = 2.0 * (eps + gamma) + cfg.reaction.sup_norm
        x = cfg.grid.x
        inside = np.abs(x) <= 2.0
        shape = 0.9 * eps * np.exp(-x[inside] ** 2)
        worst = [math.inf, 0.0]

        def watch(t, rho, n):
            ratio = float(np.min(rho[inside] / (shape * math.exp(-K * t))))
            if ratio < worst[0]:
                worst[:] = [ratio, t]

        n0 = initial_population(cfg)
        watch(0.0, cfg.mesh.integrate(n0), n0)
        try:
            traj = run(n0, cfg.solver, cfg.grid, cfg.mesh, callback=watch)
        except PhenotumorError as exc:
            return CriterionResult("9", "eps-mode positivity", False, f"run failed: {exc}")
        self.checks.append(_mon_check("viscous positivity", traj, cfg.solver, cfg.grid))
        ok = worst[0] >= 1.0
        return CriterionResult("9", "eps-mode positivity", ok,
                               f"min over |x|<=2, t<=0.5 of rho / (0.9 eps e^(-Kt) e^(-x^2)) = {worst[0]:.4f} "
                               f"at t={worst[1]:.3g} (>= 1), K={K:g}", {"min_ratio": worst[0], "K": K})

    def schema(self) -> CriterionResult:
        header = diagnostics_header(ALPHAS)
        ok = tuple(header) == DIAGNOSTICS_COLUMNS
        return CriterionResult("S", "diagnostics CSV schema", ok,
                               "header matches the versioned schema" if ok else f"schema drift: {header}")

    def criteria(self):
        # the invariant suite runs last so that it sees every simulation
        return [self.c1_barenblatt, self.c2_logistic, self.c4_incompressible, self.c5_regularization,
                self.c6_uniform_l4, self.c7_weighted_l4, self.c8_entropy_ab, self.c9_viscous_positivity,
                self.c3_invariants, self.schema]

    def run_all(self, echo=None) -> list[CriterionResult]:
        results = []
        for crit in self.criteria():
            start = time.perf_counter()
            try:
                res = crit()
            except (PhenotumorError, ValueError, ArithmeticError) as exc:
                name = crit.__name__
                res = CriterionResult(name.split("_")[0].lstrip("c"), name, False, f"error: {type(exc).__name__}: {exc}")
            res.seconds = time.perf_counter() - start
            results.append(res)
            if echo is not None:
                echo(res.line())
        return sorted(results, key=lambda r: (not r.number.isdigit(), int(r.number) if r.number.isdigit() else 0))


def _seq(a) -> str:
    return "[" + ", ".join(f"{v:.4g}" for v in a) + "]"
