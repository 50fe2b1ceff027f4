"""Run configuration, CSV output and the gamma / eps parameter sweeps.

A configuration is a JSON mapping with the sections ``grid``, ``phenotype``,
``solver``, ``reaction``, ``initial`` and ``output``; every section is
optional and unknown keys are rejected. Example::

    {
      "grid": {"extents": [[-3, 3]], "cells": [400]},
      "phenotype": {"nodes": 4},
      "solver": {"gamma": 5, "T": 1},
      "reaction": {"family": "linear_inhibition", "g0": 1, "g1": 0.5, "p_M": 1},
      "initial": {"profile": "box", "half_width": 0.5, "level": 0.6},
      "output": {"dir": "saturated", "snapshot_times": [0.5]}
    }
"""
from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core_fields import PhenotypeMesh, SpatialGrid, check_population, uniform_population, v_field
from .diagnostics import DiagnosticsRecord
from .errors import ConfigError, PhenotumorError
from .oracles import BarenblattProfile, barenblatt_density
from .reaction_model import (
    ReactionSpec,
    box_profile,
    lift_initial_data,
    read_tabulated_csv,
    truncated_gaussian,
    validate_reaction,
)
from .solver import BOUNDARY_POLICIES, SolverConfig, Trajectory, run

OUT_ENV = "PHENOTUMOR_OUT"
DEFAULT_OUT = "phenotumor_out"
SUPPORT_MARGIN = 0.1

DIAGNOSTICS_SCHEMA = "phenotumor-diagnostics/1"
SNAPSHOT_SCHEMA = "phenotumor-snapshot/1"
SWEEP_SCHEMA = "phenotumor-sweep/1"
# frozen header for the default alphas; a change here is a schema change
DIAGNOSTICS_COLUMNS = (
    "t", "mass", "sup_rho", "second_moment", "grad_p_l2", "grad_p_l4", "entropy_dissipation",
    "ab_weighted", "hessian_weighted", "laplacian_weighted", "saturation_residual",
    "complementarity_residual", "sigma_sup",
    "weighted_grad4_a0.1", "weighted_grad4_a0.25", "weighted_grad4_a0.4",
)

SECTION_KEYS = {
    "grid": {"extents", "cells"},
    "phenotype": {"nodes"},
    "solver": {"gamma", "eps", "c_cfl", "T", "record_interval", "boundary_policy", "alphas",
               "average_window", "allow_unit_gamma", "compiled"},
    "reaction": {"family", "g0", "g1", "p_M", "file"},
    "initial": {"profile", "half_width", "level", "center", "amplitude", "width", "cutoff",
                "mass", "t0", "path", "lift"},
    "output": {"dir", "snapshot_times"},
}
PROFILE_KEYS = {
    "box": {"half_width", "level", "center"},
    "gaussian-truncated": {"amplitude", "width", "cutoff"},
    "barenblatt": {"mass", "t0"},
    "file": {"path"},
}


@dataclass
class RunConfig:
    grid: SpatialGrid
    mesh: PhenotypeMesh
    solver: SolverConfig
    initial: dict
    out_dir: str | None = None
    name: str = "run"
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def reaction(self) -> ReactionSpec:
        return self.solver.reaction

    def with_solver(self, **changes) -> "RunConfig":
        return replace(self, solver=replace(self.solver, **changes))


# --- parsing ----------------------------------------------------------------

def parse_config(path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          [f"line {exc.lineno}: {exc.msg}"]) from None
    return config_from_dict(data, base_dir=path.parent, name=path.stem)


def _number(section, key, value, problems, *, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{section}.{key}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        problems.append(f"{section}.{key}: expected an integer, got {value!r}")
        return None
    if not math.isfinite(value):
        problems.append(f"{section}.{key}: must be finite")
        return None
    if positive and value <= 0:
        problems.append(f"{section}.{key}: must be positive, got {value!r}")
        return None
    if nonneg and value < 0:
        problems.append(f"{section}.{key}: must be nonnegative, got {value!r}")
        return None
    return int(value) if integer else float(value)


def config_from_dict(data: dict, base_dir=None, name: str = "run") -> RunConfig:
    """Validate a configuration mapping; every problem found is reported at once."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object", ["top level: not an object"])
    for key in data:
        if key not in SECTION_KEYS:
            problems.append(f"unknown section '{key}'")
    sec = {}
    for name_ in SECTION_KEYS:
        value = data.get(name_, {})
        if not isinstance(value, dict):
            problems.append(f"{name_}: expected an object")
            value = {}
        for key in value:
            if key not in SECTION_KEYS[name_]:
                problems.append(f"unknown key '{name_}.{key}'")
        sec[name_] = value
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()

    grid = _parse_grid(sec["grid"], problems)
    nodes = _number("phenotype", "nodes", sec["phenotype"].get("nodes", 1), problems, positive=True, integer=True)
    mesh = PhenotypeMesh(nodes) if nodes else None
    reaction = _parse_reaction(sec["reaction"], base_dir, problems)
    out = sec["output"]
    snaps = out.get("snapshot_times", [])
    if not isinstance(snaps, list):
        problems.append("output.snapshot_times: expected a list")
        snaps = []
    snaps = [v for v in (_number("output", "snapshot_times", s, problems, nonneg=True) for s in snaps) if v is not None]
    solver = _parse_solver(sec["solver"], reaction, snaps, problems)
    initial = _parse_initial(sec["initial"], problems)
    out_dir = out.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        problems.append("output.dir: expected a string")
        out_dir = None

    if not problems and solver is not None:
        for s in snaps:
            if s > solver.T:
                problems.append(f"output.snapshot_times: {s} exceeds T = {solver.T}")
    # the support check needs a valid grid and mesh, and gamma only for the Barenblatt profile
    probe = solver if solver is not None else (SolverConfig() if initial.get("profile") != "barenblatt" else None)
    initial_ok = not any(msg.startswith("initial") for msg in problems)
    cfg = None
    if grid is not None and mesh is not None and probe is not None and initial_ok:
        cfg = RunConfig(grid, mesh, probe, initial, out_dir, name, base_dir)
        try:
            n0 = initial_population(cfg, lift=False)
        except (PhenotumorError, OSError, ValueError) as exc:
            problems.append(f"initial: {exc}")
        else:
            problems.extend(_support_problems(n0, cfg))
    if problems:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(problems), problems)
    return cfg


def _parse_grid(g, problems):
    extents = g.get("extents", [[-4.0, 4.0]])
    cells = g.get("cells", [400])
    if isinstance(cells, int):
        cells = [cells]
    ok = (isinstance(extents, list) and all(isinstance(e, list) and len(e) == 2 for e in extents)
          and isinstance(cells, list) and len(cells) == len(extents))
    if not ok:
        problems.append("grid: 'extents' must be a list of [min, max] pairs matching 'cells'")
        return None
    try:
        return SpatialGrid(tuple((float(a), float(b)) for a, b in extents), tuple(int(c) for c in cells))
    except (PhenotumorError, TypeError, ValueError) as exc:
        problems.append(f"grid: {exc}")
        return None


def _parse_reaction(r, base_dir, problems):
    family = r.get("family", "linear_inhibition")
    p_M = _number("reaction", "p_M", r.get("p_M", 1.0), problems, positive=True)
    if p_M is None:
        return None
    try:
        if family == "linear_inhibition":
            extra = set(r) - {"family", "g0", "g1", "p_M"}
            if extra:
                problems.append(f"reaction: keys {sorted(extra)} do not apply to linear_inhibition")
            g0 = _number("reaction", "g0", r.get("g0", 1.0), problems)
            g1 = _number("reaction", "g1", r.get("g1", 0.0), problems)
            if g0 is None or g1 is None:
                return None
            spec = ReactionSpec.linear(g0, g1, p_M)
        elif family == "custom_tabulated":
            if "file" not in r:
                problems.append("reaction.file: required for custom_tabulated")
                return None
            spec = read_tabulated_csv(base_dir / r["file"], p_M)
        elif family == "none":
            return ReactionSpec.zero(p_M)
        else:
            problems.append(f"reaction.family: unknown family {family!r}")
            return None
    except (PhenotumorError, OSError, ValueError) as exc:
        problems.append(f"reaction: {exc}")
        return None
    report = validate_reaction(spec)
    if not report.ok:
        problems.append("reaction: " + report.summary().replace("\n", "; "))
    return spec


def _parse_solver(s, reaction, snaps, problems):
    if reaction is None:
        return None
    kw = {}
    for key in ("gamma", "eps", "c_cfl", "T"):
        if key in s:
            v = _number("solver", key, s[key], problems)
            if v is not None:
                kw[key] = v
    if s.get("record_interval") is not None:
        v = _number("solver", "record_interval", s["record_interval"], problems, positive=True)
        if v is not None:
            kw["record_interval"] = v
    if "boundary_policy" in s:
        if s["boundary_policy"] not in BOUNDARY_POLICIES:
            problems.append(f"solver.boundary_policy: must be one of {BOUNDARY_POLICIES}")
        else:
            kw["boundary_policy"] = s["boundary_policy"]
    if "alphas" in s:
        if not isinstance(s["alphas"], list) or not s["alphas"]:
            problems.append("solver.alphas: expected a nonempty list")
        else:
            kw["alphas"] = tuple(_number("solver", "alphas", a, problems, nonneg=True) or 0.0 for a in s["alphas"])
    if s.get("average_window") is not None:
        w = s["average_window"]
        if not (isinstance(w, list) and len(w) == 2):
            problems.append("solver.average_window: expected [start, end]")
        else:
            kw["average_window"] = tuple(float(v) for v in w)
    for key in ("allow_unit_gamma", "compiled"):
        if key in s:
            if not isinstance(s[key], bool):
                problems.append(f"solver.{key}: expected true or false")
            else:
                kw[key] = s[key]
    # report each out-of-range value separately before the dataclass check
    g = kw.get("gamma", 2.0)
    if g < 1 or (g == 1 and not kw.get("allow_unit_gamma", False)):
        problems.append(f"solver.gamma: pressure law needs gamma > 1, got {g}")
    if kw.get("eps", 0.0) < 0:
        problems.append(f"solver.eps: must be nonnegative, got {kw['eps']}")
    if not 0 < kw.get("c_cfl", 0.4) <= 1:
        problems.append(f"solver.c_cfl: must lie in (0, 1], got {kw['c_cfl']}")
    if kw.get("T", 1.0) < 0:
        problems.append(f"solver.T: must be nonnegative, got {kw['T']}")
    if problems:
        return None
    try:
        return SolverConfig(reaction=reaction, snapshot_times=tuple(snaps), **kw)
    except PhenotumorError as exc:
        problems.append(f"solver: {exc}")
        return None


def _parse_initial(d, problems):
    d = dict(d)
    profile = d.setdefault("profile", "box")
    if profile not in PROFILE_KEYS:
        problems.append(f"initial.profile: unknown profile {profile!r} (use {sorted(PROFILE_KEYS)})")
        return d
    extra = set(d) - PROFILE_KEYS[profile] - {"profile", "lift"}
    if extra:
        problems.append(f"initial: keys {sorted(extra)} do not apply to profile {profile!r}")
    lift = d.setdefault("lift", "auto")
    if lift not in (True, False, "auto"):
        problems.append("initial.lift: expected true, false or \"auto\"")
    for key in PROFILE_KEYS[profile] - {"path"}:
        if key in d:
            positive = key in ("width", "cutoff", "mass", "t0", "half_width")
            if _number("initial", key, d[key], problems, positive=positive) is None:
                d.pop(key)
    if profile == "file" and not isinstance(d.get("path"), str):
        problems.append("initial.path: required string for profile 'file'")
    return d


def _support_problems(n0, cfg: RunConfig):
    rho0 = cfg.mesh.integrate(n0)
    out = []
    if np.any(n0 < 0):
        out.append("initial: data must be nonnegative")
    if not np.any(rho0 > 0):
        return out
    for ax in range(cfg.grid.dim):
        a, b = cfg.grid.extents[ax]
        margin = SUPPORT_MARGIN * (b - a)
        other = tuple(k for k in range(cfg.grid.dim) if k != ax)
        occupied = np.any(rho0 > 0, axis=other) if other else rho0 > 0
        x = cfg.grid.axis_centers(ax)[occupied]
        if x.min() - 0.5 * cfg.grid.h < a + margin or x.max() + 0.5 * cfg.grid.h > b - margin:
            out.append(f"initial: support [{x.min():.4g}, {x.max():.4g}] along axis {ax} is closer than "
                       f"{SUPPORT_MARGIN:.0%} of the domain to the boundary of [{a:g}, {b:g}]")
    return out


# --- initial data -----------------------------------------------------------

def initial_population(cfg: RunConfig, lift: bool | None = None) -> np.ndarray:
    """Population field n0 of shape (N_y, *grid.shape) described by ``cfg.initial``.

    Analytic profiles are copied onto every trait layer. With ``lift`` left
    as None the eps-lift is applied whenever eps > 0 (``"lift": "auto"``).
    """
    d, grid, mesh = cfg.initial, cfg.grid, cfg.mesh
    profile = d.get("profile", "box")
    if profile == "box":
        base = box_profile(grid, d.get("half_width", 0.5), d.get("level", 0.6), d.get("center", 0.0))
        n0 = uniform_population(base, mesh)
    elif profile == "gaussian-truncated":
        base = truncated_gaussian(grid, d.get("amplitude", 0.5), d.get("width", 0.5), d.get("cutoff", 1.0))
        n0 = uniform_population(base, mesh)
    elif profile == "barenblatt":
        prof = BarenblattProfile.from_params(cfg.solver.gamma, grid.dim, d.get("mass", 1.0), d.get("t0", 0.1))
        x = grid.x if grid.dim == 1 else grid.coordinates()
        n0 = uniform_population(barenblatt_density(x, 0.0, prof), mesh)
    elif profile == "file":
        n0 = _read_initial_file(cfg.base_dir / d["path"], grid, mesh)
    else:
        raise ConfigError(f"unknown initial profile {profile!r}")
    if lift is None:
        mode = d.get("lift", "auto")
        lift = cfg.solver.eps > 0 if mode == "auto" else bool(mode)
    if lift:
        n0 = lift_initial_data(n0, cfg.solver.eps, grid)
    return check_population(n0, grid, mesh)


def _read_initial_file(path: Path, grid, mesh):
    if path.suffix == ".npy":
        arr = np.load(path)
        if arr.shape == grid.shape:
            return uniform_population(arr, mesh)
        return arr
    header, rows = read_csv(path)
    cols = [c for c in header if c.startswith("n_")]
    if cols:
        if len(cols) != mesh.n_nodes:
            raise ConfigError(f"{path}: {len(cols)} trait columns, config expects {mesh.n_nodes}")
        n0 = np.array([rows[:, header.index(c)] for c in cols])
    elif "rho" in header:
        n0 = uniform_population(rows[:, header.index("rho")], mesh)
    else:
        raise ConfigError(f"{path}: expected 'rho' or 'n_j' columns")
    return n0.reshape((mesh.n_nodes,) + grid.shape)


# --- CSV --------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, rows, schema: str, meta: dict | None = None) -> None:
    lines = [f"# schema: {schema}"]
    for k, v in (meta or {}).items():
        lines.append(f"# {k}: {v}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Header and float rows of a CSV written by ``write_csv`` (comment lines skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    return header, rows.reshape(-1, len(header))


def read_schema(path) -> str | None:
    for ln in Path(path).read_text().splitlines():
        if ln.startswith("# schema: "):
            return ln[len("# schema: "):]
    return None


def snapshot_rows(n, grid: SpatialGrid, mesh: PhenotypeMesh, gamma: float):
    rho = mesh.integrate(n)
    p = rho ** gamma
    v = v_field(rho, gamma, allow_unit=True)
    coords = [c.ravel() for c in grid.coordinates()]
    names = ["x", "y"][:grid.dim]
    header = names + ["rho", "p", "v"] + [f"n_{j}" for j in range(mesh.n_nodes)]
    cols = coords + [rho.ravel(), p.ravel(), v.ravel()] + [n[j].ravel() for j in range(mesh.n_nodes)]
    return header, np.column_stack(cols)


def write_outputs(traj: Trajectory, cfg: RunConfig, out_dir: Path) -> list[Path]:
    """Snapshot CSVs (one per stored time) and the diagnostics time series."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for k, (t, n) in enumerate(traj.snapshots):
        header, rows = snapshot_rows(n, cfg.grid, cfg.mesh, cfg.solver.gamma)
        path = out_dir / f"snapshot_{k:03d}.csv"
        write_csv(path, header, rows, SNAPSHOT_SCHEMA, {"t": _fmt(t)})
        written.append(path)
    path = out_dir / "diagnostics.csv"
    write_csv(path, diagnostics_header(cfg.solver.alphas), [r.values() for r in traj.records], DIAGNOSTICS_SCHEMA)
    written.append(path)
    return written


def diagnostics_header(alphas) -> list[str]:
    return DiagnosticsRecord(0, *([0.0] * 12), weighted_grad4={float(a): 0.0 for a in alphas}).columns()


def output_root() -> Path:
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def resolve_out(cfg: RunConfig, out=None) -> Path:
    """--out wins; otherwise output.dir (relative to the output root) or <root>/<config name>."""
    if out is not None:
        return Path(out)
    if cfg.out_dir is not None:
        p = Path(cfg.out_dir)
        return p if p.is_absolute() else output_root() / p
    return output_root() / cfg.name


# --- commands ---------------------------------------------------------------

def execute_run(cfg: RunConfig, out=None, **run_kw) -> Trajectory:
    n0 = initial_population(cfg)
    traj = run(n0, cfg.solver, cfg.grid, cfg.mesh, **run_kw)
    if out is not False:
        write_outputs(traj, cfg, resolve_out(cfg, out))
    return traj


def cmd_run(cfg: RunConfig, out=None) -> int:
    """Run one simulation and write its CSV files; 0 on success, 2 on a solver failure."""
    try:
        execute_run(cfg, out)
    except (PhenotumorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


@dataclass
class SweepResult:
    """One row per requested parameter value; failed entries carry an error message."""

    parameter: str
    values: list
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r["status"] != "ok"]

    def column(self, name) -> np.ndarray:
        return np.array([r.get(name, math.nan) for r in self.rows], dtype=float)

    def write(self, path) -> None:
        # runtime stays out of the data file so repeated sweeps are byte-identical
        header = [self.parameter, "status"] + self.columns
        rows = [[_fmt(r[self.parameter]), r["status"]] + [r.get(c, math.nan) for c in self.columns]
                for r in self.rows]
        write_csv(path, header, rows, SWEEP_SCHEMA)


GAMMA_COLUMNS = ["steps", "saturation_avg", "complementarity_avg", "grad_p_l4_int", "hessian_weighted_int",
                 "saturation_final", "complementarity_final", "sup_rho_final", "mass_final"]
EPS_COLUMNS = ["steps", "l1_rho_diff", "l2_v_diff", "mass_final"]


def _sweep_entry(args):
    cfg, out_dir, keep_fields = args
    start = time.perf_counter()
    try:
        traj = execute_run(cfg, out_dir)
    except PhenotumorError as exc:
        return {"status": f"failed: {type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " "),
                "runtime": time.perf_counter() - start}
    a, b = cfg.solver.window
    span = b - a
    last = traj.records[-1]
    row = {
        "status": "ok",
        "steps": traj.steps,
        "saturation_avg": traj.window_integrals["saturation_residual"] / span if span > 0 else last.saturation_residual,
        "complementarity_avg": (traj.window_integrals["complementarity_residual"] / span if span > 0
                                else last.complementarity_residual),
        "grad_p_l4_int": traj.integrals["grad_p_l4"],
        "hessian_weighted_int": traj.integrals["hessian_weighted"],
        "saturation_final": last.saturation_residual,
        "complementarity_final": last.complementarity_residual,
        "sup_rho_final": last.sup_rho,
        "mass_final": last.mass,
        "runtime": time.perf_counter() - start,
        "monitors": traj.monitors,
    }
    if keep_fields:
        row["rho"] = traj.final.rho
        row["v"] = traj.final.v
    return row


def _map(func, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(func, items))
    return [func(it) for it in items]


def _sweep_dir(cfg, out, prefix):
    return resolve_out(cfg, out) / prefix


def cmd_gamma_sweep(cfg: RunConfig, gammas, out=None, jobs: int = 1, write: bool = True) -> SweepResult:
    """Run cfg once per gamma on the same grid and tabulate residuals over the averaging window."""
    gammas = [float(g) for g in gammas]
    problems = []
    if not gammas:
        problems.append("gamma list is empty")
    if any(g <= 1 for g in gammas):
        problems.append("every gamma must exceed 1")
    if any(b <= a for a, b in zip(gammas, gammas[1:])):
        problems.append("gamma list must be strictly increasing")
    if problems:
        raise ConfigError("invalid gamma list: " + "; ".join(problems), problems)
    root = _sweep_dir(cfg, out, "gamma_sweep")
    items = [(cfg.with_solver(gamma=g), (root / f"gamma_{g:g}") if write else False, False) for g in gammas]
    rows = _map(_sweep_entry, items, jobs)
    result = SweepResult("gamma", gammas, columns=list(GAMMA_COLUMNS))
    for g, row in zip(gammas, rows):
        row["gamma"] = g
        result.rows.append(row)
    if write:
        result.write(root / "sweep.csv")
    return result


def cmd_epsilon_sweep(cfg: RunConfig, epsilons, out=None, jobs: int = 1, write: bool = True) -> SweepResult:
    """Run cfg once per eps and compare final rho (L1) and v (L2) with the eps = 0 run on the same grid."""
    epsilons = [float(e) for e in epsilons]
    problems = []
    if not epsilons:
        problems.append("eps list is empty")
    if any(e < 0 for e in epsilons):
        problems.append("every eps must be nonnegative")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        problems.append("eps list must be strictly decreasing")
    if 0.0 not in epsilons:
        problems.append("eps list must contain 0 as the reference")
    if problems:
        raise ConfigError("invalid eps list: " + "; ".join(problems), problems)
    root = _sweep_dir(cfg, out, "epsilon_sweep")
    items = [(cfg.with_solver(eps=e), (root / f"eps_{e:g}") if write else False, True) for e in epsilons]
    rows = _map(_sweep_entry, items, jobs)
    ref = rows[epsilons.index(0.0)]
    result = SweepResult("eps", epsilons, columns=list(EPS_COLUMNS))
    grid = cfg.grid
    for e, row in zip(epsilons, rows):
        row["eps"] = e
        if row["status"] == "ok" and ref["status"] == "ok":
            row["l1_rho_diff"] = grid.integrate(np.abs(row["rho"] - ref["rho"]))
            row["l2_v_diff"] = math.sqrt(grid.integrate((row["v"] - ref["v"]) ** 2))
        elif row["status"] == "ok":
            row["status"] = "failed: reference run failed"
        result.rows.append(row)
    if write:
        result.write(root / "sweep.csv")
    return result


def load_reference_config(name: str, config_dir=None) -> RunConfig:
    """One of the bundled scenario configs (or a file of the same name under ``config_dir``)."""
    if config_dir is None:
        config_dir = Path(__file__).parent / "configs"
    config_dir = Path(config_dir)
    if not config_dir.is_dir():
        raise FileNotFoundError(f"config directory not found: {config_dir}")
    return parse_config(config_dir / f"{name}.json")
