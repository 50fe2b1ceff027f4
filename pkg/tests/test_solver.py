import math
import warnings

import numpy as np
import pytest

from phenotumor.core_fields import PhenotypeMesh, SpatialGrid, uniform_population
from phenotumor.errors import BoundaryContactError, ParameterError, StepError
from phenotumor.oracles import ode_reference
from phenotumor.reaction_model import MutationKernel, ReactionSpec, box_profile, lift_initial_data
from phenotumor.solver import (
    SolverConfig,
    layer_sum_defect,
    make_state,
    run,
    stable_dt,
    step,
    step_density_only,
)


def _state(rho, grid, cfg, mesh=None):
    mesh = mesh or PhenotypeMesh(1)
    return make_state(uniform_population(rho, mesh), grid, mesh, cfg)


def test_config_validation():
    with pytest.raises(ParameterError):
        SolverConfig(gamma=1.0)
    with pytest.raises(ParameterError):
        SolverConfig(eps=-1)
    with pytest.raises(ParameterError):
        SolverConfig(c_cfl=1.5)
    with pytest.raises(ParameterError):
        SolverConfig(T=-1)
    with pytest.raises(ParameterError):
        SolverConfig(boundary_policy="explode")
    assert SolverConfig(gamma=1.0, allow_unit_gamma=True).rho_M == 1.0


def test_stable_dt_reference_example():
    # h = 0.01, gamma = 2, p_max = 1, grad p = 0 inside, ||R|| = 1, c_cfl = 1
    g = SpatialGrid.line(-2, 2, 400)
    cfg = SolverConfig(gamma=2.0, c_cfl=1.0, reaction=ReactionSpec.linear(1.0, 0.0, 1.0), boundary_policy="ignore")
    st = _state(np.ones(400), g, cfg)
    assert stable_dt(st, cfg) == pytest.approx(2.5e-5, rel=1e-12)


def test_stable_dt_viscous_vacuum_and_scaling():
    cfg = SolverConfig(gamma=2.0, eps=0.1, c_cfl=1.0, reaction=ReactionSpec.linear(1e-3, 0.0, 1.0))
    g = SpatialGrid.line(-1, 1, 200)
    assert stable_dt(_state(np.zeros(200), g, cfg), cfg) == pytest.approx(g.h ** 2 / 0.2, rel=1e-12)
    g2 = SpatialGrid.line(-1, 1, 100)
    assert stable_dt(_state(np.zeros(100), g2, cfg), cfg) == pytest.approx(
        4 * stable_dt(_state(np.zeros(200), g, cfg), cfg), rel=1e-12)


def test_vacuum_is_fixed_point():
    g = SpatialGrid.line(-1, 1, 20)
    cfg = SolverConfig()
    st = step(_state(np.zeros(20), g, cfg), 1e-3, cfg)
    assert np.all(st.n == 0)
    np.testing.assert_array_equal(step_density_only(np.zeros(20), 1e-3, cfg, g), 0.0)


def test_single_cell_mass_conserved():
    g = SpatialGrid.line(-1, 1, 40)
    cfg = SolverConfig(gamma=3.0, reaction=ReactionSpec.zero())
    rho = np.zeros(40)
    rho[20] = 0.9
    st = _state(rho, g, cfg)
    m0 = g.integrate(st.rho)
    for _ in range(200):
        st = step(st, stable_dt(st, cfg), cfg)
    assert abs(g.integrate(st.rho) - m0) <= 1e-15 * m0 * 10
    assert np.count_nonzero(st.rho) > 1


def test_uniform_step_is_forward_euler_of_ode():
    g = SpatialGrid.line(-20, 20, 40)
    mesh = PhenotypeMesh(2)
    spec = ReactionSpec.linear(1.0, 0.5, 1.0)
    cfg = SolverConfig(gamma=2.0, reaction=spec, boundary_policy="ignore")
    n = np.array([0.3, 0.5])[:, None] * np.ones((1, 40))
    st = make_state(n, g, mesh, cfg)
    dt = 1e-3
    centre = 20
    t = 0.0
    for _ in range(10):
        prev = st.n[:, centre].copy()
        st = step(st, dt, cfg)
        t += dt
        rho = prev.mean()
        euler = prev * (1 + dt * spec.rates(mesh.nodes, np.array(rho ** 2)).ravel())
        np.testing.assert_allclose(st.n[:, centre], euler, rtol=1e-14)
        ref = ode_reference(prev, spec, 2.0, dt, mesh, dt=dt / 10)
        assert np.max(np.abs(st.n[:, centre] - ref)) < dt ** 2
    ref = ode_reference(n[:, centre], spec, 2.0, t, mesh, dt=1e-5)
    assert np.max(np.abs(st.n[:, centre] - ref)) < 10 * dt ** 2


def test_step_rejects_large_dt_and_guard_trips():
    g = SpatialGrid.line(-1, 1, 40)
    cfg = SolverConfig(gamma=2.0)
    st = _state(box_profile(g, 0.3, 0.9), g, cfg)
    dt = stable_dt(st, cfg)
    with pytest.raises(ParameterError):
        step(st, 3 * dt, cfg)
    with pytest.raises(ParameterError):
        step(st, 0.0, cfg)
    with pytest.raises(StepError) as info:
        step(st, 200 * dt, cfg, force=True)
    assert info.value.min_value < 0 and info.value.location is not None


def test_boundary_contact_policies():
    g = SpatialGrid.line(-1, 1, 20)
    rho0 = box_profile(g, 0.85, 0.9)
    cfg = SolverConfig(gamma=2.0, T=0.3)
    with pytest.raises(BoundaryContactError):
        run(uniform_population(rho0, PhenotypeMesh(1)), cfg, g, PhenotypeMesh(1))
    warn_cfg = SolverConfig(gamma=2.0, T=0.3, boundary_policy="warn")
    with pytest.warns(RuntimeWarning, match="boundary"):
        traj = run(uniform_population(rho0, PhenotypeMesh(1)), warn_cfg, g, PhenotypeMesh(1))
    assert len(traj.boundary_warnings) == 1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run(uniform_population(rho0, PhenotypeMesh(1)), SolverConfig(gamma=2.0, T=0.3, boundary_policy="ignore"),
            g, PhenotypeMesh(1))


def test_run_zero_horizon():
    g = SpatialGrid.line(-2, 2, 40)
    n0 = uniform_population(box_profile(g, 0.5, 0.5), PhenotypeMesh(1))
    traj = run(n0, SolverConfig(T=0.0), g, PhenotypeMesh(1))
    assert traj.steps == 0 and traj.final.t == 0.0
    np.testing.assert_array_equal(traj.final.n, n0)
    assert len(traj.snapshots) == 1 and len(traj.records) == 1


def test_run_rejects_bad_data():
    g = SpatialGrid.line(-2, 2, 40)
    m = PhenotypeMesh(1)
    with pytest.raises(ParameterError):
        run(uniform_population(box_profile(g, 0.5, 1.2), m), SolverConfig(), g, m)
    with pytest.raises(ParameterError):
        run(uniform_population(box_profile(g, 0.5, 0.5), m), SolverConfig(reaction=ReactionSpec.linear(0, 1, 1)), g, m)


def test_gronwall_and_sup_bound():
    g = SpatialGrid.line(-3, 3, 200)
    m = PhenotypeMesh(3)
    cfg = SolverConfig(gamma=4.0, reaction=ReactionSpec.linear(1.0, 1.0, 1.0), T=0.5)
    traj = run(uniform_population(box_profile(g, 0.5, 0.7), m), cfg, g, m)
    mon = traj.monitors
    assert mon.max_gronwall_ratio <= 1 + 1e-10
    assert mon.max_sup_rho <= cfg.rho_M * (1 + 10 * g.h)
    assert mon.min_raw >= -1e-14
    for rec in traj.records:
        assert rec.mass <= mon.mass0 * math.exp(cfg.rate_bound * rec.t) * (1 + 1e-10)


def test_density_only_matches_single_layer_step():
    g = SpatialGrid.line(-2, 2, 100)
    cfg = SolverConfig(gamma=3.0, reaction=ReactionSpec.linear(1.0, 0.0, 1.0), T=0.2)
    st = _state(np.maximum(0.8 - g.x ** 2, 0), g, cfg)
    rho = st.rho.copy()
    for _ in range(50):
        dt = stable_dt(st, cfg)
        rho = step_density_only(rho, dt, cfg, g)
        st = step(st, dt, cfg)
        np.testing.assert_allclose(st.rho, rho, rtol=0, atol=1e-12)


def test_density_only_constant_interior():
    g = SpatialGrid.line(-2, 2, 40)
    cfg = SolverConfig(gamma=2.0, reaction=ReactionSpec.zero(), boundary_policy="ignore")
    out = step_density_only(np.full(40, 0.5), 1e-4, cfg, g)
    np.testing.assert_array_equal(out[1:-1], 0.5)
    assert out[0] < 0.5 and out[-1] < 0.5  # Dirichlet ghosts drain the edge cells


def test_layer_sum_defect_trait_dependent():
    g = SpatialGrid.line(-3, 3, 120)
    m = PhenotypeMesh(4)
    cfg = SolverConfig(gamma=5.0, reaction=ReactionSpec.linear(1.0, 0.5, 1.0))
    rng = np.random.default_rng(2)
    n = rng.random((4, 120)) * box_profile(g, 1.0, 1.0) * 0.9
    st = make_state(n, g, m, cfg)
    assert layer_sum_defect(st, stable_dt(st, cfg), cfg) <= 1e-12


def test_mutation_diagonal_matches_plain_run():
    g = SpatialGrid.line(-3, 3, 120)
    m = PhenotypeMesh(3)
    spec = ReactionSpec.linear(1.0, 0.5, 1.0)
    n0 = uniform_population(box_profile(g, 0.5, 0.6), m)
    base = SolverConfig(gamma=3.0, reaction=spec, T=0.2, record_interval=0.1)
    kern = MutationKernel.diagonal(spec, m, np.linspace(0, 4, 401))
    plain = run(n0, base, g, m)
    mutated = run(n0, SolverConfig(gamma=3.0, reaction=spec, T=0.2, record_interval=0.1, mutation=kern), g, m)
    assert plain.final.t == mutated.final.t == 0.2
    np.testing.assert_allclose(mutated.final.n, plain.final.n, atol=1e-3)


def test_tabulated_run_matches_linear():
    g = SpatialGrid.line(-3, 3, 120)
    m = PhenotypeMesh(2)
    p = np.linspace(0, 2, 5)
    table = (1 + 0.5 * m.nodes)[:, None] * (1 - p)[None]
    tab = ReactionSpec.tabulated(m.nodes, p, table, 1.0)
    lin = ReactionSpec.linear(1.0, 0.5, 1.0)
    n0 = uniform_population(box_profile(g, 0.5, 0.6), m)
    a = run(n0, SolverConfig(gamma=3.0, reaction=lin, T=0.2), g, m)
    b = run(n0, SolverConfig(gamma=3.0, reaction=tab, T=0.2), g, m)
    assert a.steps == b.steps
    np.testing.assert_allclose(b.final.n, a.final.n, rtol=1e-10, atol=1e-13)


def test_two_dimensional_run_conserves_mass_and_symmetry():
    g = SpatialGrid(((-2, 2), (-2, 2)), (40, 40))
    m = PhenotypeMesh(1)
    cfg = SolverConfig(gamma=2.0, reaction=ReactionSpec.zero(), T=0.05)
    rho0 = np.where(g.radius_squared() < 0.5, 0.8, 0.0)
    traj = run(uniform_population(rho0, m), cfg, g, m)
    rho = traj.final.rho
    assert traj.monitors.max_rel_mass_drift < 1e-13
    np.testing.assert_allclose(rho, rho.T, atol=1e-14)
    np.testing.assert_allclose(rho, rho[::-1], atol=1e-14)


def test_viscous_subsolution_bound():
    g = SpatialGrid.line(-4, 4, 200)
    m = PhenotypeMesh(1)
    eps, gamma = 0.05, 2.0
    cfg = SolverConfig(gamma=gamma, eps=eps, T=0.3)
    n0 = lift_initial_data(np.zeros((1, 200)), eps, g)
    K = 2 * (eps + gamma) + cfg.rate_bound
    inside = np.abs(g.x) <= 2
    worst = []
    run(n0, cfg, g, m, callback=lambda t, rho, n: worst.append(
        np.min(rho[inside] / (0.9 * eps * math.exp(-K * t) * np.exp(-g.x[inside] ** 2)))))
    assert min(worst) >= 1.0


def test_time_integrated_gradient_bound():
    g = SpatialGrid.line(-3, 3, 300)
    m = PhenotypeMesh(2)
    gamma = 5.0
    cfg = SolverConfig(gamma=gamma, reaction=ReactionSpec.linear(1.0, 0.5, 1.0), T=0.5)
    n0 = uniform_population(box_profile(g, 0.5, 0.6), m)
    p_int = [0.0]
    last = [0.0, g.integrate(m.integrate(n0) ** gamma)]

    def acc(t, rho, n):
        p_int[0] += (t - last[0]) * last[1]
        last[:] = [t, g.integrate(rho ** gamma)]

    traj = run(n0, cfg, g, m, callback=acc)
    p0 = g.integrate(m.integrate(n0) ** gamma)
    bound = (gamma * cfg.rate_bound * p_int[0] + p0) / (gamma - 1)
    assert traj.integrals["grad_p_l2"] <= 1.1 * bound


def test_run_is_deterministic():
    g = SpatialGrid.line(-3, 3, 100)
    m = PhenotypeMesh(2)
    cfg = SolverConfig(gamma=3.0, reaction=ReactionSpec.linear(1.0, 0.5, 1.0), T=0.2)
    n0 = uniform_population(box_profile(g, 0.5, 0.6), m)
    a, b = run(n0, cfg, g, m), run(n0, cfg, g, m)
    np.testing.assert_array_equal(a.final.n, b.final.n)
    assert a.integrals == b.integrals
