import math

import numpy as np
import pytest

from phenotumor.core_fields import PhenotypeMesh, SpatialGrid, uniform_population
from phenotumor.errors import DimensionError, DomainError, ModeError, ParameterError
from phenotumor.reaction_model import (
    MutationKernel,
    ReactionSpec,
    box_profile,
    check_well_prepared,
    lift_initial_data,
    mean_reaction,
    mutation_reaction,
    reaction_rate,
    read_tabulated_csv,
    truncated_gaussian,
    validate_reaction,
)


def test_reaction_rate_examples():
    spec = ReactionSpec.linear(1.0, 0.0, 1.0)
    assert reaction_rate(0.3, 1.0, spec) == 0.0
    assert reaction_rate(0.3, 0.0, spec) == 1.0
    assert reaction_rate(0.0, 0.5, spec) == 0.5
    spec2 = ReactionSpec.linear(1.0, 0.5, 2.0)
    assert reaction_rate(1.0, 0.5, spec2) == pytest.approx(1.5 * 0.75)


def test_reaction_rate_domain():
    spec = ReactionSpec.linear()
    with pytest.raises(DomainError):
        reaction_rate(0.5, -0.1, spec)
    with pytest.raises(DomainError):
        reaction_rate(1.5, 0.1, spec)


def test_linear_sign_structure():
    spec = ReactionSpec.linear(0.8, 0.7, 1.3)
    y = np.linspace(0, 1, 11)
    r = spec.rates(y, np.array([0.0, 0.65, 1.3, 2.0]))
    assert np.all(r[:, :2] > 0) and np.all(r[:, 2] == 0) and np.all(r[:, 3] < 0)


def test_validate_linear_passes():
    rep = validate_reaction(ReactionSpec.linear(1.0, 0.5, 1.0))
    assert rep.ok and rep.sup_norm == 1.5 and not rep.violations


def test_validate_zero_growth_fails_at_y0():
    rep = validate_reaction(ReactionSpec.linear(0.0, 1.0, 1.0))
    assert not rep.ok
    assert any(v.condition == "R(y,0) > 0" and v.y == 0.0 for v in rep.violations)


def test_validate_tabulated_increasing_column():
    y = np.array([0.0, 0.5, 1.0])
    p = np.linspace(0, 1, 5)
    table = np.array([1.0 - p, 1.0 - p, 1.0 - p])
    table[1, 3] = table[1, 2] + 0.1  # increases between p=0.5 and p=0.75
    rep = validate_reaction(ReactionSpec.tabulated(y, p, table, 1.0))
    assert not rep.ok
    locs = {(v.y, v.p) for v in rep.violations if v.condition == "dR/dp <= 0"}
    assert (0.5, 0.75) in locs
    assert all(v.y == 0.5 for v in rep.violations)


def test_tabulated_matches_linear_on_nodes(tmp_path):
    p = np.linspace(0, 1, 9)
    y = np.array([0.25, 0.75])
    table = (1 + y)[:, None] * (1 - p)[None]
    f = tmp_path / "r.csv"
    f.write_text("# comment\ny\\p," + ",".join(map(str, p)) + "\n"
                 + "\n".join(f"{yy}," + ",".join(map(str, row)) for yy, row in zip(y, table)) + "\n")
    spec = read_tabulated_csv(f, 1.0)
    lin = ReactionSpec.linear(1.0, 1.0, 1.0)
    pp = np.array([0.0, 0.3, 0.77, 1.0])
    np.testing.assert_allclose(spec.rates(y, pp), lin.rates(y, pp), atol=1e-15)
    assert spec.sup_norm == 1.75
    assert validate_reaction(spec).ok


def test_mean_reaction_examples():
    m = PhenotypeMesh(2)
    spec = ReactionSpec.linear(1.0, 1.0, 1.0)  # (1 + y)(1 - p)
    sigma = np.array([[0.5], [1.5]])
    # hand quadrature: (0.5 * 1.25 + 1.5 * 1.75) / 2
    assert mean_reaction(sigma, np.array([0.0]), m, spec)[0] == pytest.approx(1.625, abs=1e-15)
    flat = ReactionSpec.linear(2.0, 0.0, 1.0)
    m3 = PhenotypeMesh(3)
    p = np.array([0.0, 0.4, 0.9])
    np.testing.assert_allclose(mean_reaction(np.ones((3, 3)), p, m3, flat), 2.0 * (1 - p))
    np.testing.assert_array_equal(mean_reaction(np.zeros((3, 3)), p, m3, flat), 0.0)
    with pytest.raises(DimensionError):
        mean_reaction(np.ones((2, 3)), p, m3, flat)


def test_mutation_diagonal_reduces_to_reaction():
    rng = np.random.default_rng(3)
    m = PhenotypeMesh(5)
    spec = ReactionSpec.linear(1.0, 0.5, 1.0)
    kernel = MutationKernel.diagonal(spec, m, np.linspace(0, 2, 21))
    n = rng.random((5, 30))
    p = rng.random(30)
    direct = n * spec.rates(m.nodes, p)
    np.testing.assert_allclose(mutation_reaction(n, p, kernel, m), direct, rtol=1e-13, atol=1e-15)


def test_mutation_constant_and_zero():
    m = PhenotypeMesh(4)
    kernel = MutationKernel.constant(0.7, m)
    n = np.random.default_rng(1).random((4, 6))
    out = mutation_reaction(n, np.full(6, 0.3), kernel, m)
    np.testing.assert_allclose(out, 0.7 * m.integrate(n)[None].repeat(4, 0))
    np.testing.assert_array_equal(mutation_reaction(np.zeros((4, 6)), np.zeros(6), kernel, m), 0.0)
    with pytest.raises(ModeError):
        mutation_reaction(n, np.zeros(6), None, m)


def test_lift_examples():
    g = SpatialGrid.line(-6, 6, 600)
    n0 = np.zeros((2, 600))
    np.testing.assert_array_equal(lift_initial_data(n0, 0.0, g), n0)
    np.testing.assert_allclose(lift_initial_data(n0, 1.0, g)[1], np.exp(-g.x ** 2))
    eps = 0.3
    gained = g.integrate(lift_initial_data(n0, eps, g)[0])
    assert gained == pytest.approx(eps * math.sqrt(math.pi), rel=1e-10)
    with pytest.raises(ParameterError):
        lift_initial_data(n0, -1.0, g)


def test_well_prepared_examples():
    g = SpatialGrid.line(-2, 2, 40)
    m = PhenotypeMesh(2)
    gamma, p_M = 3.0, 2.0
    rho_M = p_M ** (1 / gamma)
    rep = check_well_prepared(uniform_population(box_profile(g, 0.5, rho_M), m), gamma, p_M, g, m)
    assert rep.ok and rep.at_bound and rep.sigma_sup == 1.0 and rep.boundary_clear
    prof = box_profile(g, 0.5, 0.5 * rho_M)
    prof[20] = 1.01 * rho_M
    rep = check_well_prepared(uniform_population(prof, m), gamma, p_M, g, m)
    assert not rep.ok and rep.exceed_locations == [(20,)]
    assert rep.second_moment > 0


def test_profiles():
    g = SpatialGrid.line(-2, 2, 8)
    np.testing.assert_array_equal(box_profile(g, 0.5, 0.6), [0, 0, 0, 0.6, 0.6, 0, 0, 0])
    tg = truncated_gaussian(g, 1.0, 1.0, 1.0)
    assert tg[0] == 0 and tg[3] == pytest.approx(math.exp(-0.0625))
