import numpy as np
import pytest

from torlog.errors import FacetLost, HemisphereViolation, InvalidInput, MaxIterations
from torlog.geometry import DiscreteSphericalMeasure, direction, hausdorff_distance, transform, wulff_shape
from torlog.solver import SolveOptions, forward_values, objective_j, residual, solve_discrete
from torlog.torsion import evaluate_level

from conftest import random_directions


def forward_measure(P, level=3, extrapolate=True, measure="boundary"):
    fw = forward_values(P, level, extrapolate, measure)
    return DiscreteSphericalMeasure(P.normals, P.supports * fw.mu / 4)


def test_options_validation():
    with pytest.raises(InvalidInput):
        SolveOptions(residual_tol=0)
    with pytest.raises(InvalidInput):
        SolveOptions(max_outer=0)
    with pytest.raises(InvalidInput):
        SolveOptions(target="other")


def test_objective_scale_invariant(pentagon):
    mu = DiscreteSphericalMeasure(pentagon.normals, [1, 2, 3, 1, 2])
    h = pentagon.supports * [1.0, 1.1, 0.9, 1.2, 1.0]
    assert objective_j(2 * h, mu)[0] == pytest.approx(objective_j(h, mu)[0], abs=1e-9)


def test_objective_gradient_symmetric(square2):
    mu = DiscreteSphericalMeasure(square2.normals, np.ones(4))
    _, g = objective_j(square2.supports, mu, level=3)
    assert np.ptp(g) <= 2e-2 * np.abs(g).max() + 1e-12


def test_objective_gradient_fd(square2):
    mu = DiscreteSphericalMeasure(square2.normals, [1.0, 2.0, 1.5, 0.7])
    h = square2.supports.copy()
    _, g = objective_j(h, mu)
    hp, hm = h.copy(), h.copy()
    hp[1] += 1e-4
    hm[1] -= 1e-4
    fd = (objective_j(hp, mu)[0] - objective_j(hm, mu)[0]) / 2e-4
    assert abs(g[1] / fd - 1) <= 2e-2


def test_objective_facet_lost():
    s = np.sqrt(0.5)
    dirs = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [s, s]])
    mu = DiscreteSphericalMeasure(dirs, np.ones(5))
    with pytest.raises(FacetLost):
        objective_j([1, 1, 1, 1, 2], mu)


def test_residual_examples(pentagon):
    mu = forward_measure(pentagon, level=4, extrapolate=False)
    assert residual(pentagon, mu, level=4, extrapolate=False) <= 5e-3
    r2 = residual(transform(pentagon, 2.0), mu, level=4, extrapolate=False)
    assert r2 == pytest.approx(15.0, rel=1e-2)
    w = mu.weights.copy()
    w[2] *= 2
    rd = residual(pentagon, DiscreteSphericalMeasure(mu.directions, w), level=4, extrapolate=False)
    assert rd == pytest.approx(0.5, abs=5e-3)


def test_hemisphere_rejected():
    mu = DiscreteSphericalMeasure(np.array([[1.0, 0], [-1, 0], [0, 1]]), np.ones(3))
    with pytest.raises(HemisphereViolation):
        solve_discrete(mu)


def test_round_trip_irregular():
    P0 = wulff_shape(direction([0.1, 1.5, 2.6, 3.9, 5.0]), [1.0, 0.8, 1.2, 0.9, 1.1])
    mu = forward_measure(P0, measure="variational")
    rep = solve_discrete(mu)
    assert rep.converged and rep.residual <= 1e-2
    assert hausdorff_distance(rep.polygon, P0) <= 1e-2 * P0.diameter
    assert np.all(np.diff(rep.objective_trace) <= 0)


def test_homogeneity_of_solution():
    rng = np.random.default_rng(11)
    mu = DiscreteSphericalMeasure(random_directions(rng, 6, 0.1), rng.uniform(0.5, 2, 6))
    a = solve_discrete(mu)
    b = solve_discrete(mu.scaled(16.0))
    assert np.allclose(b.polygon.supports, 2.0 * a.polygon.supports, rtol=1e-9)
    assert b.residual == pytest.approx(a.residual, rel=1e-6, abs=1e-12)


def test_report_invariants():
    rng = np.random.default_rng(5)
    mu = DiscreteSphericalMeasure(random_directions(rng, 7, 0.1), rng.uniform(0.5, 2, 7))
    opts = SolveOptions()
    rep = solve_discrete(mu, opts)
    P = rep.polygon
    assert rep.facet_alive.all() and np.all(P.supports > 0)
    assert residual(P, mu, opts.target, opts.mesh_level, opts.extrapolate) == pytest.approx(rep.residual, abs=1e-12)
    assert np.all(np.diff(rep.objective_trace) <= 0)
    # gamma = 0 condition and first-order condition at the unit-rigidity iterate
    P1 = transform(P, rep.T_final**-0.25)
    assert np.linalg.norm(mu.weights / P1.supports @ P1.normals) <= 1e-2 * mu.total / P1.diameter
    fw = forward_values(P1, opts.mesh_level, opts.extrapolate)
    assert np.abs(mu.total / 4 * P1.supports * fw.mu / mu.weights - 1).max() <= opts.residual_tol


def test_l0_target():
    rng = np.random.default_rng(8)
    mu = DiscreteSphericalMeasure(random_directions(rng, 6, 0.1), rng.uniform(0.5, 2, 6))
    cone = solve_discrete(mu)
    l0 = solve_discrete(mu, SolveOptions(target="l0"))
    assert l0.residual <= 1e-2
    # h mu = beta versus h mu / 4 = beta: a factor 4^(1/4) in size
    assert np.allclose(cone.polygon.supports / l0.polygon.supports, 4**0.25, rtol=1e-6)


def test_max_iterations_carries_report():
    rng = np.random.default_rng(9)
    mu = DiscreteSphericalMeasure(random_directions(rng, 7, 0.1), rng.uniform(0.5, 2, 7))
    with pytest.raises(MaxIterations) as info:
        solve_discrete(mu, SolveOptions(max_outer=1, residual_tol=1e-9))
    rep = info.value.report
    assert rep is not None and not rep.converged and rep.iterations == 1


def test_non_general_position_warns(square2):
    mu = DiscreteSphericalMeasure(square2.normals, [1.0, 1.2, 1.0, 1.2])
    with pytest.warns(RuntimeWarning):
        rep = solve_discrete(mu)
    assert rep.residual <= 1e-2
