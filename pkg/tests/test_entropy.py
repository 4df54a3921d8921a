import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torlog.entropy import gamma_star, phi, slacks
from torlog.errors import OutsideDomain
from torlog.geometry import DiscreteSphericalMeasure, box, transform, wulff_shape

from conftest import spanning_data


def _measure(P, rng):
    return DiscreteSphericalMeasure(P.normals, rng.uniform(0.2, 3.0, P.n_facets))


def _interior_point(P, rng):
    w = rng.dirichlet(np.ones(len(P.vertices)))
    return 0.98 * (w @ P.vertices) + 0.02 * P.vertex_centroid


def test_phi_examples(square2):
    mu = DiscreteSphericalMeasure(square2.normals, np.ones(4))
    ev = phi(square2, mu, [0.0, 0.0])
    assert ev.value == 0.0 and np.all(ev.gradient == 0.0)
    assert phi(square2, mu, [0.5, 0.0]).value == pytest.approx(np.log(0.75))
    assert phi(transform(square2, 2.0), mu, [0, 0]).value == pytest.approx(4 * np.log(2))
    with pytest.raises(OutsideDomain):
        phi(square2, mu, [1.0, 0.0])


def test_gamma_symmetric(square2):
    g, _, _ = gamma_star(square2, DiscreteSphericalMeasure(square2.normals, np.ones(4)))
    assert np.abs(g).max() <= 1e-10


def test_gamma_asymmetric_square_grid_oracle(square2):
    mu = DiscreteSphericalMeasure(square2.normals, [2.0, 1.0, 1.0, 1.0])
    g, _, _ = gamma_star(square2, mu)
    assert np.abs(g - [-1 / 3, 0]).max() <= 1e-8
    # brute-force grid at resolution 1e-4 along the symmetry axis
    x = np.arange(-0.9999, 1.0, 1e-4)
    vals = 2 * np.log(1 - x) + np.log(1 + x)
    assert abs(x[np.argmax(vals)] - g[0]) <= 1e-4


def test_gamma_translation(pentagon):
    rng = np.random.default_rng(0)
    mu = _measure(pentagon, rng)
    t = np.array([0.2, -0.1])
    g0, _, _ = gamma_star(pentagon, mu)
    g1, _, _ = gamma_star(transform(pentagon, 1.0, t), mu)
    assert np.abs(g1 - (g0 + t)).max() <= 1e-9


@given(spanning_data(), st.integers(0, 2**31))
@settings(max_examples=100)
def test_gamma_converges_fast(data, seed):
    P = wulff_shape(*data)
    rng = np.random.default_rng(seed)
    mu = _measure(P, rng)
    g, its, gnorm = gamma_star(P, mu)
    assert its <= 50 and gnorm <= 1e-10 * mu.total
    assert np.all(slacks(P, g) > 0)


@given(spanning_data(), st.integers(0, 2**31))
@settings(max_examples=30)
def test_concavity(data, seed):
    P = wulff_shape(*data)
    rng = np.random.default_rng(seed)
    mu = _measure(P, rng)
    for _ in range(7):
        a, b = _interior_point(P, rng), _interior_point(P, rng)
        t = rng.uniform()
        mid = phi(P, mu, t * a + (1 - t) * b).value
        assert mid >= t * phi(P, mu, a).value + (1 - t) * phi(P, mu, b).value - 1e-12
        assert np.all(np.linalg.eigvalsh(phi(P, mu, a).hessian) < 0)


@given(spanning_data(), st.integers(0, 2**31))
@settings(max_examples=30)
def test_derivatives_match_differences(data, seed):
    P = wulff_shape(*data)
    rng = np.random.default_rng(seed)
    mu = _measure(P, rng)
    x = _interior_point(P, rng)
    if slacks(P, x).min() < 1e-2:
        return
    ev = phi(P, mu, x)
    for i, e in enumerate(np.eye(2)):
        fd = (phi(P, mu, x + 1e-6 * e).value - phi(P, mu, x - 1e-6 * e).value) / 2e-6
        assert abs(fd - ev.gradient[i]) <= 1e-6 * max(1.0, abs(fd))
        fdh = (phi(P, mu, x + 1e-6 * e).gradient - phi(P, mu, x - 1e-6 * e).gradient) / 2e-6
        assert np.abs(fdh - ev.hessian[i]).max() <= 1e-4 * max(1.0, np.abs(fdh).max())


def test_boundary_blowup(pentagon):
    mu = _measure(pentagon, np.random.default_rng(2))
    g, _, _ = gamma_star(pentagon, mu)
    target = pentagon.vertices[0]
    s = np.linspace(0, 1 - 1e-6, 200)
    vals = [phi(pentagon, mu, g + t * (target - g)).value for t in s]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < vals[0] - 10
