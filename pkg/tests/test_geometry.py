import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torlog.errors import DegenerateBody, HemisphereViolation, InvalidInput, OriginOutside
from torlog.geometry import (
    DiscreteSphericalMeasure,
    box,
    diameter,
    direction,
    hausdorff_distance,
    radial_function,
    regular_polygon,
    support_function,
    transform,
    validate_directions,
    wulff_shape,
)

from conftest import spanning_data

E1, E2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
SQUARE_NORMALS = np.array([E1, E2, -E1, -E2])


def test_validate_directions_half_circle():
    rep = validate_directions([E1, -E1, E2])
    assert not rep.spans and not rep.general_position
    assert rep.max_gap == pytest.approx(np.pi)


def test_validate_directions_pentagon():
    rep = validate_directions(direction(2 * np.pi * np.arange(5) / 5))
    assert rep.spans and rep.general_position
    assert rep.max_gap == pytest.approx(2 * np.pi / 5)


def test_validate_directions_square_not_general():
    rep = validate_directions(SQUARE_NORMALS)
    assert rep.spans and not rep.general_position


def test_nearly_antipodal_flagged():
    rep = validate_directions(direction([0.0, np.pi + 1e-8, 2.0, 4.0]))
    assert rep.general_position and rep.ill_conditioned


@given(spanning_data(), st.floats(0, 2 * np.pi))
def test_validate_rotation_invariant(data, phi):
    dirs, _ = data
    c, s = np.cos(phi), np.sin(phi)
    rot = dirs @ np.array([[c, s], [-s, c]])
    a, b = validate_directions(dirs), validate_directions(rot)
    assert (a.spans, a.general_position) == (b.spans, b.general_position)


def test_wulff_square():
    P = wulff_shape(SQUARE_NORMALS, np.ones(4))
    assert P.present.all()
    assert sorted(map(tuple, np.round(P.vertices, 12))) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_wulff_pentagon_is_regular():
    P = regular_polygon(5, 1.0)
    sides = P.facet_lengths
    assert np.allclose(sides, 2 * np.tan(np.pi / 5))
    assert np.allclose(np.hypot(*P.vertices.T), 1 / np.cos(np.pi / 5))


def test_wulff_redundant_facet():
    dirs = np.vstack([SQUARE_NORMALS, [np.sqrt(0.5), np.sqrt(0.5)]])
    P = wulff_shape(dirs, [1, 1, 1, 1, 2])
    assert P.present.tolist() == [True, True, True, True, False]
    assert support_function(P, dirs[4]) < 2


def test_wulff_errors():
    with pytest.raises(HemisphereViolation):
        wulff_shape([E1, -E1, E2], [1, 1, 1])
    with pytest.raises(DegenerateBody):
        wulff_shape(SQUARE_NORMALS, [1, 1, -1, 1])


@given(spanning_data())
def test_wulff_invariants(data):
    dirs, h = data
    P = wulff_shape(dirs, h)
    tol = 1e-10 * P.diameter
    hv = support_function(P, dirs)
    assert np.all(hv <= h + tol)
    assert np.allclose(hv[P.present], h[P.present], atol=tol, rtol=0)
    assert np.all(hv[~P.present] < h[~P.present])
    # consecutive edges turn left
    e = np.roll(P.vertices, -1, axis=0) - P.vertices
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    assert np.all(cross > 0)
    # every vertex on exactly its two facet lines
    on = np.abs(P.vertices @ P.normals[P.present].T - P.supports[P.present]) <= tol
    assert np.all(on.sum(axis=1) == 2)
    ends = P.facet_endpoints[P.present]
    for k, (a, b) in zip(np.flatnonzero(P.present), ends):
        assert abs(a @ P.normals[k] - h[k]) <= tol and abs(b @ P.normals[k] - h[k]) <= tol


def test_support_function_examples(square2):
    assert support_function(square2, direction(np.pi / 4)) == pytest.approx(np.sqrt(2))
    u = direction(0.7)
    t = np.array([1.0, 0.0])
    assert support_function(transform(square2, 1, t), u) == pytest.approx(support_function(square2, u) + t @ u)


def test_radial_function(square2):
    assert radial_function(square2, direction(np.pi / 4)) == pytest.approx(np.sqrt(2))
    assert radial_function(square2, E1) == pytest.approx(1.0)
    u = direction(0.4)
    assert radial_function(transform(square2, 3.0), u) == pytest.approx(3 * radial_function(square2, u))
    with pytest.raises(OriginOutside):
        radial_function(transform(square2, 1.0, (3.0, 0.0)), u)


def test_radial_point_on_boundary(pentagon):
    u = direction(np.linspace(0, 2 * np.pi, 50))
    pts = radial_function(pentagon, u)[:, None] * u
    slack = pentagon.supports - pts @ pentagon.normals.T
    assert np.allclose(slack.min(axis=1), 0, atol=1e-12)


def test_hausdorff_examples(square2, pentagon):
    assert hausdorff_distance(pentagon, pentagon) == 0.0
    assert hausdorff_distance(square2, transform(square2, 2.0)) == pytest.approx(np.sqrt(2), abs=1e-12)
    assert hausdorff_distance(pentagon, transform(pentagon, 1.0, (0.3, 0.0))) == pytest.approx(0.3, abs=1e-12)


@given(spanning_data(), spanning_data(), spanning_data())
def test_hausdorff_metric(a, b, c):
    P, Q, R = (wulff_shape(*x) for x in (a, b, c))
    assert hausdorff_distance(P, Q) == hausdorff_distance(Q, P)
    assert hausdorff_distance(P, R) <= hausdorff_distance(P, Q) + hausdorff_distance(Q, R) + 1e-12


@given(spanning_data(), spanning_data())
def test_hausdorff_not_below_dense_grid(a, b):
    P, Q = wulff_shape(*a), wulff_shape(*b)
    u = direction(np.linspace(0, 2 * np.pi, 100_000))
    dense = np.abs(support_function(P, u) - support_function(Q, u)).max()
    assert hausdorff_distance(P, Q, samples=16) >= dense - 1e-12


def test_transform_examples(square2):
    assert np.allclose(transform(square2, 2.0).supports, 2.0)
    assert np.allclose(transform(square2, 1.0, (1.0, 0.0)).supports, [2, 1, 0, 1])
    t = np.array([0.37, -1.91])
    back = transform(transform(square2, 1.0, t), 1.0, -t)
    assert np.abs(back.supports - square2.supports).max() <= 1e-15


def test_diameter_examples(square2):
    assert diameter(square2) == pytest.approx(2 * np.sqrt(2))
    assert diameter(transform(square2, 1.0, (5.0, -2.0))) == pytest.approx(diameter(square2))
    assert diameter(transform(square2, 2.0)) == pytest.approx(2 * diameter(square2))


def test_measure_validation():
    m = DiscreteSphericalMeasure.from_angles([0, 2, 4], [1, 2, 3])
    assert m.total == 6 and len(m) == 3
    with pytest.raises(InvalidInput):
        DiscreteSphericalMeasure.from_angles([0, 2], [1, 1])
    with pytest.raises(InvalidInput):
        DiscreteSphericalMeasure.from_angles([0, 2, 4], [1, 0, 1])
    with pytest.raises(InvalidInput):
        DiscreteSphericalMeasure.from_angles([0, 2, 2 + 1e-12], [1, 1, 1])
    with pytest.raises(InvalidInput):
        DiscreteSphericalMeasure([[2.0, 0], [0, 1], [-1, 0]], [1, 1, 1])
    with pytest.raises(ValueError):
        m.weights[0] = 5.0
