"""Feasible sets: membership, projection, polyhedral views."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccpkit import (
    AffineEqualities,
    BinaryTiny,
    Box,
    Halfspaces,
    Intersection,
    NonNegOrthant,
    Simplex,
    UnsupportedSet,
    as_polyhedron,
    dykstra_project,
    flatten_set,
    project,
    set_contains,
    set_dim,
)


def test_box_projection_clips():
    box = Box(np.zeros(2), np.ones(2))
    assert np.allclose(project(box, np.array([2.0, -1.0])), [1.0, 0.0])
    assert set_contains(box, np.array([0.5, 0.5]))
    assert not set_contains(box, np.array([1.5, 0.5]))


def test_orthant_projection():
    assert np.allclose(project(NonNegOrthant(3), np.array([-1.0, 2.0, 0.0])), [0.0, 2.0, 0.0])


def test_simplex_projection_frozen_value():
    got = project(Simplex(3, 1.0), np.array([0.9, 0.8, -0.5]))
    assert np.allclose(got, [0.55, 0.45, 0.0], atol=1e-12)
    assert got.sum() == pytest.approx(1.0)


def test_halfspace_projection_is_closest_point():
    hs = Halfspaces(np.array([[1.0, 1.0]]), np.array([1.0]))
    got = project(hs, np.array([1.0, 1.0]))
    assert np.allclose(got, [0.5, 0.5])


def test_affine_equality_projection():
    # columns are equalities: {x : x1 - x2 = 0}
    eq = AffineEqualities(np.array([[1.0], [-1.0]]), np.array([0.0]))
    got = project(eq, np.array([1.0, 0.0]))
    assert np.allclose(got, [0.5, 0.5])


def test_binary_projection_rounds():
    got = project(BinaryTiny(2), np.array([0.4, 0.9]))
    assert set(np.unique(got)).issubset({0.0, 1.0})
    assert np.allclose(got, [0.0, 1.0])


def test_intersection_needs_dykstra():
    parts = Intersection(
        (
            Box(np.zeros(2), np.ones(2)),
            Halfspaces(np.array([[1.0, 1.0]]), np.array([0.5])),
        )
    )
    with pytest.raises(UnsupportedSet):
        project(parts, np.array([1.0, 1.0]))
    got = dykstra_project(flatten_set(parts), np.array([1.0, 1.0]))
    assert np.allclose(got, [0.25, 0.25], atol=1e-6)
    assert set_contains(parts, got, tol=1e-6)


def test_flatten_set_unnests():
    inner = Intersection((Box(np.zeros(2), np.ones(2)), NonNegOrthant(2)))
    outer = Intersection((inner, Halfspaces(np.array([[1.0, 0.0]]), np.array([0.5]))))
    parts = flatten_set(outer)
    assert len(parts) == 3
    assert set_dim(outer) == 2


def test_as_polyhedron_shapes():
    box = Box(np.zeros(2), np.ones(2))
    A, b, E, f, lo, hi = as_polyhedron(box)
    assert A.shape[1] == 2 and E.shape[1] == 2
    assert np.allclose(lo, 0.0) and np.allclose(hi, 1.0)
    simplex = Simplex(3, 1.0)
    A, b, E, f, lo, hi = as_polyhedron(simplex)
    assert E.shape == (1, 3) and f[0] == pytest.approx(1.0)
    with pytest.raises(UnsupportedSet):
        as_polyhedron(BinaryTiny(2))


@given(
    y=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    z=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
)
@settings(max_examples=60, deadline=None)
def test_projection_idempotent_and_nonexpansive(y, z):
    y = np.asarray(y)
    z = np.asarray(z)
    for s in (Box(-np.ones(3), np.ones(3)), Simplex(3, 1.0), NonNegOrthant(3)):
        py = project(s, y)
        pz = project(s, z)
        assert set_contains(s, py, tol=1e-8)
        assert np.allclose(project(s, py), py, atol=1e-9)
        assert np.linalg.norm(py - pz) <= np.linalg.norm(y - z) + 1e-9


@given(
    y=st.lists(st.floats(-5, 5), min_size=3, max_size=3),
    w=st.lists(st.floats(0.01, 1), min_size=3, max_size=3),
)
@settings(max_examples=40, deadline=None)
def test_simplex_projection_optimality(y, w):
    y = np.asarray(y)
    s = Simplex(3, 1.0)
    py = project(s, y)
    # any feasible competitor is no closer
    q = np.asarray(w)
    q = q / q.sum()
    assert np.linalg.norm(y - py) <= np.linalg.norm(y - q) + 1e-9
