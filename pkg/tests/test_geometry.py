import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from curveflow import _kernels_py
from curveflow.field import Shape, smooth_initial_field
from curveflow.geometry import (
    DegenerateFitError,
    fit_circle,
    interface_length,
    junction_angles,
    partition,
    phase_components,
    segment_components,
)
from curveflow.mesh import build_structured_mesh
from curveflow.simplex import reference_vectors

try:
    from curveflow import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

MESH = build_structured_mesh(17, 17)


def linear_scores(mesh, a, b, c):
    s = a * mesh.nodes[:, 0] + b * mesh.nodes[:, 1] - c
    return np.column_stack([s, -s])


@given(st.floats(0.2, 0.8), st.floats(-0.3, 0.3))
def test_straight_interface_exact(x0, tilt):
    # interface x = x0 + tilt (y - 0.5); a vertical line on a grid column is edge-aligned (degenerate)
    assume(abs(tilt) > 1e-9 or abs(16 * x0 - round(16 * x0)) > 1e-9)
    sc = linear_scores(MESH, 1.0, -tilt, x0 - 0.5 * tilt)
    g = partition(MESH, sc)
    assert g.areas[0] == pytest.approx(1.0 - x0, abs=1e-12)
    assert g.areas.sum() == pytest.approx(1.0, abs=1e-12)
    assert interface_length(g) == pytest.approx(np.hypot(1.0, tilt), abs=1e-12)
    # phase i sits on the left of each segment direction
    d = g.seg_points[:, 1] - g.seg_points[:, 0]
    assert np.all(d[:, 1] < 0)


def test_segments_lie_on_zero_set():
    f = reference_vectors(3)
    u = smooth_initial_field(MESH, f, [Shape("disk", (0.4, 0.5, 0.25), 0), Shape("disk", (0.7, 0.5, 0.2), 1)], 2)
    g = partition(MESH, u.scores())
    for (i, j), bary, row in zip(g.seg_pairs, g.seg_bary, g.seg_elements):
        s = bary @ g.scores[row]
        np.testing.assert_allclose(s[:, i], s[:, j], atol=1e-12)
        assert np.all(s[:, i] >= s.max(axis=1) - 1e-12)


def test_polygon_areas_sum_to_element_area():
    f = reference_vectors(4)
    rng = np.random.default_rng(3)
    g = partition(MESH, f.scores(rng.normal(size=(MESH.n_nodes, 3))))
    np.testing.assert_allclose(g.poly_areas.sum(axis=1), MESH.areas[g.elements], rtol=1e-12)
    assert g.areas.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.skipif(_kernels is None, reason="compiled kernel not built")
@pytest.mark.parametrize("k", [2, 3, 5])
def test_backends_agree(k):
    rng = np.random.default_rng(k)
    xy = MESH.nodes[MESH.elements][:300]
    sc = rng.normal(size=(300, 3, k))
    a = _kernels_py.partition_elements(xy, sc)
    b = _kernels.partition_elements(xy, sc)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[2], b[2])
    for x, y in zip(a[1:], b[1:]):
        np.testing.assert_allclose(x, y, atol=1e-14)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 5), st.integers(3, 40))
def test_fit_circle_exact_points(cx, cy, r, n):
    th = np.linspace(0.3, 0.3 + 1.5 * np.pi, n)
    c, rr = fit_circle(np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)]))
    np.testing.assert_allclose(c, [cx, cy], atol=1e-9 * max(1, r))
    assert rr == pytest.approx(r, rel=1e-9)


def test_fit_circle_degenerate():
    with pytest.raises(DegenerateFitError):
        fit_circle([[0, 0], [1, 1]])
    with pytest.raises(DegenerateFitError):
        fit_circle([[0, 0], [1, 1], [2, 2], [3, 3]])


def star_geometry(n=61, center=(0.5037, 0.4981)):
    mesh = build_structured_mesh(n, n)
    d = mesh.nodes - np.array(center)
    dirs = np.radians([90.0, 210.0, 330.0])
    sc = np.column_stack([d @ np.array([np.cos(a), np.sin(a)]) for a in dirs])
    return partition(mesh, sc)


@pytest.mark.parametrize("method", ["arc", "line"])
def test_star_junction_angles(method):
    g = star_geometry()
    assert len(g.junctions) == 1
    np.testing.assert_allclose(g.junctions[0], [0.5037, 0.4981], atol=1e-12)
    ang = junction_angles(g, 0, method=method)
    np.testing.assert_allclose(ang, 120.0, atol=1e-6)
    np.testing.assert_allclose(junction_angles(g, g.junctions[0], method=method), ang)
    with pytest.raises(ValueError):
        junction_angles(g, 0, method="spline")


def test_components():
    f = reference_vectors(2)
    two = [Shape("disk", (0.25, 0.5, 0.15), 0), Shape("disk", (0.75, 0.5, 0.15), 0)]
    u = smooth_initial_field(MESH, f, two, 1)
    g = partition(MESH, u.scores())
    n, lab = segment_components(g.seg_points)
    assert n == 2 and len(lab) == g.n_segments
    assert phase_components(MESH, g.labels, 0) == 2
    assert phase_components(MESH, g.labels, 1) == 1
    assert segment_components(np.zeros((0, 2, 2)))[0] == 0
