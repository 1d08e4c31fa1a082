import numpy as np
import pytest
from hypothesis import given, strategies as st

from curveflow.mesh import (
    MeshIntegrityError,
    TriMesh,
    build_structured_mesh,
    dump_mesh,
    mass_matrix,
    p1_element_quantities,
    stiffness_matrix,
)


@pytest.mark.parametrize("nx,ny", [(2, 2), (5, 3), (11, 11)])
def test_counts_and_total_area(nx, ny):
    m = build_structured_mesh(nx, ny, (0.0, 2.0, -1.0, 0.5))
    assert m.n_nodes == nx * ny
    assert m.n_elements == 2 * (nx - 1) * (ny - 1)
    assert np.all(m.areas > 0)
    assert abs(m.areas.sum() - 3.0) < 1e-13
    assert len(m.boundary_nodes) == 2 * nx + 2 * ny - 4


def test_bad_sizes():
    with pytest.raises(ValueError):
        build_structured_mesh(1, 4)
    with pytest.raises(ValueError):
        build_structured_mesh(4, 4, (0.0, 0.0, 0.0, 1.0))


def test_degenerate_element_rejected():
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(MeshIntegrityError):
        TriMesh.from_arrays(nodes, [[0, 1, 2]], [0, 1, 2], (0, 2, 0, 1))


def test_element_quantities_partition_of_unity():
    m = build_structured_mesh(4, 4)
    area, grads = p1_element_quantities(m, 3)
    assert area == pytest.approx(1 / 18)
    np.testing.assert_allclose(grads.sum(axis=0), 0.0, atol=1e-12)
    with pytest.raises(IndexError):
        p1_element_quantities(m, m.n_elements)


@given(st.integers(2, 12), st.integers(2, 12))
def test_mass_and_stiffness_identities(nx, ny):
    m = build_structured_mesh(nx, ny)
    M, S = mass_matrix(m), stiffness_matrix(m)
    one = np.ones(m.n_nodes)
    assert abs(one @ M @ one - 1.0) < 1e-12
    np.testing.assert_allclose(S @ one, 0.0, atol=1e-11)
    assert abs(M - M.T).max() < 1e-15 and abs(S - S.T).max() < 1e-12


def test_stiffness_energy_of_linear_function():
    m = build_structured_mesh(9, 9)
    u = 3.0 * m.nodes[:, 0] - 2.0 * m.nodes[:, 1]
    assert u @ stiffness_matrix(m) @ u == pytest.approx(13.0, rel=1e-12)
    g = m.element_gradient(u)
    np.testing.assert_allclose(g, np.tile([3.0, -2.0], (m.n_elements, 1)), atol=1e-12)


def test_dump(tmp_path):
    m = build_structured_mesh(3, 3)
    p = tmp_path / "mesh.txt"
    dump_mesh(m, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "# nodes 9 elements 8"
    assert sum(line.startswith("element") for line in lines) == 8
