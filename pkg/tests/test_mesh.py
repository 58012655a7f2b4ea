import numpy as np
import pytest

from trunc_fem.mesh import (SimplicialMesh, box_mesh, check_conforming, mesh_stats, orient,
                            read_mesh, unit_box_mesh, unit_cube_mesh_corner, unit_cube_mesh_kuhn,
                            unit_square_mesh, write_mesh)


def test_square_counts():
    m = unit_square_mesh(1)
    assert (m.nverts, m.ncells) == (4, 2)
    m = unit_square_mesh(4)
    assert (m.nverts, m.ncells, int(m.boundary_vertex.sum())) == (25, 32, 16)


@pytest.mark.parametrize("N", [1, 3, 8])
def test_square_areas(N):
    assert np.allclose(unit_square_mesh(N).signed_volumes(), 1 / (2 * N * N))


@pytest.mark.parametrize("make", [unit_cube_mesh_kuhn, unit_cube_mesh_corner])
def test_cube_counts(make):
    m = make(4)
    assert (m.ncells, m.nverts) == (384, 125)
    m = make(2)
    assert (m.ncells, m.nverts, int(m.boundary_vertex.sum())) == (48, 27, 26)


@pytest.mark.parametrize("make", [unit_cube_mesh_kuhn, unit_cube_mesh_corner])
@pytest.mark.parametrize("N", [1, 2, 5])
def test_cube_volumes(make, N):
    vol = make(N).signed_volumes()
    assert np.allclose(vol, 1 / (6 * N**3))
    assert vol.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("mesh", [unit_square_mesh(16), unit_square_mesh(64),
                                  unit_cube_mesh_kuhn(6), unit_cube_mesh_corner(6),
                                  unit_box_mesh(4, 2)], ids=["sq16", "sq64", "kuhn", "corner", "4d"])
def test_conforming_and_oriented(mesh):
    assert check_conforming(mesh)
    assert (mesh.signed_volumes() > 0).all()


def test_kuhn_cells_share_main_diagonal():
    m = unit_cube_mesh_kuhn(1)
    assert all({0, 7} <= set(c) for c in m.cells.tolist())


def test_boundary_flags_match_coordinates():
    m = box_mesh(3, 5)
    on = np.any(np.isclose(m.vertices, 0) | np.isclose(m.vertices, 1), axis=1)
    assert np.array_equal(on, m.boundary_vertex)


def test_stats():
    s = mesh_stats(unit_cube_mesh_kuhn(4))
    assert s["h_max"] == pytest.approx(np.sqrt(3) / 4)
    assert s["h_grid"] == 0.25
    assert mesh_stats(unit_cube_mesh_corner(4))["h_max"] == pytest.approx(np.sqrt(3) / 4)
    assert mesh_stats(unit_square_mesh(8))["h_max"] == pytest.approx(np.sqrt(2) / 8)
    s = mesh_stats(unit_cube_mesh_kuhn(2))
    assert (s["cells"], s["vertices"], s["boundary_vertices"]) == (48, 27, 26)


def test_broken_mesh_is_not_conforming():
    m = unit_square_mesh(2)
    cells = m.cells.copy()
    cells[0] = cells[1]
    assert not check_conforming(SimplicialMesh(m.vertices, cells, m.boundary_vertex))


def test_box_mesh_dispatch():
    assert box_mesh(2, 3).ncells == 18
    assert np.array_equal(box_mesh(3, 2, "kuhn").cells, unit_cube_mesh_kuhn(2).cells)
    with pytest.raises(ValueError):
        box_mesh(3, 2, "diagonal")
    with pytest.raises(ValueError):
        unit_box_mesh(3, 0)


def test_round_trip(tmp_path):
    m = box_mesh(3, 3)
    path = tmp_path / "cube.mesh"
    write_mesh(m, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.cells, m.cells)
    assert np.array_equal(back.boundary_vertex, m.boundary_vertex)
    assert path.read_text().splitlines()[0] == "3 64 162"


def test_reader_reorients_negative_cells(tmp_path):
    m = unit_square_mesh(2)
    flipped = m.cells.copy()
    flipped[:, [0, 1]] = flipped[:, [1, 0]]
    path = tmp_path / "flip.mesh"
    write_mesh(SimplicialMesh(m.vertices, flipped, m.boundary_vertex), path)
    back = read_mesh(path)
    assert (back.signed_volumes() > 0).all()
    assert np.array_equal(orient(back).cells, back.cells)
