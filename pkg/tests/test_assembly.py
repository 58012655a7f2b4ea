import numpy as np
import pytest
import scipy.linalg as sla

from trunc_fem.assembly import (NoFreeDofsError, assemble, build_dof_map, interpolate,
                                write_matrix)
from trunc_fem.element import local_matrices
from trunc_fem.mesh import box_mesh
from trunc_fem.problems import smooth_problem


@pytest.mark.parametrize("dim, N, total, free", [(3, 2, 108, 4), (3, 4, 500, 108),
                                                 (2, 4, 75, 27)])
def test_dof_counts(dim, N, total, free):
    m = box_mesh(dim, N)
    dm = build_dof_map(m)
    assert (dm.ndofs, dm.nfree) == (total, free)
    assert dm.nconstrained == (dim + 1) * int(m.boundary_vertex.sum())
    assert np.array_equal(dm.free_index[dm.free_dofs], np.arange(dm.nfree))


def test_cell_dofs_follow_vertex_blocks():
    m = box_mesh(2, 2)
    dm = build_dof_map(m)
    cd = dm.cell_dofs(m.cells[:1])[0]
    v = m.cells[0]
    assert list(cd[:3]) == list(3 * v)
    assert list(cd[3:5]) == [3 * v[0] + 1, 3 * v[0] + 2]


def test_zero_forcing_gives_zero_rhs():
    m = box_mesh(3, 2)
    sysm = assemble(m, build_dof_map(m), 1.0)
    assert not sysm.rhs.any()
    sysm = assemble(m, build_dof_map(m), 1.0, f=lambda x: np.zeros(len(x)))
    assert not sysm.rhs.any()


def test_quadratic_form_equals_sum_of_local_forms(rng):
    m = box_mesh(3, 3)
    dm = build_dof_map(m)
    eps = 0.2
    A = assemble(m, dm, eps).matrix
    v = rng.standard_normal(dm.nfree)
    full = dm.expand(v)
    frames = m.frames()
    total = 0.0
    for c in range(m.ncells):
        local = full[dm.cell_dofs(m.cells[c:c + 1])[0]]
        total += local @ local_matrices(frames.frame(c), eps).A @ local
    assert v @ (A @ v) == pytest.approx(total, rel=1e-12)


def test_smallest_cube_system_is_spd():
    m = box_mesh(3, 2)
    A = assemble(m, build_dof_map(m), 1.0).matrix.toarray()
    assert A.shape == (4, 4)
    sla.cholesky(A)


@pytest.mark.parametrize("eps", [0.0, 1e-6, 1e-2, 1.0])
@pytest.mark.parametrize("dim, N", [(2, 4), (3, 3)])
def test_symmetric_positive_definite(eps, dim, N):
    m = box_mesh(dim, N)
    A = assemble(m, build_dof_map(m), eps).matrix
    assert (A.diagonal() > 0).all()
    diff = abs(A - A.T)
    assert diff.max() <= 1e-12 * abs(A).max()
    pattern = A.copy()
    pattern.data[:] = 1.0
    assert (pattern - pattern.T).nnz == 0
    assert np.linalg.eigvalsh(A.toarray()).min() > 0


@pytest.mark.parametrize("eps", [1e-6, 1e-2, 1.0])
@pytest.mark.parametrize("dim, N", [(3, 2), (3, 4), (2, 8)])
def test_coercivity_sample(rng, eps, dim, N):
    m = box_mesh(dim, N)
    dm = build_dof_map(m)
    At = assemble(m, dm, eps, mode="trunc").matrix
    Af = assemble(m, dm, eps, mode="full").matrix
    V = rng.standard_normal((dm.nfree, 100))
    gap = np.einsum("ik,ik->k", V, At @ V) - 0.5 * np.einsum("ik,ik->k", V, Af @ V)
    assert gap.min() >= -1e-10


def test_modes_agree_at_eps_zero():
    m = box_mesh(3, 3)
    dm = build_dof_map(m)
    a = assemble(m, dm, 0.0, mode="trunc").matrix
    b = assemble(m, dm, 0.0, mode="full").matrix
    assert abs(a - b).max() <= 1e-13 * abs(a).max()


def test_load_vector_against_interpolant(rng):
    # rhs . v equals the integral of f times the element function with DOFs v
    m = box_mesh(2, 3)
    dm = build_dof_map(m)
    p = smooth_problem(2, 0.1)
    sysm = assemble(m, dm, 0.1, f=p.f, load_degree=12)
    v = rng.standard_normal(dm.nfree)
    full = dm.expand(v)
    from trunc_fem.element import ShapeSet
    from trunc_fem.quadrature import integrate_on, rule_for_degree
    rule = rule_for_degree(2, 12)
    frames = m.frames()
    total = 0.0
    for c in range(m.ncells):
        fr = frames.frame(c)
        u = ShapeSet(fr).combine(full[dm.cell_dofs(m.cells[c:c + 1])[0]])
        total += integrate_on(fr, rule, lambda x: p.f(x) * u(x))
    assert sysm.rhs @ v == pytest.approx(total, rel=1e-12)


def test_interpolate_zeroes_boundary():
    m = box_mesh(2, 4)
    dm = build_dof_map(m)
    p = smooth_problem(2, 1.0)
    vec = interpolate(m, dm, p.u, p.gradient)
    assert not vec[dm.constrained].any()
    k = 12  # interior vertex (2, 2)
    assert vec[3 * k] == pytest.approx(p.u(m.vertices[k:k + 1])[0])


def test_errors():
    m = box_mesh(3, 1)
    with pytest.raises(NoFreeDofsError):
        assemble(m, build_dof_map(m), 1.0)
    m = box_mesh(3, 2)
    with pytest.raises(ValueError):
        assemble(m, build_dof_map(m), 1.0, load_degree=3)
    with pytest.raises(ValueError):
        assemble(m, build_dof_map(m), -1.0)


def test_matrix_dump(tmp_path):
    m = box_mesh(3, 2)
    sysm = assemble(m, build_dof_map(m), 1.0)
    path = tmp_path / "A.txt"
    write_matrix(sysm, path)
    rows = [line.split() for line in path.read_text().splitlines()]
    back = np.zeros((4, 4))
    for i, j, v in rows:
        back[int(i), int(j)] = float(v)
    assert np.array_equal(back, sysm.matrix.toarray())
