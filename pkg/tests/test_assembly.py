import numpy as np
import pytest
import scipy.io
import scipy.sparse as sp

from dgife.assembly import (
    LoadOperator,
    assemble_load,
    assemble_mass,
    assemble_system,
    assemble_theta_load,
    dump_matrix_market,
    edge_quadrature,
    volume_quadrature,
)
from dgife.exceptions import InvalidArgument
from dgife.ife import build_space
from dgife.linsolve import SolverConfig, solve
from dgife.mesh import build_mesh, classify_elements, constant_curve
from dgife.problems import polynomial_problem
from dgife.timestepping import interpolant

from conftest import UNIT


def plain_space(ns, beta=1.0, simplex=False):
    mesh = build_mesh(UNIT, ns, simplex)
    curve = constant_curve(-1.0)
    return build_space(mesh, classify_elements(mesh, curve), curve, beta, beta)


@pytest.fixture(scope="module")
def ellipse_space(example1):
    mesh = build_mesh(UNIT, 10)
    cls = classify_elements(mesh, example1.curve)
    return build_space(mesh, cls, example1.curve, 1.0, 10.0)


def test_mass_entries():
    space = plain_space(4)
    h = 0.25
    M = assemble_mass(space).toarray()
    blk = M[:4, :4]
    assert np.allclose(np.diag(blk), h**2 / 9, rtol=1e-14)
    assert blk[0, 1] == pytest.approx(h**2 / 18, rel=1e-14)
    assert blk[0, 3] == pytest.approx(h**2 / 18, rel=1e-14)
    assert blk[0, 2] == pytest.approx(h**2 / 36, rel=1e-14)


def test_mass_block_diagonal_spd(ellipse_space):
    M = assemble_mass(ellipse_space).tocoo()
    d = ellipse_space.d
    assert np.all(M.row // d == M.col // d)
    dense = M.toarray()
    for k in range(ellipse_space.mesh.n_elements):
        blk = dense[k * d:(k + 1) * d, k * d:(k + 1) * d]
        assert np.allclose(blk, blk.T, atol=1e-16)
        assert np.linalg.eigvalsh(blk).min() > 0


def test_mass_beta_independent(ellipse_space):
    flipped = ellipse_space.with_coefficients(10.0, 1.0)
    # the bases differ but on noninterface elements the mass blocks coincide
    M1 = assemble_mass(ellipse_space).toarray()
    M2 = assemble_mass(flipped).toarray()
    std = np.flatnonzero(ellipse_space.tags != 0)
    idx = ellipse_space.dofmap.dofs(std).ravel()
    assert np.array_equal(M1[np.ix_(idx, idx)], M2[np.ix_(idx, idx)])
    same = ellipse_space.with_coefficients(1.0, 10.0)
    assert np.array_equal(assemble_mass(same).toarray(), M1)


def test_volume_stiffness_entry():
    sys = assemble_system(plain_space(4), 0.0, 1)
    assert sys.volume.toarray()[0, 0] == pytest.approx(2 / 3, rel=1e-14)


def test_symmetric_variant(ellipse_space):
    A = assemble_system(ellipse_space, 100.0, -1).stiffness
    assert abs(A - A.T).max() <= 1e-10 * abs(A).max()


def test_nonsymmetric_variant_is_not_symmetric(ellipse_space):
    A = assemble_system(ellipse_space, 1.0, 1).stiffness
    assert abs(A - A.T).max() > 1e-3 * abs(A).max()


def test_positive_definite_small():
    A = assemble_system(plain_space(4), 100.0, -1).stiffness.toarray()
    assert np.linalg.eigvalsh(0.5 * (A + A.T)).min() > 0


def test_invalid_parameters(ellipse_space):
    with pytest.raises(InvalidArgument):
        assemble_system(ellipse_space, -1.0, 1)
    with pytest.raises(InvalidArgument):
        assemble_system(ellipse_space, 1.0, 2)


def test_load_zero_and_unit(ellipse_space):
    zero = assemble_load(ellipse_space, lambda x, y: 0 * x, lambda x, y: 0 * x, 1.0, 1)
    assert not zero.any()
    space = plain_space(4)
    b = assemble_load(space, lambda x, y: 1.0 + 0 * x, lambda x, y: 0 * x, 1.0, 1)
    assert b.sum() == pytest.approx(1.0, rel=1e-13)


def test_boundary_data_only_touches_boundary_elements():
    space = plain_space(4)
    b = assemble_load(space, lambda x, y: 0 * x, lambda x, y: 1.0 + 0 * x, 10.0, -1)
    mesh = space.mesh
    touching = np.unique(mesh.edge_elems[mesh.boundary_edges, 0])
    inner = np.setdiff1d(np.arange(mesh.n_elements), touching)
    assert not b[space.dofmap.dofs(inner)].any()
    assert np.abs(b[space.dofmap.dofs(touching)]).max() > 0


def test_theta_load():
    b1, b0 = np.array([1.0, 2.0]), np.array([3.0, -1.0])
    assert np.array_equal(assemble_theta_load(b1, b0, 1.0), b1)
    assert np.array_equal(assemble_theta_load(b1, b1, 0.5), b1)
    with pytest.raises(InvalidArgument):
        assemble_theta_load(b1, b0, 1.5)


def test_theta_load_linear_in_time(ellipse_space):
    vq, eq = volume_quadrature(ellipse_space), edge_quadrature(ellipse_space)
    op = LoadOperator(ellipse_space, 1.0, 1, vq, eq)
    at = lambda t: op(lambda x, y: t * (1 + x), lambda x, y: t * y)  # noqa: E731
    assert np.allclose(assemble_theta_load(at(0.6), at(0.4), 0.5), at(0.5), atol=1e-15)


CASES = [(-1, 100.0), (0, 10.0), (1, 1.0), (1, 10.0)]


@pytest.mark.parametrize("eps,sigma", CASES)
def test_patch_rectangles(eps, sigma, example1):
    problem = polynomial_problem((1.0, 2.0, -1.0, 3.0), beta=2.0, curve=example1.curve)
    mesh = build_mesh(UNIT, 6)
    space = build_space(mesh, classify_elements(mesh, problem.curve), problem.curve, 2.0, 2.0)
    sys = assemble_system(space, sigma, eps)
    b = LoadOperator(space, sigma, eps, sys.vquad, sys.equad).at_time(problem, 0.0)
    u, _ = solve(sys.stiffness, b, SolverConfig("dense"))
    assert np.abs(u - interpolant(problem, space, 0.0)).max() <= 1e-8


@pytest.mark.parametrize("eps,sigma", CASES)
def test_patch_triangles(eps, sigma, example1):
    problem = polynomial_problem((1.0, 2.0, -1.0, 0.0), beta=2.0, curve=example1.curve)
    mesh = build_mesh(UNIT, 6, simplex=True)
    space = build_space(mesh, classify_elements(mesh, problem.curve), problem.curve, 2.0, 2.0)
    sys = assemble_system(space, sigma, eps)
    b = LoadOperator(space, sigma, eps, sys.vquad, sys.equad).at_time(problem, 0.0)
    u, _ = solve(sys.stiffness, b, SolverConfig("dense"))
    assert np.abs(u - interpolant(problem, space, 0.0)).max() <= 1e-8


def test_energy_form_matches_quadrature(ellipse_space):
    sys = assemble_system(ellipse_space, 7.0, 1)
    rng = np.random.default_rng(3)
    for _ in range(3):
        v = rng.standard_normal(ellipse_space.n_dof)
        direct = 0.0
        for b in sys.vquad:
            g = np.einsum("nqdk,nd->nqk", b.grads, v[ellipse_space.dofmap.dofs(b.elems)])
            direct += np.sum(b.w * b.beta * np.sum(g**2, axis=-1))
        for b in sys.equad:
            jump = np.einsum("nqi,ni->nq", b.jumps(), v[b.dofs(ellipse_space.d)])
            direct += 7.0 * np.sum(b.w / b.length[:, None] * jump**2)
        assert v @ (sys.energy @ v) == pytest.approx(direct, rel=1e-10)
        # the nonsymmetric coupling drops out of the quadratic form
        assert v @ (sys.stiffness @ v) == pytest.approx(direct, rel=1e-10)


def test_constants_annihilated_in_the_interior(ellipse_space):
    sys = assemble_system(ellipse_space, 1.0, 1)
    one = np.ones(ellipse_space.n_dof)
    assert np.abs(sys.volume @ one).max() <= 1e-10
    assert np.abs(sys.consistency @ one).max() <= 1e-10
    mesh = ellipse_space.mesh
    touching = np.unique(mesh.edge_elems[mesh.boundary_edges, 0])
    inner = ellipse_space.dofmap.dofs(np.setdiff1d(np.arange(mesh.n_elements), touching)).ravel()
    assert np.abs((sys.consistency.T @ one)[inner]).max() <= 1e-10
    assert np.abs((sys.penalty @ one)[inner]).max() <= 1e-10


def test_sparse_layout(ellipse_space):
    A = assemble_system(ellipse_space, 1.0, 1).stiffness
    assert sp.isspmatrix_csr(A) or isinstance(A, sp.csr_array)
    assert A.has_canonical_format


def test_matrix_market_dump(ellipse_space, tmp_path):
    sys = assemble_system(ellipse_space, 1.0, 1)
    paths = dump_matrix_market(sys, tmp_path)
    A = scipy.io.mmread(str(paths[0])).tocsr()
    assert abs(A - sys.stiffness).max() <= 1e-14 * abs(sys.stiffness).max()
