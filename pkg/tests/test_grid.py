import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micromorphx.grid import (
    ConstraintKind,
    DofMap,
    GridError,
    apply_bc,
    build_grid,
    discrete_Curl,
    discrete_Div,
    discrete_div,
    discrete_grad,
    discrete_Grad,
    discrete_value,
    l2_inner,
    tangential_mask,
)


def test_node_counts():
    assert build_grid((2, 2, 2)).n_nodes == 27
    g = build_grid((4, 2, 2), (2.0, 1.0, 1.0))
    # (4+1)(2+1)(2+1) nodes
    assert g.n_nodes == 45
    assert np.allclose(g.h, 0.5)


@pytest.mark.parametrize("n, lengths", [((1, 2, 2), (1, 1, 1)), ((2, 2, 2), (1, 0, 1)), ((2, 2), (1, 1, 1))])
def test_invalid_grids(n, lengths):
    with pytest.raises(GridError):
        build_grid(n, lengths)


def test_quadrature_weights_and_points():
    g = build_grid((3, 2, 4), (1.0, 2.0, 0.5))
    assert np.isclose(g.weights.sum(), g.volume)
    q = g.qpoints
    assert q.shape == (g.n_qp, 3)
    assert np.all(q > 0) and np.all(q < np.array(g.lengths))


def test_l2_inner_examples():
    g = build_grid(3)
    one = np.ones(g.n_qp)
    assert np.isclose(l2_inner(g, one, one), 1.0)
    x = g.qpoints[:, 0]
    assert np.isclose(l2_inner(g, x, one), 0.5)
    a = np.zeros((g.n_qp, 3))
    b = np.zeros((g.n_qp, 3))
    a[:, 0], b[:, 1] = 1.0, 1.0
    assert l2_inner(g, a, b) == 0.0
    with pytest.raises(GridError):
        l2_inner(g, one, one[:-1])


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_quadrature_exact_for_cubics(i, j, k):
    g = build_grid(2)
    x, y, z = g.qpoints.T
    exact = 1.0 / ((i + 1) * (j + 1) * (k + 1))
    assert np.isclose(l2_inner(g, x**i * y**j * z**k, np.ones(g.n_qp)), exact, rtol=1e-13)


def test_grad_of_constant_and_linear():
    g = build_grid((3, 2, 2), (1.5, 1.0, 2.0))
    assert np.allclose(discrete_grad(g, np.full(g.n_nodes, 3.0)), 0.0)
    x, y, z = g.nodes.T
    grad = discrete_grad(g, 2 * x - y + 0.5 * z)
    assert np.allclose(grad, [2.0, -1.0, 0.5])
    with pytest.raises(GridError):
        discrete_grad(g, np.zeros(g.n_nodes + 1))


def test_curl_of_row_shear():
    g = build_grid(3)
    P = np.zeros((g.n_nodes, 3, 3))
    P[:, 0, 0] = g.nodes[:, 1]
    C = discrete_Curl(g, P)
    assert np.allclose(C[:, 0], [0.0, 0.0, -1.0])
    assert np.allclose(C[:, 1:], 0.0)


def test_curl_of_grad_vanishes():
    g = build_grid((3, 2, 2))
    rng = np.random.default_rng(0)
    # Grad of a field linear on the whole box is a constant nodal tensor field
    A = rng.standard_normal((3, 3))
    w = g.nodes @ A.T
    P = np.broadcast_to(A, (g.n_nodes, 3, 3)).copy()
    assert np.allclose(discrete_Grad(g, w), A)
    assert np.allclose(discrete_Curl(g, P), 0.0)


def test_div_of_linear_field():
    g = build_grid(2)
    x, y, z = g.nodes.T
    v = np.stack([x, 2 * y, -z], axis=1)
    assert np.allclose(discrete_div(g, v), 2.0)
    S = np.zeros((g.n_nodes, 3, 3))
    S[:, 0, 0] = x
    S[:, 1, 2] = 3 * z
    assert np.allclose(discrete_Div(g, S), [1.0, 3.0, 0.0])


def test_value_interpolation():
    g = build_grid(2)
    f = g.interpolate(lambda x, y, z: x + y * z)
    x, y, z = g.qpoints.T
    # bilinear in (y, z) and linear in x: exactly representable
    assert np.allclose(discrete_value(g, f), x + y * z)


def _constrained_fields(g, rng):
    dm = DofMap.standard(g)
    q = rng.standard_normal(dm.n_free)
    return dm, *dm.unpack(q)


def test_integration_by_parts_grad_div():
    g = build_grid((3, 2, 3))
    rng = np.random.default_rng(1)
    dm, v, _ = _constrained_fields(g, rng)
    sigma = rng.standard_normal((g.n_nodes, 3, 3))
    lhs = l2_inner(g, discrete_Div(g, sigma), discrete_value(g, v))
    rhs = l2_inner(g, discrete_value(g, sigma), discrete_Grad(g, v))
    # the Galerkin adjoint through the nodal basis: <Div sigma, v> + <sigma, Grad v> is
    # a boundary term that vanishes when v = 0 on the boundary
    assert np.isclose(lhs + rhs, 0.0, atol=1e-12 * (abs(lhs) + abs(rhs)))


def test_curl_symmetric_on_tangential_fields():
    g = build_grid(3)
    rng = np.random.default_rng(2)
    dm = DofMap.standard(g)
    _, m = dm.unpack(rng.standard_normal(dm.n_free))
    _, Q = dm.unpack(rng.standard_normal(dm.n_free))
    a = l2_inner(g, discrete_Curl(g, m), discrete_value(g, Q))
    b = l2_inner(g, discrete_value(g, m), discrete_Curl(g, Q))
    assert np.isclose(a, b, rtol=1e-10)


def test_tangential_mask_faces_edges_corners():
    g = build_grid(3)
    mask = tangential_mask(g)
    faces = g.boundary_faces
    interior = ~g.boundary_nodes
    assert not mask[interior].any()
    one = faces.sum(axis=1) == 1
    # on a face only the normal component survives
    assert np.array_equal(mask[one], ~faces[one])
    assert mask[faces.sum(axis=1) >= 2].all()


def test_dofmap_counts():
    g = build_grid(4)
    dm = DofMap.standard(g)
    interior = (g.n[0] - 1) ** 3
    face_nodes = 6 * (g.n[0] - 1) ** 2
    assert dm.n_free_u == 3 * interior
    # interior rows keep 9 components, face nodes keep one per row
    assert dm.n_free - dm.n_free_u == 9 * interior + 3 * face_nodes
    u, P = dm.unpack(np.arange(dm.n_free, dtype=float) + 1)
    assert np.array_equal(dm.pack(u, P), np.arange(dm.n_free) + 1)


def test_apply_bc_examples():
    g = build_grid(2)
    dm = DofMap.standard(g)
    u = apply_bc(dm, np.ones((g.n_nodes, 3)))
    assert np.all(u[g.boundary_nodes] == 0) and np.all(u[~g.boundary_nodes] == 1)
    P = np.zeros((g.n_nodes, 3, 3))
    P[:, 2, 2] = 1.0
    P[:, 2, 0] = 1.0
    out = apply_bc(dm, P, ConstraintKind.TANGENTIAL_ZERO)
    faces = g.boundary_faces
    top_only = faces[:, 2] & (faces.sum(axis=1) == 1)
    assert top_only.any()
    assert np.all(out[top_only, 2, 2] == 1.0) and np.all(out[top_only, 2, 0] == 0.0)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_apply_bc_idempotent(seed):
    g = build_grid(2)
    dm = DofMap.standard(g)
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((g.n_nodes, 3, 3))
    once = apply_bc(dm, P)
    assert np.array_equal(apply_bc(dm, once), once)
    free = ~dm.P_mask
    assert np.array_equal(once[free], P[free])


def test_nesting():
    assert build_grid(4).nested_in(build_grid(8))
    assert not build_grid(4).nested_in(build_grid(6))
    assert not build_grid(4).nested_in(build_grid(8, (2, 1, 1)))
