"""Structured box mesh with trilinear (Q1) nodal fields.

Nodes are numbered row-major over ``(i, j, k)`` with ``k`` fastest, so a
vector field is an array of shape ``(n_nodes, 3)`` and a tensor field has
shape ``(n_nodes, 3, 3)``. Quadrature points are numbered cell by cell (cells
row-major as well), with the 2x2x2 Gauss points of each cell consecutive.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)
# local node offsets (di, dj, dk), same ordering as the reference corners
_CORNERS = np.array([(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)])

# derivative slots: value, d/dx, d/dy, d/dz
VALUE, DX, DY, DZ = range(4)

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    n: tuple
    lengths: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        lengths = tuple(float(v) for v in self.lengths)
        if len(n) != 3 or len(lengths) != 3:
            raise GridError("grid needs three cell counts and three lengths")
        if min(n) < 2:
            raise GridError(f"need at least 2 cells per axis, got {n}")
        if min(lengths) <= 0:
            raise GridError(f"box lengths must be positive, got {lengths}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "lengths", lengths)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.lengths == other.lengths

    def __hash__(self):
        return hash((self.n, self.lengths))

    def __repr__(self):
        return f"Grid(n={self.n}, lengths={self.lengths})"

    @property
    def h(self):
        return tuple(L / n for L, n in zip(self.lengths, self.n))

    @property
    def node_shape(self):
        return tuple(v + 1 for v in self.n)

    @property
    def n_nodes(self):
        nx, ny, nz = self.node_shape
        return nx * ny * nz

    @property
    def n_cells(self):
        return self.n[0] * self.n[1] * self.n[2]

    @property
    def n_qp(self):
        return 8 * self.n_cells

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @cached_property
    def nodes(self):
        """Node coordinates, shape ``(n_nodes, 3)``."""
        axes = [np.linspace(0.0, L, n + 1) for L, n in zip(self.lengths, self.n)]
        X = np.meshgrid(*axes, indexing="ij")
        return np.stack([x.ravel() for x in X], axis=1)

    def node_index(self, i, j, k):
        _, ny, nz = self.node_shape
        return (np.asarray(i) * ny + np.asarray(j)) * nz + np.asarray(k)

    @cached_property
    def cell_nodes(self):
        """Global node ids of each cell's 8 corners, shape ``(n_cells, 8)``."""
        ci, cj, ck = np.meshgrid(*(np.arange(v) for v in self.n), indexing="ij")
        ci, cj, ck = ci.ravel(), cj.ravel(), ck.ravel()
        return np.stack(
            [self.node_index(ci + a, cj + b, ck + c) for a, b, c in _CORNERS], axis=1
        )

    @cached_property
    def _reference(self):
        """Shape values and physical derivatives at the 8 Gauss points of a cell.

        Returns an array of shape ``(4, 8 gauss, 8 nodes)`` indexed by
        derivative slot.
        """
        hx, hy, hz = self.h
        out = np.zeros((4, 8, 8))
        gps = [(a, b, c) for a in _GAUSS for b in _GAUSS for c in _GAUSS]
        for g, (xi, eta, zeta) in enumerate(gps):
            for a, (s, t, r) in enumerate(_CORNERS):
                # 1D hat functions on [-1, 1] for the corner at 0 (-1) or 1 (+1)
                sx, sy, sz = 2 * s - 1, 2 * t - 1, 2 * r - 1
                nx_, ny_, nz_ = 0.5 * (1 + sx * xi), 0.5 * (1 + sy * eta), 0.5 * (1 + sz * zeta)
                out[VALUE, g, a] = nx_ * ny_ * nz_
                out[DX, g, a] = (sx / hx) * ny_ * nz_
                out[DY, g, a] = nx_ * (sy / hy) * nz_
                out[DZ, g, a] = nx_ * ny_ * (sz / hz)
        return out

    @cached_property
    def weights(self):
        """Quadrature weights, shape ``(n_qp,)``; they sum to the box volume."""
        return np.full(self.n_qp, np.prod(self.h) / 8.0)

    @cached_property
    def qpoints(self):
        """Physical coordinates of the quadrature points, shape ``(n_qp, 3)``."""
        corner = self.nodes[self.cell_nodes[:, 0]]
        hx, hy, hz = self.h
        local = np.array([(a, b, c) for a in _GAUSS for b in _GAUSS for c in _GAUSS])
        offs = 0.5 * (local + 1.0) * np.array([hx, hy, hz])
        return (corner[:, None, :] + offs[None, :, :]).reshape(-1, 3)

    @cached_property
    def eval_matrices(self):
        """Sparse ``(n_qp, n_nodes)`` maps: values, d/dx, d/dy, d/dz at Gauss points."""
        ref = self._reference
        rows = (np.arange(self.n_cells)[:, None, None] * 8 + np.arange(8)[None, :, None])
        rows = np.broadcast_to(rows, (self.n_cells, 8, 8)).ravel()
        cols = np.broadcast_to(self.cell_nodes[:, None, :], (self.n_cells, 8, 8)).ravel()
        mats = []
        for slot in range(4):
            data = np.broadcast_to(ref[slot][None], (self.n_cells, 8, 8)).ravel()
            mats.append(sp.csr_matrix((data, (rows, cols)), shape=(self.n_qp, self.n_nodes)))
        return tuple(mats)

    @cached_property
    def grams(self):
        """Scalar Gram blocks ``D[a][b] = E_a^T W E_b`` for derivative slots a, b.

        Every quadratic form of Q1 fields with constant coefficients is a
        Kronecker combination of these sixteen ``n_nodes x n_nodes`` matrices.
        They are assembled cell-locally, which keeps the sparsity at 27
        entries per row.
        """
        ref = self._reference
        w = np.prod(self.h) / 8.0
        cn = self.cell_nodes
        rows = np.broadcast_to(cn[:, :, None], (self.n_cells, 8, 8)).ravel()
        cols = np.broadcast_to(cn[:, None, :], (self.n_cells, 8, 8)).ravel()
        out = [[None] * 4 for _ in range(4)]
        for a in range(4):
            for b in range(a, 4):
                local = w * ref[a].T @ ref[b]
                data = np.broadcast_to(local[None], (self.n_cells, 8, 8)).ravel()
                m = sp.coo_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes)).tocsr()
                m.sum_duplicates()
                m.sort_indices()
                out[a][b] = m
                if b != a:
                    out[b][a] = m.T.tocsr()
        return out

    @cached_property
    def boundary_faces(self):
        """Boolean ``(n_nodes, 3)``: node lies on a face with normal along axis ``a``."""
        idx = np.stack(
            np.meshgrid(*(np.arange(v + 1) for v in self.n), indexing="ij"), axis=-1
        ).reshape(-1, 3)
        return (idx == 0) | (idx == np.array(self.n))

    @cached_property
    def boundary_nodes(self):
        return self.boundary_faces.any(axis=1)

    def nested_in(self, finer: "Grid") -> bool:
        return self.lengths == finer.lengths and all(f % c == 0 for c, f in zip(self.n, finer.n))

    def interpolate(self, fn, components=None):
        """Nodal interpolant of ``fn(x, y, z)`` (vectorized over nodes)."""
        x, y, z = self.nodes.T
        vals = np.asarray(fn(x, y, z), dtype=float)
        if vals.ndim == 0:
            vals = np.full(self.n_nodes, float(vals))
        if vals.shape[0] != self.n_nodes and vals.shape[-1] == self.n_nodes:
            vals = np.moveaxis(vals, -1, 0)
        return vals


def build_grid(n, lengths=(1.0, 1.0, 1.0)) -> Grid:
    """Box grid with ``n`` cells per axis (an int or three ints)."""
    n = (n,) * 3 if np.isscalar(n) else tuple(n)
    return Grid(n, tuple(lengths))


# ---------------------------------------------------------------------------
# Boundary conditions


class ConstraintKind(enum.Enum):
    DISPLACEMENT_ZERO = "displacement_zero"
    TANGENTIAL_ZERO = "tangential_zero"


def displacement_mask(grid: Grid):
    """Constrained flags ``(n_nodes, 3)``: every component at every boundary node."""
    return np.repeat(grid.boundary_nodes[:, None], 3, axis=1)


def tangential_mask(grid: Grid):
    """Constrained flags ``(n_nodes, 3)`` for one H(curl) row.

    On a face with normal ``e_a`` the components ``b != a`` vanish; at edges
    and corners the union of the adjacent face constraints applies.
    """
    faces = grid.boundary_faces
    count = faces.sum(axis=1)
    mask = np.zeros((grid.n_nodes, 3), dtype=bool)
    one = count == 1
    mask[one] = ~faces[one]
    mask[count >= 2] = True
    return mask


@dataclass(frozen=True, eq=False)
class DofMap:
    """Constrained flags for the (u, P) unknowns.

    ``u_mask`` has shape ``(n_nodes, 3)`` and ``P_mask`` shape
    ``(n_nodes, 3, 3)``; ``True`` marks a constrained scalar. The global dof
    vector is ``concat(u.ravel(), P.ravel())``.
    """

    grid: Grid
    u_mask: np.ndarray
    P_mask: np.ndarray

    @classmethod
    def standard(cls, grid: Grid):
        row = tangential_mask(grid)
        return cls(grid, displacement_mask(grid), np.repeat(row[:, None, :], 3, axis=1))

    @property
    def n_u(self):
        return 3 * self.grid.n_nodes

    @property
    def n_total(self):
        return 12 * self.grid.n_nodes

    @cached_property
    def constrained(self):
        return np.concatenate([self.u_mask.ravel(), self.P_mask.ravel()])

    @cached_property
    def free(self):
        return np.flatnonzero(~self.constrained)

    @cached_property
    def free_u(self):
        return np.flatnonzero(~self.u_mask.ravel())

    @cached_property
    def free_P(self):
        return np.flatnonzero(~self.P_mask.ravel())

    @property
    def n_free(self):
        return self.free.size

    @property
    def n_free_u(self):
        return self.free_u.size

    def pack(self, u, P):
        """Free-dof vector from nodal fields (constrained entries dropped)."""
        full = np.concatenate([np.asarray(u, float).ravel(), np.asarray(P, float).ravel()])
        return full[self.free]

    def unpack(self, q):
        """Nodal ``(u, P)`` fields from a free-dof vector."""
        full = np.zeros(self.n_total)
        full[self.free] = q
        n = self.grid.n_nodes
        return full[: 3 * n].reshape(n, 3), full[3 * n:].reshape(n, 3, 3)


def apply_bc(dofmap: DofMap, field, kind=None):
    """Zero the constrained entries of a u-shaped or P-shaped nodal field."""
    field = np.array(field, dtype=float, copy=True)
    if kind is None:
        kind = ConstraintKind.DISPLACEMENT_ZERO if field.shape[1:] == (3,) else ConstraintKind.TANGENTIAL_ZERO
    if kind is ConstraintKind.DISPLACEMENT_ZERO:
        field[dofmap.u_mask] = 0.0
    else:
        field[dofmap.P_mask] = 0.0
    return field


# ---------------------------------------------------------------------------
# Discrete differential operators at quadrature points


def _check_nodal(grid, arr, trailing):
    arr = np.asarray(arr, dtype=float)
    if arr.shape != (grid.n_nodes,) + trailing:
        raise GridError(f"field shape {arr.shape} does not match grid, expected {(grid.n_nodes,) + trailing}")
    return arr


def discrete_value(grid: Grid, f):
    """Evaluate any nodal field at the quadrature points."""
    f = np.asarray(f, dtype=float)
    if f.shape[0] != grid.n_nodes:
        raise GridError(f"field has {f.shape[0]} nodes, grid has {grid.n_nodes}")
    E = grid.eval_matrices[VALUE]
    return (E @ f.reshape(grid.n_nodes, -1)).reshape((grid.n_qp,) + f.shape[1:])


def discrete_grad(grid: Grid, u):
    u = _check_nodal(grid, u, ())
    return np.stack([grid.eval_matrices[d] @ u for d in (DX, DY, DZ)], axis=-1)


def discrete_Grad(grid: Grid, v):
    """Row-wise gradient: ``out[q, i, j] = d_j v_i``."""
    v = _check_nodal(grid, v, (3,))
    return np.stack([grid.eval_matrices[d] @ v for d in (DX, DY, DZ)], axis=-1)


def discrete_Curl(grid: Grid, P):
    """Row-wise curl: ``out[q, i, :] = curl(P[i, :])``."""
    P = _check_nodal(grid, P, (3, 3))
    dP = np.stack([grid.eval_matrices[d] @ P.reshape(grid.n_nodes, 9) for d in (DX, DY, DZ)], axis=-1)
    dP = dP.reshape(grid.n_qp, 3, 3, 3)  # [q, row i, component m, derivative l]
    return np.einsum("klm,qiml->qik", EPS, dP)


def discrete_div(grid: Grid, v):
    v = _check_nodal(grid, v, (3,))
    return sum(grid.eval_matrices[d] @ v[:, c] for c, d in enumerate((DX, DY, DZ)))


def discrete_Div(grid: Grid, S):
    """Row-wise divergence of a nodal tensor field at quadrature points."""
    S = _check_nodal(grid, S, (3, 3))
    return sum(grid.eval_matrices[d] @ S[:, :, c] for c, d in enumerate((DX, DY, DZ)))


def l2_inner(grid: Grid, a, b):
    """Gauss-weighted ``sum_q w_q <a_q, b_q>`` for fields at quadrature points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[0] != grid.n_qp:
        raise GridError(f"quadrature fields do not match: {a.shape} vs {b.shape}")
    prod = (a * b).reshape(grid.n_qp, -1).sum(axis=1)
    return float(grid.weights @ prod)
