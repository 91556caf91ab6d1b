"""Sparse stiffness, mass and resolvent operators on the free (u, P) dofs.

A field with ``m`` nodal components is mapped pointwise to an ``r``-vector at
each quadrature point by a set of ``r x m`` coefficient matrices, one per
derivative slot (value, d/dx, d/dy, d/dz). A quadratic form
``int <Q y, y>`` of such a map is then a sum of Kronecker products of the
scalar Gram blocks of the grid with ``T_a^T Q T_b``.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

from .grid import DX, DY, DZ, EPS, VALUE, DofMap, Grid
from .linalg import MassSolver
from .tensor_core import PROJECTORS, InvalidMaterial, MaterialModel, ModelVariant

log = logging.getLogger(__name__)

U_SLICE = slice(0, 3)
P_SLICE = slice(3, 12)
UP_SPLITS = ((0, 3), (3, 12))


# ---------------------------------------------------------------------------
# Pointwise maps on the 12 components (u_0..u_2, P_00..P_22)


def _empty(r=9, m=12):
    return {slot: np.zeros((r, m)) for slot in (VALUE, DX, DY, DZ)}


def grad_u_map(m=12, offset=0):
    """``y[3i + j] = d_j u_i`` with u stored at components ``offset..offset+2``."""
    maps = _empty(9, m)
    for i in range(3):
        for j, slot in enumerate((DX, DY, DZ)):
            maps[slot][3 * i + j, offset + i] = 1.0
    return maps


def value_map(r, m, offset=0):
    maps = _empty(r, m)
    maps[VALUE][:, offset:offset + r] = np.eye(r)
    return maps


def curl_map(m=12, offset=3):
    """``y[3i + k] = (curl P_i)_k`` with P stored row-major from ``offset``."""
    maps = _empty(9, m)
    slots = (DX, DY, DZ)
    for i in range(3):
        for k in range(3):
            for l in range(3):
                for mm in range(3):
                    if EPS[k, l, mm]:
                        maps[slots[l]][3 * i + k, offset + 3 * i + mm] += EPS[k, l, mm]
    return maps


def combine(*terms):
    """Linear combination ``sum c * maps`` of pointwise maps, given as (c, maps)."""
    out = {}
    for c, maps in terms:
        for slot, T in maps.items():
            out[slot] = out.get(slot, 0) + c * T
    return out


def project(proj, maps):
    """Compose a 9x9 pointwise projector with a map."""
    return {slot: proj @ T for slot, T in maps.items()}


def elastic_map():
    """sym is applied by the constitutive tensor; this is grad u - P."""
    return combine((1.0, grad_u_map()), (-1.0, value_map(9, 12, 3)))


def micro_map():
    return value_map(9, 12, 3)


def dislocation_map():
    return curl_map()


# ---------------------------------------------------------------------------
# Generic assembly


def quadratic_gram(grid: Grid, maps, Q=None, splits=None):
    """Gram matrix of ``int <Q y, y> dv`` over the full nodal dof space.

    ``splits`` lists component ranges stored as separate node-major blocks
    (default: a single block). Returns CSR.
    """
    any_T = next(iter(maps.values()))
    r, m = any_T.shape
    Q = np.eye(r) if Q is None else np.asarray(Q, dtype=float)
    splits = splits or ((0, m),)
    D = grid.grams
    active = [s for s, T in maps.items() if np.any(T)]
    blocks = []
    for a0, a1 in splits:
        row = []
        for b0, b1 in splits:
            acc = None
            for sa in active:
                Ta = maps[sa][:, a0:a1]
                for sb in active:
                    coef = Ta.T @ Q @ maps[sb][:, b0:b1]
                    if not np.any(coef):
                        continue
                    term = sp.kron(D[sa][sb], sp.csr_matrix(coef), format="csr")
                    acc = term if acc is None else acc + term
            if acc is None:
                acc = sp.csr_matrix((grid.n_nodes * (a1 - a0), grid.n_nodes * (b1 - b0)))
            row.append(acc)
        blocks.append(row)
    out = sp.bmat(blocks, format="csr")
    out.sum_duplicates()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def pointwise_operator(grid: Grid, maps, splits=None):
    """Sparse map from full nodal dofs to quadrature values, rows ``q * r + c``.

    This is the explicit B-matrix: ``quadratic_gram(maps, Q)`` equals
    ``B^T (W kron Q) B``.
    """
    any_T = next(iter(maps.values()))
    r, m = any_T.shape
    splits = splits or ((0, m),)
    E = grid.eval_matrices
    cols = []
    for a0, a1 in splits:
        acc = None
        for slot, T in maps.items():
            coef = T[:, a0:a1]
            if not np.any(coef):
                continue
            term = sp.kron(E[slot], sp.csr_matrix(coef), format="csr")
            acc = term if acc is None else acc + term
        if acc is None:
            acc = sp.csr_matrix((grid.n_qp * r, grid.n_nodes * (a1 - a0)))
        cols.append(acc)
    return sp.hstack(cols, format="csr")


@dataclass
class DiscreteOperator:
    """Sparse map from free (u, P) dofs to an r-component field at quadrature points."""

    name: str
    matrix: sp.csr_matrix
    components: int

    def __call__(self, q, grid: Grid):
        vals = self.matrix @ q
        return vals.reshape(grid.n_qp, *((3, 3) if self.components == 9 else (self.components,)))


def discrete_operators(grid: Grid, dofmap: DofMap, variant=ModelVariant.FULL):
    """B-matrices for the constitutive variables, restricted to free dofs."""
    variant = ModelVariant.parse(variant)
    free = dofmap.free
    specs = {
        "elastic_distortion": elastic_map(),
        "sym_elastic": project(PROJECTORS["sym"], elastic_map()),
        "sym_P": project(PROJECTORS["sym"], micro_map()),
        "strain_channel_P": project(PROJECTORS[variant.strain_channel], micro_map()),
        "curl_P": dislocation_map(),
        "curl_channel": project(PROJECTORS[variant.curl_channel], dislocation_map()),
        "grad_u": grad_u_map(),
        "P": micro_map(),
    }
    return {
        name: DiscreteOperator(name, pointwise_operator(grid, maps, UP_SPLITS)[:, free], 9)
        for name, maps in specs.items()
    }


def restrict(A, idx_rows, idx_cols=None):
    idx_cols = idx_rows if idx_cols is None else idx_cols
    return A[idx_rows][:, idx_cols].tocsr()


def mass_matrix(grid: Grid, dofmap: DofMap, lumped=False):
    """Consistent Q1 mass on the free (u, P) dofs (or its row-sum lumping)."""
    full = quadratic_gram(grid, value_map(12, 12), None, UP_SPLITS)
    M = restrict(full, dofmap.free)
    if lumped:
        M = sp.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()
    return M


# ---------------------------------------------------------------------------
# System matrices


@dataclass
class SystemMatrices:
    grid: Grid
    dofmap: DofMap
    material: MaterialModel
    K: sp.csr_matrix
    K_parts: dict
    M: sp.csr_matrix
    lumped: bool = False
    _mass_solver: MassSolver | None = field(default=None, repr=False)

    @property
    def variant(self) -> ModelVariant:
        return self.material.variant

    @property
    def dof_count(self) -> int:
        return self.K.shape[0]

    @property
    def mass_solve(self) -> MassSolver:
        if self._mass_solver is None:
            self._mass_solver = MassSolver(self.M)
        return self._mass_solver

    def pack(self, u, P):
        return self.dofmap.pack(u, P)

    def unpack(self, q):
        return self.dofmap.unpack(q)

    def energy_parts(self, q):
        """Potential energies ``1/2 q^T K_part q`` keyed like ``K_parts``."""
        return {k: 0.5 * float(q @ (A @ q)) for k, A in self.K_parts.items()}

    def load_vector(self, f, Mload):
        """Weak-form right-hand side ``int <f, du> + <M, dP>`` of nodal load fields."""
        n = self.grid.n_nodes
        full = np.concatenate([np.asarray(f, float).reshape(n * 3), np.asarray(Mload, float).reshape(n * 9)])
        return self.full_mass @ full

    @property
    def full_mass(self):
        """Mass rows of the free dofs against all nodal dofs."""
        if not hasattr(self, "_full_mass"):
            full = quadratic_gram(self.grid, value_map(12, 12), None, UP_SPLITS)
            self._full_mass = full[self.dofmap.free].tocsr()
            self._nodal_mass = full
        return self._full_mass

    @property
    def nodal_mass(self):
        """Consistent mass over all nodal dofs (for L2 norms of unconstrained fields)."""
        self.full_mass
        return self._nodal_mass


def assemble_stiffness(grid: Grid, dofmap: DofMap | None = None, material: MaterialModel | None = None,
                       variant=None, lumped=False, validate=True, dump_dir=None) -> SystemMatrices:
    """Stiffness ``K = K_elastic + K_micro + K_dislocation`` on free dofs.

    The three parts are the Hessians of the elastic, micro-strain and
    dislocation energies, with the micro-strain and dislocation channels
    projected according to the model variant.
    """
    dofmap = dofmap or DofMap.standard(grid)
    material = material or MaterialModel.isotropic()
    if variant is not None:
        material = material.with_variant(variant)
    if validate:
        try:
            material.validate()
        except InvalidMaterial:
            raise
        except ValueError as exc:
            raise InvalidMaterial(str(exc)) from exc
    free = dofmap.free
    parts = {
        "elastic": quadratic_gram(grid, elastic_map(), material.C_eff, UP_SPLITS),
        "microstrain": quadratic_gram(grid, micro_map(), material.H_eff, UP_SPLITS),
        "dislocation": quadratic_gram(grid, dislocation_map(), material.L_eff, UP_SPLITS),
    }
    parts = {k: restrict(v, free) for k, v in parts.items()}
    K = (parts["elastic"] + parts["microstrain"] + parts["dislocation"]).tocsr()
    K.sort_indices()
    M = mass_matrix(grid, dofmap, lumped=lumped)
    sm = SystemMatrices(grid, dofmap, material, K, parts, M, lumped)
    if dump_dir is None:
        dump_dir = os.environ.get("MICROMORPHX_DUMP_DIR")
    if dump_dir:
        dump_matrices(sm, dump_dir)
    return sm


def assemble_resolvent(sm_or_grid, dofmap=None, material=None, variant=None):
    """``R = M + K``: the weak form of ``(I - A) w = w*`` after eliminating rates."""
    if isinstance(sm_or_grid, SystemMatrices):
        sm = sm_or_grid
    else:
        sm = assemble_stiffness(sm_or_grid, dofmap, material, variant)
    return (sm.M + sm.K).tocsr()


def dump_matrices(sm: SystemMatrices, directory):
    """Write K, M and the parts in MatrixMarket coordinate format."""
    os.makedirs(directory, exist_ok=True)
    for name, A in [("K", sm.K), ("M", sm.M)] + [(f"K_{k}", v) for k, v in sm.K_parts.items()]:
        scipy.io.mmwrite(os.path.join(directory, f"{name}.mtx"), A, precision=17)
    log.info("wrote MatrixMarket dumps to %s", directory)


# ---------------------------------------------------------------------------
# First-order generator


def generator_apply(sm: SystemMatrices, w):
    """``A w`` for ``w = (q, p)``: returns ``(p, -M^-1 K q)``."""
    w = np.asarray(w, dtype=float)
    n = sm.dof_count
    if w.shape != (2 * n,):
        raise ValueError(f"state vector must have length {2 * n}, got {w.shape}")
    q, p = w[:n], w[n:]
    acc = -sm.mass_solve(sm.K @ q)
    return np.concatenate([p, acc])


def generator_dense(sm: SystemMatrices):
    """Dense first-order generator (only for tiny grids)."""
    n = sm.dof_count
    Minv_K = np.linalg.solve(sm.M.toarray(), sm.K.toarray())
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -Minv_K
    return A
