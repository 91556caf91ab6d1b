"""Resolvent solves, the energy inner product on states, and coercivity checks.

A first-order state is ``w = (q, p)`` where ``q`` packs the free (u, P) dofs
and ``p`` their rates. The energy inner product is
``(w1, w2)_X = p1^T M p2 + q1^T K q2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import (
    UP_SPLITS,
    SystemMatrices,
    assemble_resolvent,
    assemble_stiffness,
    curl_map,
    generator_apply,
    grad_u_map,
    micro_map,
    project,
    quadratic_gram,
    restrict,
    value_map,
)
from .inequalities import split_a1
from .linalg import ConvergenceError, cg_solve, inverse_iteration, smallest_generalized
from .tensor_core import PROJECTORS, IsotropicModuli, MaterialModel, ModelVariant


def split(sm: SystemMatrices, w):
    w = np.asarray(w, dtype=float)
    n = sm.dof_count
    if w.shape != (2 * n,):
        raise ValueError(f"state vector must have length {2 * n}, got {w.shape}")
    return w[:n], w[n:]


def inner_product_X(sm: SystemMatrices, w1, w2):
    q1, p1 = split(sm, w1)
    q2, p2 = split(sm, w2)
    return float(p1 @ (sm.M @ p2) + q1 @ (sm.K @ q2))


def norm_X(sm: SystemMatrices, w):
    return np.sqrt(max(inner_product_X(sm, w, w), 0.0))


def random_state(sm: SystemMatrices, rng, kinetic=True, potential=True):
    n = sm.dof_count
    q = rng.standard_normal(n) if potential else np.zeros(n)
    p = rng.standard_normal(n) if kinetic else np.zeros(n)
    return np.concatenate([q, p])


def check_dissipativity(sm: SystemMatrices, samples=100, seed=0):
    """Largest ``|(A w, w)_X| / (w, w)_X`` over random admissible states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        w = random_state(sm, rng)
        ww = inner_product_X(sm, w, w)
        if ww == 0.0:
            continue
        worst = max(worst, abs(inner_product_X(sm, generator_apply(sm, w), w)) / ww)
    return worst


@dataclass
class ResolventResult:
    w: np.ndarray
    residual: float
    iterations: int = 0


def solve_resolvent(sm: SystemMatrices, w_star, rtol=1e-10, R=None):
    """Solve ``(I - A) w = w*`` in the Galerkin sense.

    With ``w* = (q*, p*)`` the rates are eliminated: ``(M + K) q = M (q* + p*)``
    and then ``p = q - q*``. The returned residual is
    ``|(I - A) w - w*|_X / |w*|_X``.
    """
    q_star, p_star = split(sm, w_star)
    R = assemble_resolvent(sm) if R is None else R
    rhs = sm.M @ (q_star + p_star)
    q = cg_solve(R, rhs, rtol=rtol)
    p = q - q_star
    w = np.concatenate([q, p])
    denom = norm_X(sm, w_star)
    r = w - generator_apply(sm, w) - np.asarray(w_star, dtype=float)
    residual = norm_X(sm, r) / denom if denom > 0 else norm_X(sm, r)
    return ResolventResult(w, residual)


def manufactured_rhs(sm: SystemMatrices, w):
    """``w* = w - A w`` for a chosen state ``w``."""
    return np.asarray(w, dtype=float) - generator_apply(sm, w)


# ---------------------------------------------------------------------------
# Standard norms and coercivity


def standard_gram(sm: SystemMatrices, rates=False):
    """Gram matrix of ``|u|_H1^2 + |P|_H(Curl)^2`` on the free (u, P) dofs.

    With ``rates=True`` returns the block-diagonal Gram on states ``(q, p)``
    of ``|grad u|^2 + |P|^2 + |Curl P|^2 + |v|^2 + |P_t|^2``, the quantity
    controlled by continuous dependence.
    """
    grid = sm.grid
    if rates:
        maps = [grad_u_map(), micro_map(), curl_map()]
    else:
        maps = [grad_u_map(), value_map(12, 12), curl_map()]
    G = None
    for m in maps:
        term = quadratic_gram(grid, m, None, UP_SPLITS)
        G = term if G is None else G + term
    G = restrict(G, sm.dofmap.free)
    if rates:
        return sp.block_diag([G, sm.M], format="csr")
    return G


@dataclass
class CoercivityResult:
    value: float
    iterations: int
    converged: bool


def coercivity_lower_bound(sm: SystemMatrices, method="lobpcg", **kwargs):
    """Smallest eigenvalue of ``R = M + K`` relative to the standard Z-norm Gram."""
    R = assemble_resolvent(sm)
    Z = standard_gram(sm)
    if method == "inverse":
        res = inverse_iteration(R, Z, **kwargs)
    else:
        res = smallest_generalized(R, Z, **kwargs)
    if not np.isfinite(res.value):
        raise ConvergenceError("coercivity eigen-iteration stagnated", res.residual, res.iterations)
    return CoercivityResult(res.value, res.iterations, res.converged)


def norm_equivalence(sm: SystemMatrices, **kwargs):
    """Measured ``c, C`` with ``c |q|_std^2 <= q^T K q <= C |q|_std^2`` on free dofs."""
    Z = standard_gram(sm)
    lo = smallest_generalized(sm.K.tocsr(), Z, **kwargs).value
    hi = 1.0 / smallest_generalized(Z, sm.K.tocsr(), **kwargs).value
    return lo, hi


# ---------------------------------------------------------------------------
# Strain-energy splitting estimates


def channel_min(coefficients, projector):
    """Smallest eigenvalue of a 9x9 quadratic form on the range of an orthogonal projector."""
    ev, vec = np.linalg.eigh(projector)
    basis = vec[:, ev > 0.5]
    A = basis.T @ coefficients @ basis
    return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])


@dataclass
class SplitCheck:
    a1: float
    delta: float
    worst_ratio: float
    passed: bool
    samples: int


def split_estimate_check(sm: SystemMatrices, samples=100, seed=0, a1=None):
    """Check ``a1 (|S grad u|^2 + |S P|^2) <= <C e, e> + <H S P, S P>`` on probes.

    ``S`` is ``sym`` under FULL and ``devsym`` under DEV_DEV (the splitting
    uses the bounds of C and H on the corresponding subspace). ``a1`` defaults
    to the optimal value of the delta-splitting.
    """
    mat = sm.material
    variant = mat.variant
    S = PROJECTORS[variant.strain_channel]
    c_m = channel_min(mat.C.coefficients, PROJECTORS["sym"])
    h_m = channel_min(mat.H.coefficients, S)
    a1_opt, delta = split_a1(c_m, h_m)
    a1 = a1_opt if a1 is None else a1
    grid = sm.grid
    free = sm.dofmap.free
    lhs = restrict(
        quadratic_gram(grid, project(S, grad_u_map()), None, UP_SPLITS)
        + quadratic_gram(grid, project(S, micro_map()), None, UP_SPLITS),
        free,
    )
    rhs = sm.K_parts["elastic"] + sm.K_parts["microstrain"]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        q = rng.standard_normal(sm.dof_count)
        den = float(q @ (rhs @ q))
        worst = max(worst, a1 * float(q @ (lhs @ q)) / den)
    return SplitCheck(a1, delta, worst, worst <= 1.0 + 1e-12, samples)


# ---------------------------------------------------------------------------
# H = 0 experiment


@dataclass
class DegenerateHReport:
    lambda_min_K: float
    lambda_min_R: float
    resolvent_residual: float
    iterations: int
    notes: list = field(default_factory=list)


def zero_h_experiment(grid, variant=ModelVariant.FULL, seed=0):
    """Assemble with ``H = 0`` and report the smallest stiffness and resolvent eigenvalues.

    The resolvent ``M + K`` stays SPD, so the static solve still works, while
    the stiffness (the potential part of the X inner product) may lose
    definiteness. Nothing is asserted here.
    """
    moduli = IsotropicModuli(mu_h=0.0, lambda_h=0.0)
    mat = MaterialModel.isotropic(moduli, variant, validate=False)
    sm = assemble_stiffness(grid, material=mat, validate=False)
    M = sm.M
    kmin = smallest_generalized(sm.K.tocsr(), M, precond="jacobi")
    rmin = smallest_generalized(assemble_resolvent(sm), M, precond="jacobi")
    rng = np.random.default_rng(seed)
    w = random_state(sm, rng)
    res = solve_resolvent(sm, manufactured_rhs(sm, w))
    notes = []
    if kmin.value < 1e-8:
        notes.append("stiffness numerically singular: the energy pairing is only a seminorm")
    return DegenerateHReport(kmin.value, rmin.value, res.residual, kmin.iterations, notes)
