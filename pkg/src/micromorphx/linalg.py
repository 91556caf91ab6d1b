"""Preconditioned CG and smallest generalized eigenpairs."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pyamg
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


def jacobi(A):
    d = np.asarray(A.diagonal(), dtype=float).copy()
    d[d == 0] = 1.0
    return sp.diags(1.0 / d).tocsr()


def amg(A):
    """Smoothed-aggregation V-cycle as a preconditioner for an SPD matrix."""
    return pyamg.smoothed_aggregation_solver(sp.csr_matrix(A), max_coarse=500).aspreconditioner(cycle="V")


def preconditioner(A, kind="jacobi"):
    if kind == "amg":
        return amg(A)
    if kind == "jacobi":
        return jacobi(A)
    raise ValueError(f"unknown preconditioner {kind!r}")


def cg_solve(A, b, rtol=1e-12, x0=None, maxiter=None, M=None):
    """Solve the SPD system ``A x = b`` to relative residual ``rtol``.

    Raises :class:`ConvergenceError` carrying the achieved residual when the
    iteration cap is hit.
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    if maxiter is None:
        maxiter = max(10 * b.size, 1000)
    if M is None:
        M = jacobi(A)
    count = [0]

    def _cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter, M=M, callback=_cb)
    res = np.linalg.norm(b - A @ x) / bnorm
    # the preconditioned residual test can stop slightly above rtol
    if info != 0 or res > 10 * rtol:
        raise ConvergenceError("CG did not converge", res, count[0])
    return x


class MassSolver:
    """Cached mass-matrix inverse applied by CG (or exactly for a diagonal mass)."""

    def __init__(self, M, rtol=1e-12):
        self.M = M
        self.rtol = rtol
        self.diagonal = None
        if sp.issparse(M):
            off = M - sp.diags(M.diagonal())
            if off.count_nonzero() == 0:
                self.diagonal = M.diagonal().copy()
        self._pre = jacobi(M)

    def __call__(self, b):
        if self.diagonal is not None:
            return b / self.diagonal
        return cg_solve(self.M, b, rtol=self.rtol, M=self._pre)


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    iterations: int
    converged: bool
    residual: float = float("nan")


DENSE_EIG_LIMIT = 200


def _dense_smallest(A, B):
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    B = B.toarray() if sp.issparse(B) else np.asarray(B, dtype=float)
    # B may be singular, so take the largest mu of B x = mu A x
    mu, vec = scipy.linalg.eigh(B, A)
    x = vec[:, -1]
    bx = float(x @ B @ x)
    lam = float(x @ A @ x) / bx if bx > 0 else float("inf")
    if bx > 0:
        x = x / np.sqrt(bx)
    return EigenResult(lam, x, 0, True, 0.0)


def smallest_generalized(A, B, tol=1e-6, maxiter=1000, seed=42, block=4, precond="amg", x0=None):
    """Smallest eigenpair of ``A x = lam B x`` by preconditioned LOBPCG.

    ``A`` is SPD and ``B`` symmetric positive semidefinite. ``tol`` is the
    LOBPCG residual tolerance; the eigenvalue error is of the order of its
    square. ``converged`` means LOBPCG stopped before ``maxiter``, and
    ``residual`` is ``|A x - lam B x| / |A x|``. The returned value is a
    Rayleigh quotient, so it never undershoots the discrete minimum.
    Pencils of order up to ``DENSE_EIG_LIMIT`` are solved densely.
    """
    n = A.shape[0]
    if n <= DENSE_EIG_LIMIT:
        return _dense_smallest(A, B)
    rng = np.random.default_rng(seed)
    k = min(block, max(1, n // 4))
    X = rng.standard_normal((n, k))
    if x0 is not None:
        X[:, 0] = x0
    pre = preconditioner(A, precond)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals, vecs, hist = spla.lobpcg(A, X, B=B, M=pre, largest=False, tol=tol, maxiter=maxiter,
                                       retLambdaHistory=True)
    j = int(np.argmin(vals))
    x = vecs[:, j]
    Ax, Bx = A @ x, B @ x
    lam = float(x @ Ax) / float(x @ Bx)
    res = np.linalg.norm(Ax - lam * Bx) / max(np.linalg.norm(Ax), np.finfo(float).tiny)
    x = x / np.sqrt(float(x @ Bx))
    return EigenResult(lam, x, len(hist), len(hist) < maxiter, float(res))


def inverse_iteration(A, B, rtol=1e-10, maxiter=2000, seed=42, solver_rtol=1e-10, x0=None, precond="jacobi"):
    """Smallest eigenvalue of ``A x = lam B x`` by inverse iteration.

    Each step solves ``A y = B x`` by preconditioned CG, warm-started from the
    previous iterate scaled by the current estimate, so a semidefinite ``A``
    whose kernel is shared by ``B`` is handled. Stops when the Rayleigh
    quotient changes by less than ``rtol`` relatively.
    """
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) if x0 is None else np.array(x0, dtype=float)
    pre = preconditioner(A, precond)

    def rayleigh(v):
        return float(v @ (A @ v)) / float(v @ (B @ v))

    xb = float(x @ (B @ x))
    if xb <= 0:
        raise ConvergenceError("start vector lies in the kernel of B", float("nan"), 0)
    x /= np.sqrt(xb)
    lam = rayleigh(x)
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        guess = x / max(lam, np.finfo(float).tiny)
        y = cg_solve(A, B @ x, rtol=solver_rtol, x0=guess, M=pre)
        nb = float(y @ (B @ y))
        if not np.isfinite(nb) or nb <= 0:
            raise ConvergenceError("inverse iteration collapsed", float("nan"), it)
        x = y / np.sqrt(nb)
        new = rayleigh(x)
        if abs(new - lam) <= rtol * abs(new):
            lam = new
            converged = True
            break
        lam = new
    res = np.linalg.norm(A @ x - lam * (B @ x)) / max(np.linalg.norm(A @ x), np.finfo(float).tiny)
    return EigenResult(lam, x, it, converged, float(res))
