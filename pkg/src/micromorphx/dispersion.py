"""Plane-wave symbol and dispersion branches of the isotropic relaxed model.

Substituting ``(u, P) = (u_hat, P_hat) exp(i(k.x - omega t))`` into the
equations of motion gives ``omega^2 z = M(k) z`` for ``z = (u_hat, P_hat)``,
where ``M(k)`` is the Hessian of the energy density of the plane wave:
``e = i u_hat k^T - P_hat`` enters through C, ``P_hat`` through H and
``i k x P_hat_i`` (row-wise) through L_c.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .grid import EPS
from .tensor_core import IsotropicModuli, MaterialModel, ModelVariant

PSD_TOL = 1e-10


class SymbolNotPSD(ValueError):
    pass


def _blocks(k):
    """Strain, micro and curl maps ``B1, B2, B3`` (9 x 12 each, complex)."""
    k = np.asarray(k, dtype=float).reshape(3)
    B1 = np.zeros((9, 12), dtype=complex)
    for i in range(3):
        for j in range(3):
            B1[3 * i + j, i] = 1j * k[j]
    B1[:, 3:] = -np.eye(9)
    B2 = np.zeros((9, 12), dtype=complex)
    B2[:, 3:] = np.eye(9)
    B3 = np.zeros((9, 12), dtype=complex)
    curl = 1j * np.einsum("klm,l->km", EPS, k)
    for i in range(3):
        B3[3 * i:3 * i + 3, 3 + 3 * i:6 + 3 * i] = curl
    return B1, B2, B3


def _material(material, variant, validate):
    if material is None:
        material = MaterialModel.isotropic(IsotropicModuli(), ModelVariant.FULL, validate=validate)
    elif isinstance(material, IsotropicModuli):
        material = MaterialModel.isotropic(material, ModelVariant.FULL, validate=validate)
    if variant is not None:
        material = material.with_variant(variant)
    return material


def symbol_matrix(k, material=None, variant=None, validate=True):
    """Hermitian 12 x 12 symbol ``M(k)`` acting on ``(u_hat, P_hat)``."""
    mat = _material(material, variant, validate)
    B1, B2, B3 = _blocks(k)
    M = B1.conj().T @ mat.C_eff @ B1 + B2.conj().T @ mat.H_eff @ B2 + B3.conj().T @ mat.L_eff @ B3
    return 0.5 * (M + M.conj().T)


def cutoff_frequencies(material=None, variant=None, validate=True):
    """``omega`` at ``k = 0`` from the dense ``C + H`` block alone (3 acoustic zeros first)."""
    mat = _material(material, variant, validate)
    block = mat.C_eff + mat.H_eff
    lam = np.linalg.eigvalsh(0.5 * (block + block.T))
    return np.sqrt(np.clip(np.concatenate([np.zeros(3), lam]), 0.0, None))


def wave_path(points, samples=100):
    """``samples`` wave vectors spaced uniformly in arc length along a polyline."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(pts) < 2:
        return pts.copy()
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(pts[:1], samples, axis=0)
    target = np.linspace(0.0, s[-1], samples)
    return np.stack([np.interp(target, s, pts[:, c]) for c in range(3)], axis=1)


@dataclass
class DispersionResult:
    k: np.ndarray
    omega: np.ndarray
    min_eigenvalue: float

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k_index", "|k|", "kx", "ky", "kz"] + [f"omega_{j}" for j in range(1, 13)])
        for i, (k, w) in enumerate(zip(self.k, self.omega)):
            writer.writerow([i, f"{np.linalg.norm(k):.17g}"] + [f"{x:.17g}" for x in k] + [f"{x:.17g}" for x in w])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def dispersion_curves(path, material=None, variant=None, validate=True) -> DispersionResult:
    """Sorted branches ``omega_j(k) = sqrt(lam_j(M(k)))`` along ``path``.

    Raises :class:`SymbolNotPSD` if an eigenvalue falls below ``-1e-10``.
    """
    mat = _material(material, variant, validate)
    ks = np.asarray(path, dtype=float).reshape(-1, 3)
    omega = np.zeros((len(ks), 12))
    worst = np.inf
    for i, k in enumerate(ks):
        lam = np.linalg.eigvalsh(symbol_matrix(k, mat))
        worst = min(worst, lam[0])
        if lam[0] < -PSD_TOL:
            raise SymbolNotPSD(f"symbol not PSD: eigenvalue {lam[0]:.3e} at k = {k.tolist()}")
        omega[i] = np.sqrt(np.clip(lam, 0.0, None))
    return DispersionResult(ks, omega, float(worst))


def min_symbol_eigenvalue(path, material=None, variant=None, validate=False):
    """Smallest symbol eigenvalue along ``path`` without the PSD check."""
    mat = _material(material, variant, validate)
    return min(np.linalg.eigvalsh(symbol_matrix(k, mat))[0] for k in np.asarray(path, float).reshape(-1, 3))
