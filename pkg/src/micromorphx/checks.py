"""Quick built-in invariant suite (run by ``micromorphx verify``).

Every check uses a small grid so the whole suite finishes in well under a
minute. Each returns ``(name, value, tolerance, passed)``.
"""
from __future__ import annotations

import numpy as np

from .assembly import assemble_stiffness
from .dispersion import cutoff_frequencies, symbol_matrix
from .dynamics import RunConfig, State, run
from .grid import build_grid
from .inequalities import estimate_constant
from .statics import check_dissipativity, manufactured_rhs, norm_X, random_state, solve_resolvent
from .tensor_core import IsotropicModuli, MaterialModel


def _check(name, value, tol, passed=None):
    value = float(value)
    return {"check": name, "value": value, "tolerance": tol, "passed": bool(value <= tol if passed is None else passed)}


def run_checks(seed=42):
    rng = np.random.default_rng(seed)
    out = []
    for variant in ("FULL", "DEV_DEV"):
        sm = assemble_stiffness(build_grid(4), variant=variant)
        K = sm.K
        out.append(_check(f"{variant}: stiffness symmetry", abs(K - K.T).max() / abs(K).max(), 1e-12))
        out.append(_check(f"{variant}: dissipativity", check_dissipativity(sm, 20, seed), 1e-10))
        w = random_state(sm, rng)
        res = solve_resolvent(sm, manufactured_rhs(sm, w))
        out.append(_check(f"{variant}: resolvent recovery", norm_X(sm, res.w - w) / norm_X(sm, w), 1e-8))
        r = run(RunConfig(sm, dt=0.02, T=1.0, initial=State.random(sm, rng)))
        out.append(_check(f"{variant}: energy drift", r.report["max_relative_drift"], 1e-9))
    c = estimate_constant("poincare", build_grid(8), seed=seed).constant
    oracle = 1.0 / np.sqrt(3 * np.pi**2)
    out.append(_check("poincare constant at 8^3 vs 1/sqrt(3 pi^2)", abs(c - oracle) / oracle, 0.02))
    m = MaterialModel.isotropic(IsotropicModuli(1.3, 0.7, 0.2, 0.9, 0.4, 1.1, 0.8, 0.5))
    lam = np.linalg.eigvalsh(symbol_matrix(np.zeros(3), m))
    cut = cutoff_frequencies(m) ** 2
    out.append(_check("k = 0 symbol vs dense C + H", np.max(np.abs(np.sort(lam) - np.sort(cut))), 1e-12))
    return out
