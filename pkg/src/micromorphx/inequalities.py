"""Best constants of coercive inequalities on the discrete Q1 spaces.

Every inequality ``||N f|| <= c ||D f||`` is encoded by two quadratic forms.
The discrete best constant is ``1 / sqrt(lam_min)`` where ``lam_min`` is the
smallest eigenvalue of the pencil ``(D-Gram, N-Gram)``; it is found by
inverse iteration, so each estimate is exact for the discrete space up to the
iteration tolerance.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import project, quadratic_gram, restrict
from .grid import DX, DY, DZ, EPS, VALUE, Grid, build_grid, displacement_mask, tangential_mask
from .linalg import ConvergenceError, inverse_iteration, smallest_generalized
from .tensor_core import P_DEV, P_DEVSYM, P_SYM, PROJECTORS, ModelVariant

log = logging.getLogger(__name__)

SLOTS = (DX, DY, DZ)


class Tag(enum.Enum):
    POINCARE = "poincare"
    KORN = "korn"
    MAXWELL = "maxwell"
    SYM_CURL = "sym_curl"
    HCURL_EQUIV = "hcurl_equiv"
    DEV_CURL = "dev_curl"
    DEVSYM_DEVCURL = "devsym_devcurl"
    DEVSYM_DEVCURL_HCURL = "devsym_devcurl_hcurl"
    DEVSYM_GRAD = "devsym_grad"
    VARIANT = "variant"


class Classification(enum.Enum):
    WELL_POSED_EVIDENCE = "WELL_POSED_EVIDENCE"
    DEGENERATE_EVIDENCE = "DEGENERATE_EVIDENCE"
    INCONCLUSIVE = "INCONCLUSIVE"


# ---------------------------------------------------------------------------
# pointwise maps for 1-, 3- and 9-component fields


def _zero(r, m):
    return {s: np.zeros((r, m)) for s in (VALUE, DX, DY, DZ)}


def _value(m):
    maps = _zero(m, m)
    maps[VALUE][:] = np.eye(m)
    return maps


def _grad_scalar():
    maps = _zero(3, 1)
    for j, s in enumerate(SLOTS):
        maps[s][j, 0] = 1.0
    return maps


def _grad_vector():
    maps = _zero(9, 3)
    for i in range(3):
        for j, s in enumerate(SLOTS):
            maps[s][3 * i + j, i] = 1.0
    return maps


def _curl_vector():
    maps = _zero(3, 3)
    for k in range(3):
        for l, s in enumerate(SLOTS):
            for m in range(3):
                maps[s][k, m] += EPS[k, l, m]
    return maps


def _div_vector():
    maps = _zero(1, 3)
    for j, s in enumerate(SLOTS):
        maps[s][0, j] = 1.0
    return maps


def _curl_tensor():
    maps = _zero(9, 9)
    for i in range(3):
        for k in range(3):
            for l, s in enumerate(SLOTS):
                for m in range(3):
                    maps[s][3 * i + k, 3 * i + m] += EPS[k, l, m]
    return maps


@dataclass(frozen=True)
class InequalitySpec:
    """Quotient ``N(f) / D(f)`` on a constrained Q1 space.

    ``numerator`` and ``denominator`` are tuples of pointwise maps whose
    squared L2 norms are summed. ``field`` is ``"scalar"``, ``"vector"``
    (Dirichlet), ``"hcurl_vector"`` or ``"tensor"`` (row-wise tangential).
    """

    tag: Tag
    name: str
    field: str
    numerator: tuple = field(repr=False)
    denominator: tuple = field(repr=False)

    @property
    def components(self):
        return {"scalar": 1, "vector": 3, "hcurl_vector": 3, "tensor": 9}[self.field]

    def mask(self, grid: Grid):
        if self.field == "scalar":
            return grid.boundary_nodes.copy()
        if self.field == "vector":
            return displacement_mask(grid).ravel()
        row = tangential_mask(grid)
        if self.field == "hcurl_vector":
            return row.ravel()
        return np.repeat(row[:, None, :], 3, axis=1).ravel()

    @classmethod
    def named(cls, name) -> "InequalitySpec":
        key = str(name).lower().replace("-", "_")
        if key.startswith("variant:"):
            return cls.for_variant(key.split(":", 1)[1])
        try:
            return _SPECS[Tag(key)]
        except ValueError:
            raise ValueError(f"unknown inequality {name!r}") from None

    @classmethod
    def for_variant(cls, variant) -> "InequalitySpec":
        """P-coercivity of a relaxed-model variant: ``||P||^2`` over its P-energy channels."""
        variant = ModelVariant.parse(variant)
        return cls(
            Tag.VARIANT,
            f"variant:{variant.name}",
            "tensor",
            (_value(9),),
            (
                project(PROJECTORS[variant.strain_channel] @ P_SYM, _value(9)),
                project(PROJECTORS[variant.curl_channel], _curl_tensor()),
            ),
        )


_SPECS = {
    Tag.POINCARE: InequalitySpec(Tag.POINCARE, "poincare", "scalar", (_value(1),), (_grad_scalar(),)),
    Tag.KORN: InequalitySpec(Tag.KORN, "korn", "vector", (_grad_vector(),), (project(P_SYM, _grad_vector()),)),
    Tag.MAXWELL: InequalitySpec(Tag.MAXWELL, "maxwell", "hcurl_vector", (_value(3),), (_curl_vector(), _div_vector())),
    Tag.SYM_CURL: InequalitySpec(
        Tag.SYM_CURL, "sym_curl", "tensor", (_value(9),), (project(P_SYM, _value(9)), _curl_tensor())
    ),
    Tag.HCURL_EQUIV: InequalitySpec(
        Tag.HCURL_EQUIV, "hcurl_equiv", "tensor", (_value(9), _curl_tensor()), (project(P_SYM, _value(9)), _curl_tensor())
    ),
    Tag.DEV_CURL: InequalitySpec(Tag.DEV_CURL, "dev_curl", "tensor", (_curl_tensor(),), (project(P_DEV, _curl_tensor()),)),
    Tag.DEVSYM_DEVCURL: InequalitySpec(
        Tag.DEVSYM_DEVCURL, "devsym_devcurl", "tensor", (_value(9),),
        (project(P_DEVSYM, _value(9)), project(P_DEV, _curl_tensor())),
    ),
    Tag.DEVSYM_DEVCURL_HCURL: InequalitySpec(
        Tag.DEVSYM_DEVCURL_HCURL, "devsym_devcurl_hcurl", "tensor", (_value(9), _curl_tensor()),
        (project(P_DEVSYM, _value(9)), project(P_DEV, _curl_tensor())),
    ),
    Tag.DEVSYM_GRAD: InequalitySpec(
        Tag.DEVSYM_GRAD, "devsym_grad", "vector", (_grad_vector(),), (project(P_DEVSYM, _grad_vector()),)
    ),
}

FIGURE1_VARIANTS = (
    ModelVariant.SYM_CURL,
    ModelVariant.DEVSYM_CURL,
    ModelVariant.DEV_SYMCURL,
    ModelVariant.DEV_DEVSYMCURL,
)


def spec_grams(spec: InequalitySpec, grid: Grid):
    """Numerator and denominator Gram matrices on the free dofs."""
    free = np.flatnonzero(~spec.mask(grid))

    def gram(terms):
        total = None
        for maps in terms:
            G = quadratic_gram(grid, maps)
            total = G if total is None else total + G
        return restrict(total, free)

    return gram(spec.numerator), gram(spec.denominator), free


# ---------------------------------------------------------------------------


@dataclass
class ConstantEstimate:
    spec: str
    grid: tuple
    constant: float
    min_rayleigh: float
    iterations: int
    converged: bool
    degenerate: bool = False
    vector: np.ndarray | None = field(default=None, repr=False)

    def holds(self, num_sq, den_sq, atol=1e-10):
        """Check ``sqrt(num_sq) <= constant * sqrt(den_sq) + atol``."""
        return np.sqrt(num_sq) <= self.constant * np.sqrt(den_sq) + atol


DEGENERATE_RTOL = 1e-8


def estimate_constant(spec, grid: Grid, seed=42, method="lobpcg", tol=None, maxiter=None,
                      precond="amg") -> ConstantEstimate:
    """Discrete best constant of ``spec`` on ``grid``.

    ``method`` is ``"lobpcg"`` (default) or ``"inverse"``. A denominator that
    is singular on the constrained space is reported as degenerate with an
    infinite constant: either CG fails on the inconsistent inverse-iteration
    system, or the smallest quotient falls below ``DEGENERATE_RTOL`` times the
    diagonal scale of the pencil.
    """
    if not isinstance(spec, InequalitySpec):
        spec = InequalitySpec.named(spec)
    Gn, Gd, free = spec_grams(spec, grid)
    try:
        if method == "lobpcg":
            res = smallest_generalized(Gd, Gn, tol=tol or 1e-6, maxiter=maxiter or 1000, seed=seed, precond=precond)
        elif method == "inverse":
            res = inverse_iteration(Gd, Gn, rtol=tol or 1e-10, maxiter=maxiter or 2000, seed=seed,
                                    precond="jacobi" if precond is None else precond)
        else:
            raise ValueError(f"unknown method {method!r}")
    except ConvergenceError as exc:
        log.info("%s on %s degenerate: %s", spec.name, grid.n, exc)
        return ConstantEstimate(spec.name, grid.n, float("inf"), 0.0, exc.iterations, False, True)
    lam = res.value
    scale = abs(Gd.diagonal()).max() / max(abs(Gn.diagonal()).max(), np.finfo(float).tiny)
    degenerate = lam <= DEGENERATE_RTOL * scale
    const = float("inf") if degenerate else 1.0 / np.sqrt(lam)
    return ConstantEstimate(spec.name, grid.n, const, lam, res.iterations, res.converged, degenerate, res.vector)


@dataclass
class RefinementStudy:
    spec: str
    rows: list
    classification: Classification

    @property
    def constants(self):
        return [r.constant for r in self.rows]

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["spec", "grid", "constant", "lambda_min", "iterations", "classification"])
        for r in self.rows:
            writer.writerow([
                self.spec, "x".join(map(str, r.grid)), f"{r.constant:.17g}", f"{r.min_rayleigh:.17g}",
                r.iterations, self.classification.value,
            ])
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def classify(constants, stable_rtol=0.2, growth=2.0):
    """Well-posed if the last two levels agree to ``stable_rtol``; degenerate if
    the constants grow by at least ``growth`` per level (or are infinite)."""
    c = np.asarray(constants, dtype=float)
    if not np.all(np.isfinite(c)):
        return Classification.DEGENERATE_EVIDENCE
    if c.size >= 2:
        ratios = c[1:] / c[:-1]
        if np.all(ratios >= growth):
            return Classification.DEGENERATE_EVIDENCE
        if abs(c[-1] - c[-2]) <= stable_rtol * abs(c[-1]):
            return Classification.WELL_POSED_EVIDENCE
    return Classification.INCONCLUSIVE


def refinement_study(spec, levels, lengths=(1.0, 1.0, 1.0), seed=42, **kwargs) -> RefinementStudy:
    """Constants on a nested sequence of grids, with a growth classification.

    ``levels`` may hold :class:`Grid` objects or cell counts per axis.
    """
    if not isinstance(spec, InequalitySpec):
        spec = InequalitySpec.named(spec)
    grids = [lv if isinstance(lv, Grid) else build_grid((lv,) * 3 if np.isscalar(lv) else lv, lengths) for lv in levels]
    for coarse, fine in zip(grids, grids[1:]):
        if not coarse.nested_in(fine):
            raise ValueError(f"levels are not nested: {coarse.n} does not divide {fine.n}")
    rows = [estimate_constant(spec, g, seed=seed, **kwargs) for g in grids]
    for r in rows:
        r.vector = None
    return RefinementStudy(spec.name, rows, classify([r.constant for r in rows]))


def figure1_study(levels=(4, 8, 16), **kwargs):
    """Refinement studies for the P-coercivity of every relaxed-model variant."""
    variants = (ModelVariant.FULL, ModelVariant.DEV_DEV) + FIGURE1_VARIANTS
    return {v.name: refinement_study(InequalitySpec.for_variant(v), levels, **kwargs) for v in variants}


def random_admissible(spec, grid: Grid, rng):
    """Random free-dof vector for ``spec`` (for validity probes)."""
    if not isinstance(spec, InequalitySpec):
        spec = InequalitySpec.named(spec)
    n = int((~spec.mask(grid)).sum())
    return rng.standard_normal(n)


# ---------------------------------------------------------------------------
# Split constants derived from material bounds


def split_a1(c_m, h_m):
    """Best constant from the delta-splitting of the elastic and micro-strain terms.

    Maximizes ``min(c_m (1 - d), c_m + h_m - c_m / d)`` over
    ``c_m / (c_m + h_m) < d < 1``.
    """
    delta = (-h_m + np.sqrt(h_m**2 + 4 * c_m**2)) / (2 * c_m)
    return c_m * (1 - delta), delta
