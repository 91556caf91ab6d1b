"""3x3 tensor algebra, constitutive fourth-order tensors and parameter checks.

All tensor helpers accept arrays of shape ``(..., 3, 3)`` so they can be used
pointwise on whole fields. Fourth-order tensors are stored as 9x9 matrices
acting on row-major vectorized tensors, ``vec(X)[3*i + j] = X[i, j]``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

IDENTITY = np.eye(3)


def tr(X):
    return np.trace(X, axis1=-2, axis2=-1)


def sym(X):
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def skew(X):
    X = np.asarray(X, dtype=float)
    return 0.5 * (X - np.swapaxes(X, -1, -2))


def spherical(X):
    return (tr(X) / 3.0)[..., None, None] * IDENTITY


def dev(X):
    return np.asarray(X, dtype=float) - spherical(X)


def devsym(X):
    return dev(sym(X))


def frobenius(X, Y):
    """Pointwise Frobenius product ``<X, Y> = tr(X Y^T)``."""
    return np.einsum("...ij,...ij->...", X, Y)


def decompose(X):
    """Orthogonal Cartan split of ``X`` into (dev sym X, skew X, tr(X)/3 * 1)."""
    X = np.asarray(X, dtype=float)
    return devsym(X), skew(X), spherical(X)


# ---------------------------------------------------------------------------
# 9x9 projectors on vectorized tensors


def _projector(fn):
    basis = np.eye(9).reshape(9, 3, 3)
    return np.stack([fn(E).ravel() for E in basis], axis=1)


P_SYM = _projector(sym)
P_SKEW = _projector(skew)
P_DEV = _projector(dev)
P_DEVSYM = _projector(devsym)
P_SPH = _projector(spherical)
P_FULL = np.eye(9)
ID_OUTER = np.outer(IDENTITY.ravel(), IDENTITY.ravel())

PROJECTORS = {
    "full": P_FULL,
    "sym": P_SYM,
    "skew": P_SKEW,
    "dev": P_DEV,
    "devsym": P_DEVSYM,
}


def _sym_basis():
    """Orthonormal basis of Sym(3) as a 9x6 matrix of vectorized tensors."""
    cols = []
    for i in range(3):
        E = np.zeros((3, 3))
        E[i, i] = 1.0
        cols.append(E.ravel())
    for i, j in ((0, 1), (0, 2), (1, 2)):
        E = np.zeros((3, 3))
        E[i, j] = E[j, i] = np.sqrt(0.5)
        cols.append(E.ravel())
    return np.stack(cols, axis=1)


SYM_BASIS = _sym_basis()


# ---------------------------------------------------------------------------
# Model variants


class ModelVariant(enum.Enum):
    """Relaxed-model family, tagged by the (micro-strain, dislocation) channels.

    Each value is ``(projector on P for the micro-strain term, projector on
    Curl P for the dislocation term)``.
    """

    FULL = ("sym", "full")
    DEV_DEV = ("devsym", "dev")
    DEV_SYMCURL = ("devsym", "sym")
    SYM_CURL = ("sym", "sym")
    DEVSYM_CURL = ("sym", "devsym")
    DEV_DEVSYMCURL = ("devsym", "devsym")

    @property
    def strain_channel(self) -> str:
        return self.value[0]

    @property
    def curl_channel(self) -> str:
        return self.value[1]

    @property
    def dynamic(self) -> bool:
        return self in (ModelVariant.FULL, ModelVariant.DEV_DEV)

    @classmethod
    def parse(cls, value) -> "ModelVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown model variant {value!r}") from None


def require_dynamic(variant: ModelVariant) -> ModelVariant:
    variant = ModelVariant.parse(variant)
    if not variant.dynamic:
        raise ValueError(f"variant {variant.name} is only supported for constant studies")
    return variant


# ---------------------------------------------------------------------------
# Isotropic moduli


@dataclass(frozen=True)
class IsotropicModuli:
    mu_e: float = 1.0
    lambda_e: float = 1.0
    mu_c: float = 0.0
    mu_h: float = 1.0
    lambda_h: float = 1.0
    alpha_1: float = 1.0
    alpha_2: float = 1.0
    alpha_3: float = 1.0

    @classmethod
    def from_sequence(cls, values):
        """Build from ``(mu_e, lambda_e, mu_c, mu_h, lambda_h, a1, a2, a3)``."""
        return cls(*map(float, values))

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c.name for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "ok": self.ok,
            "checks": [{"condition": c.name, "passed": c.passed, "value": c.value} for c in self.checks],
        }


def validate_parameters(m: IsotropicModuli) -> ValidationReport:
    """Positive-definiteness conditions for the isotropic moduli.

    The couple-modulus condition ``mu_c >= 0`` is only listed when the
    Eringen-Claus term is switched on (``mu_c != 0``).
    """
    conds = [
        ("mu_e > 0", m.mu_e, m.mu_e > 0),
        ("2 mu_e + 3 lambda_e > 0", 2 * m.mu_e + 3 * m.lambda_e, 2 * m.mu_e + 3 * m.lambda_e > 0),
        ("mu_h > 0", m.mu_h, m.mu_h > 0),
        ("2 mu_h + 3 lambda_h > 0", 2 * m.mu_h + 3 * m.lambda_h, 2 * m.mu_h + 3 * m.lambda_h > 0),
        ("alpha_1 > 0", m.alpha_1, m.alpha_1 > 0),
        ("alpha_2 > 0", m.alpha_2, m.alpha_2 > 0),
        ("alpha_3 > 0", m.alpha_3, m.alpha_3 > 0),
    ]
    if m.mu_c != 0:
        conds.append(("mu_c >= 0", m.mu_c, m.mu_c >= 0))
    return ValidationReport(tuple(Check(n, bool(ok), float(v)) for n, v, ok in conds))


class InvalidMaterial(ValueError):
    pass


# ---------------------------------------------------------------------------
# Pointwise isotropic constitutive laws


def apply_isotropic_sigma(m: IsotropicModuli, E):
    E = np.asarray(E, dtype=float)
    out = 2 * m.mu_e * sym(E) + m.lambda_e * tr(E)[..., None, None] * IDENTITY
    if m.mu_c:
        out = out + 2 * m.mu_c * skew(E)
    return out


def apply_isotropic_m(m: IsotropicModuli, A, variant=ModelVariant.FULL):
    variant = ModelVariant.parse(variant)
    A = np.asarray(A, dtype=float)
    if variant is ModelVariant.DEV_DEV:
        return dev(m.alpha_1 * devsym(A) + m.alpha_2 * skew(A))
    return m.alpha_1 * devsym(A) + m.alpha_2 * skew(A) + m.alpha_3 * tr(A)[..., None, None] * IDENTITY


def apply_isotropic_s(m: IsotropicModuli, P, variant=ModelVariant.FULL):
    variant = ModelVariant.parse(variant)
    P = np.asarray(P, dtype=float)
    if variant is ModelVariant.DEV_DEV:
        return 2 * m.mu_h * devsym(P)
    return 2 * m.mu_h * sym(P) + m.lambda_h * tr(P)[..., None, None] * IDENTITY


# ---------------------------------------------------------------------------
# Fourth-order tensors


class SymmetryClass(enum.Enum):
    SYM_TO_SYM = "sym_to_sym"
    FULL_MAJOR = "full_major"


class AsymmetricTensor(ValueError):
    pass


SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class FourthOrderTensor:
    coefficients: np.ndarray
    symmetry_class: SymmetryClass = SymmetryClass.FULL_MAJOR

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape == (3, 3, 3, 3):
            c = c.reshape(9, 9)
        if c.shape != (9, 9):
            raise ValueError(f"fourth-order tensor must be 9x9 or 3x3x3x3, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        flat = X.reshape(X.shape[:-2] + (9,))
        return (flat @ self.coefficients.T).reshape(X.shape)

    def check_symmetry(self, rtol=SYMMETRY_RTOL):
        """Raise :class:`AsymmetricTensor` if the declared symmetries fail."""
        c = self.coefficients
        scale = max(np.abs(c).max(), np.finfo(float).tiny)
        if np.abs(c - c.T).max() > rtol * scale:
            raise AsymmetricTensor("asymmetric tensor: major symmetry violated")
        if self.symmetry_class is SymmetryClass.SYM_TO_SYM:
            c4 = c.reshape(3, 3, 3, 3)
            if np.abs(c4 - c4.transpose(1, 0, 2, 3)).max() > rtol * scale:
                raise AsymmetricTensor("asymmetric tensor: minor symmetry violated")

    def restricted(self):
        """Matrix of the quadratic form on the declared domain, in an orthonormal basis."""
        if self.symmetry_class is SymmetryClass.SYM_TO_SYM:
            return SYM_BASIS.T @ self.coefficients @ SYM_BASIS
        return self.coefficients

    def __add__(self, other):
        cls = (
            SymmetryClass.SYM_TO_SYM
            if self.symmetry_class is other.symmetry_class is SymmetryClass.SYM_TO_SYM
            else SymmetryClass.FULL_MAJOR
        )
        return FourthOrderTensor(self.coefficients + other.coefficients, cls)


def eigen_bounds(T: FourthOrderTensor):
    """Extreme eigenvalues ``(c_m, c_M)`` of ``T`` on its declared domain."""
    T.check_symmetry()
    R = T.restricted()
    ev = np.linalg.eigvalsh(0.5 * (R + R.T))
    return float(ev[0]), float(ev[-1])


def isotropic_C(mu_e, lambda_e, mu_c=0.0):
    coeffs = 2 * mu_e * P_SYM + lambda_e * ID_OUTER
    if mu_c:
        return FourthOrderTensor(coeffs + 2 * mu_c * P_SKEW, SymmetryClass.FULL_MAJOR)
    return FourthOrderTensor(coeffs, SymmetryClass.SYM_TO_SYM)


def isotropic_H(mu_h, lambda_h):
    return FourthOrderTensor(2 * mu_h * P_SYM + lambda_h * ID_OUTER, SymmetryClass.SYM_TO_SYM)


def isotropic_L(alpha_1, alpha_2, alpha_3):
    return FourthOrderTensor(alpha_1 * P_DEVSYM + alpha_2 * P_SKEW + alpha_3 * ID_OUTER, SymmetryClass.FULL_MAJOR)


# ---------------------------------------------------------------------------
# Material model


@dataclass(frozen=True)
class MaterialModel:
    """Constitutive tensors plus the model variant they are used in.

    ``C`` acts on sym(grad u - P) (plus skew when a couple modulus is set),
    ``H`` on the micro-strain channel and ``L_c`` on the dislocation channel.
    """

    C: FourthOrderTensor
    H: FourthOrderTensor
    L_c: FourthOrderTensor
    variant: ModelVariant = ModelVariant.FULL
    moduli: IsotropicModuli | None = field(default=None, compare=False)

    @classmethod
    def isotropic(cls, moduli: IsotropicModuli | None = None, variant=ModelVariant.FULL, validate=True):
        moduli = moduli or IsotropicModuli()
        if validate:
            report = validate_parameters(moduli)
            if not report.ok:
                raise InvalidMaterial("condpara: " + "; ".join(report.failures))
        return cls(
            C=isotropic_C(moduli.mu_e, moduli.lambda_e, moduli.mu_c),
            H=isotropic_H(moduli.mu_h, moduli.lambda_h),
            L_c=isotropic_L(moduli.alpha_1, moduli.alpha_2, moduli.alpha_3),
            variant=ModelVariant.parse(variant),
            moduli=moduli,
        )

    def with_variant(self, variant):
        return MaterialModel(self.C, self.H, self.L_c, ModelVariant.parse(variant), self.moduli)

    def validate(self):
        """Check symmetries and positive definiteness; raise on failure."""
        for name, T in (("C", self.C), ("H", self.H), ("L_c", self.L_c)):
            lo, _ = eigen_bounds(T)
            if lo <= 0:
                raise InvalidMaterial(f"{name} is not positive definite (min eigenvalue {lo:.3g})")

    @property
    def C_eff(self):
        return self.C.coefficients

    @property
    def H_eff(self):
        p = PROJECTORS[self.variant.strain_channel]
        return p.T @ self.H.coefficients @ p

    @property
    def L_eff(self):
        p = PROJECTORS[self.variant.curl_channel]
        return p.T @ self.L_c.coefficients @ p

    def bounds(self):
        """``{"c": (c_m, c_M), "h": ..., "l": ...}`` eigenvalue bounds."""
        return {"c": eigen_bounds(self.C), "h": eigen_bounds(self.H), "l": eigen_bounds(self.L_c)}
