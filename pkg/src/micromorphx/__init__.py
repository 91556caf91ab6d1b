"""Finite-element toolkit for the relaxed linear micromorphic continuum.

Fields are a displacement ``u`` and a non-symmetric micro-distortion ``P``,
discretized with trilinear elements on a box. The package assembles the
energy operators, integrates the dynamics with an exact energy ledger,
estimates the constants of the coercive inequalities behind well-posedness,
and computes plane-wave dispersion branches.
"""
__version__ = "0.1.0"

from .assembly import SystemMatrices, assemble_resolvent, assemble_stiffness, generator_apply
from .dispersion import cutoff_frequencies, dispersion_curves, symbol_matrix, wave_path
from .dynamics import (
    EnergyLedger,
    LoadTerm,
    RunConfig,
    SampledLoads,
    SeparableLoads,
    State,
    TimeProfile,
    ZeroLoads,
    continuous_dependence_check,
    dependence_constant,
    energy,
    power,
    reference_exponential,
    run,
    step_leapfrog,
    step_midpoint,
    supply_dependence_check,
)
from .grid import DofMap, Grid, build_grid
from .inequalities import Classification, InequalitySpec, estimate_constant, refinement_study
from .statics import check_dissipativity, coercivity_lower_bound, inner_product_X, solve_resolvent
from .tensor_core import IsotropicModuli, MaterialModel, ModelVariant, validate_parameters

__all__ = [
    "Classification", "DofMap", "EnergyLedger", "Grid", "InequalitySpec", "IsotropicModuli", "LoadTerm",
    "MaterialModel", "ModelVariant", "RunConfig", "SampledLoads", "SeparableLoads", "State", "SystemMatrices",
    "TimeProfile", "ZeroLoads", "assemble_resolvent", "assemble_stiffness", "build_grid", "check_dissipativity",
    "coercivity_lower_bound", "continuous_dependence_check", "cutoff_frequencies", "dependence_constant",
    "dispersion_curves", "energy", "estimate_constant", "generator_apply", "inner_product_X", "power",
    "reference_exponential", "refinement_study", "run", "solve_resolvent", "step_leapfrog", "step_midpoint",
    "supply_dependence_check", "symbol_matrix", "validate_parameters", "wave_path",
]
