import numpy as np
import pytest
import scipy.linalg

from micromorphx.grid import build_grid
from micromorphx.inequalities import (
    Classification,
    InequalitySpec,
    classify,
    estimate_constant,
    split_a1,
    random_admissible,
    refinement_study,
    spec_grams,
)
from micromorphx.linalg import inverse_iteration, smallest_generalized


def dense_constant(spec, grid):
    Gn, Gd, _ = spec_grams(InequalitySpec.named(spec), grid)
    lam = scipy.linalg.eigh(Gd.toarray(), Gn.toarray(), eigvals_only=True)[0]
    return 1 / np.sqrt(lam)


@pytest.mark.parametrize("spec", ["poincare", "korn", "maxwell", "sym_curl", "devsym_devcurl", "devsym_grad"])
def test_estimate_matches_dense(spec):
    g = build_grid(3)
    est = estimate_constant(spec, g)
    assert np.isclose(est.constant, dense_constant(spec, g), rtol=1e-6)
    assert est.constant > 0 and np.isfinite(est.constant)


def test_inverse_iteration_matches_lobpcg():
    g = build_grid(4)
    a = estimate_constant("poincare", g)
    b = estimate_constant("poincare", g, method="inverse")
    assert np.isclose(a.constant, b.constant, rtol=1e-8)


def test_poincare_1d_closed_form_on_coarse_grid():
    # Q1 Dirichlet Laplacian on a 2^3 grid: one interior node, exact Rayleigh quotient
    g = build_grid(2)
    Gn, Gd, _ = spec_grams(InequalitySpec.named("poincare"), g)
    assert Gn.shape == (1, 1)
    assert np.isclose(estimate_constant("poincare", g).constant, np.sqrt(Gn[0, 0] / Gd[0, 0]))


def test_constant_bounds_random_fields():
    g = build_grid(4)
    rng = np.random.default_rng(0)
    est = estimate_constant("korn", g)
    Gn, Gd, _ = spec_grams(InequalitySpec.named("korn"), g)
    for _ in range(50):
        x = random_admissible("korn", g, rng)
        assert est.holds(x @ Gn @ x, x @ Gd @ x, atol=1e-8)


def test_degenerate_variant_reported_infinite():
    est = estimate_constant("variant:DEV_SYMCURL", build_grid(4))
    assert est.degenerate and est.constant == np.inf


def test_named_and_variants():
    assert InequalitySpec.named("KORN").name == "korn"
    assert InequalitySpec.named("variant:sym_curl").name == "variant:SYM_CURL"
    with pytest.raises(ValueError):
        InequalitySpec.named("bogus")
    full = InequalitySpec.for_variant("FULL")
    assert full.components == 9


def test_classify_rules():
    assert classify([1.0, 1.3, 1.4]) is Classification.WELL_POSED_EVIDENCE
    assert classify([1.0, 2.0, 4.1]) is Classification.DEGENERATE_EVIDENCE
    assert classify([1.0, np.inf]) is Classification.DEGENERATE_EVIDENCE
    assert classify([1.0, 1.5, 2.0]) is Classification.INCONCLUSIVE
    assert classify([1.0]) is Classification.INCONCLUSIVE


def test_refinement_study_csv_and_nesting():
    study = refinement_study("poincare", [2, 4])
    text = study.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "spec,grid,constant,lambda_min,iterations,classification"
    assert lines[1].startswith("poincare,2x2x2,")
    # the discrete constants increase toward the continuum value under nested refinement
    assert study.constants[0] <= study.constants[1] <= 1 / np.sqrt(3 * np.pi**2)
    with pytest.raises(ValueError, match="nested"):
        refinement_study("poincare", [4, 6])


def test_split_a1_optimal():
    c_m, h_m = 2.0, 0.5
    a1, d = split_a1(c_m, h_m)
    assert c_m / (c_m + h_m) < d < 1
    assert np.isclose(a1, c_m + h_m - c_m / d)
    grid = np.linspace(c_m / (c_m + h_m) + 1e-9, 1 - 1e-9, 10001)
    assert a1 >= np.max(np.minimum(c_m * (1 - grid), c_m + h_m - c_m / grid)) - 1e-9


def test_eigensolvers_on_diagonal_pencil():
    import scipy.sparse as sp

    A = sp.diags(np.arange(1.0, 101.0)).tocsr()
    B = sp.identity(100, format="csr")
    assert np.isclose(smallest_generalized(A, B, precond="jacobi").value, 1.0, rtol=1e-10)
    assert np.isclose(inverse_iteration(A, B).value, 1.0, rtol=1e-8)
