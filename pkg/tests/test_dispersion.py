import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from micromorphx.dispersion import (
    SymbolNotPSD,
    cutoff_frequencies,
    dispersion_curves,
    min_symbol_eigenvalue,
    symbol_matrix,
    wave_path,
)
from micromorphx.tensor_core import InvalidMaterial, IsotropicModuli, MaterialModel

vec3 = st.tuples(*(st.floats(-5, 5, allow_nan=False),) * 3).map(np.array)


def test_k0_spectrum_closed_form():
    m = IsotropicModuli(1.3, 0.7, 0.0, 0.9, 0.4, 1.0, 1.0, 1.0)
    lam = np.sort(np.linalg.eigvalsh(symbol_matrix(np.zeros(3), m)))
    expected = np.sort(
        [0.0] * 6 + [2 * (m.mu_e + m.mu_h)] * 5 + [(2 * m.mu_e + 3 * m.lambda_e) + (2 * m.mu_h + 3 * m.lambda_h)]
    )
    assert np.allclose(lam, expected, atol=1e-12)


def test_k0_decouples_u():
    M = symbol_matrix(np.zeros(3))
    assert np.all(M[:3] == 0) and np.all(M[:, :3] == 0)


@given(vec3)
@settings(max_examples=30)
def test_hermitian_and_psd(k):
    M = symbol_matrix(k)
    assert np.linalg.norm(M - M.conj().T) <= 1e-13 * max(np.linalg.norm(M), 1.0)
    assert np.linalg.eigvalsh(M)[0] >= -1e-10


@given(vec3)
@settings(max_examples=30)
def test_symbol_quadratic_in_k(k):
    m0, m1, m2 = (symbol_matrix(a * k) for a in (0.0, 1.0, -1.0))
    lin = 0.5 * (m1 - m2)
    quad = 0.5 * (m1 + m2) - m0
    assert np.allclose(symbol_matrix(2 * k), m0 + 2 * lin + 4 * quad, atol=1e-10)


def test_cosserat_lifts_skew_zeros():
    lam0 = np.linalg.eigvalsh(symbol_matrix(np.zeros(3), IsotropicModuli(mu_c=0.3)))
    assert np.sum(np.abs(lam0) < 1e-12) == 3
    assert np.allclose(np.sort(lam0)[3:6], 0.6)


def test_dev_dev_spherical_channel():
    mat = MaterialModel.isotropic(IsotropicModuli(), "DEV_DEV")
    lam = np.linalg.eigvalsh(symbol_matrix(np.zeros(3), mat))
    # only the elastic spherical stiffness 2 mu_e + 3 lambda_e remains on the trace
    assert np.isclose(lam.max(), 5.0)


def test_negative_micro_modulus_breaks_psd():
    bad = IsotropicModuli(mu_h=-0.5)
    with pytest.raises(InvalidMaterial):
        symbol_matrix(np.zeros(3), bad)
    path = wave_path([(0, 0, 0), (5, 0, 0)], 50)
    assert min_symbol_eigenvalue(path, bad) < -1e-10
    with pytest.raises(SymbolNotPSD, match="symbol not PSD"):
        dispersion_curves(path, bad, validate=False)


def test_dispersion_path_and_csv(tmp_path):
    path = wave_path([(0, 0, 0), (3, 0, 0), (3, 3, 0)], 100)
    assert path.shape == (100, 3)
    # arc length along the two legs is path[:, 0] + path[:, 1]
    assert np.allclose(path[:, 0] + path[:, 1], np.linspace(0, 6, 100))
    res = dispersion_curves(path)
    assert res.min_eigenvalue >= -1e-10
    assert np.all(np.diff(res.omega, axis=1) >= 0)
    assert np.allclose(res.omega[0], cutoff_frequencies(), atol=1e-7)
    out = tmp_path / "d.csv"
    res.to_csv(str(out))
    lines = out.read_text().strip().split("\n")
    assert lines[0].split(",")[:5] == ["k_index", "|k|", "kx", "ky", "kz"]
    assert len(lines[0].split(",")) == 17 and len(lines) == 101
