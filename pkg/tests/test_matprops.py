import numpy as np
import pytest

from noneq_atomdyn.errors import (
    InvalidInput,
    MirrorHasNoFinitePermittivity,
    NoSurfaceResonance,
    TabulatedOutOfRange,
    TabulatedParseError,
)
from noneq_atomdyn.matprops import (
    GAAS,
    GOLD,
    Drude,
    DrudeLorentz,
    PerfectMirror,
    Tabulated,
    Vacuum,
    permittivity,
    surface_resonance,
)


def test_drude_lorentz_formula():
    w = 0.9 * GAAS.omega_r
    g = GAAS.gamma
    expected = 11.0 * (w**2 - 0.55e14**2 + 1j * g * w) / (w**2 - 0.506e14**2 + 1j * g * w)
    np.testing.assert_allclose(permittivity(GAAS, w), expected, rtol=1e-15)


def test_drude_formula_and_vectorised():
    w = np.array([1e13, 5e13, 1e14])
    expected = 1.0 - GOLD.omega_pl**2 / (w**2 + 1j * w * GOLD.gamma)
    np.testing.assert_allclose(permittivity(GOLD, w), expected, rtol=1e-15)


def test_lossy_models_have_positive_imaginary_part():
    w = np.geomspace(1e12, 1e16, 200)
    assert np.all(permittivity(GAAS, w).imag > 0)
    assert np.all(permittivity(GOLD, w).imag > 0)


def test_gaas_surface_resonance_matches_quoted_value():
    wp = surface_resonance(GAAS)
    np.testing.assert_allclose(wp, 0.547e14, rtol=5e-3)
    np.testing.assert_allclose(permittivity(GAAS, wp).real, -1.0, atol=1e-9)


def test_gold_surface_resonance_matches_quoted_value():
    np.testing.assert_allclose(surface_resonance(GOLD), 96.987e14, rtol=5e-3)


def test_surface_resonance_needs_negative_real_part():
    # heavily damped oscillator: Re eps stays above +1
    glass = DrudeLorentz(eps_inf=2.0, omega_l=1.0e14, omega_r=0.9e14, gamma=3e13)
    with pytest.raises(NoSurfaceResonance):
        surface_resonance(glass)


def test_vacuum_and_mirror():
    assert permittivity(Vacuum(), 1e14) == 1.0
    with pytest.raises(MirrorHasNoFinitePermittivity):
        permittivity(PerfectMirror(), 1e14)


def test_invalid_frequency():
    with pytest.raises(InvalidInput):
        permittivity(GAAS, 0.0)
    with pytest.raises(InvalidInput):
        permittivity(Drude(1e15, 1e13), -1.0)


def test_tabulated_interpolation_and_range():
    tab = Tabulated((1e13, 2e13, 4e13), (2 + 1j, 4 + 3j, 8 + 1j))
    np.testing.assert_allclose(permittivity(tab, 1.5e13), 3 + 2j)
    np.testing.assert_allclose(permittivity(tab, 3e13), 6 + 2j)
    with pytest.raises(TabulatedOutOfRange):
        permittivity(tab, 5e13)


def test_tabulated_file_roundtrip(tmp_path):
    path = tmp_path / "eps.txt"
    path.write_text("# omega re im\n1e13, 2.0, 0.5\n2e13 3.0 0.25\n\n3e13 4.0  # real only\n")
    tab = Tabulated.from_file(path)
    np.testing.assert_allclose(tab.eps, [2 + 0.5j, 3 + 0.25j, 4 + 0j])


@pytest.mark.parametrize("text", ["1e13 2.0 0.1 7\n", "1e13 abc\n", "2e13 1\n1e13 1\n", "1e13 nan\n2e13 1\n"])
def test_tabulated_parse_errors(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(TabulatedParseError):
        Tabulated.from_file(path)
