import math

import numpy as np
import pytest

from noneq_atomdyn.constants import C_LIGHT, EPS_0, HBAR, K_B
from noneq_atomdyn.errors import BothAlphasZero, InvalidInput
from noneq_atomdyn.matprops import (
    GAAS,
    GOLD,
    GOLD_OMEGA_R,
    PerfectMirror,
    Vacuum,
    surface_resonance,
)
from noneq_atomdyn.quadrature import EnvBodyFactors, compute_factors
from noneq_atomdyn.rates import (
    DipoleSpec,
    RateSet,
    ThermalEnv,
    alphas,
    crossover_distance,
    effective_temperature,
    equilibrium_rates,
    gamma0,
    mean_photon_n,
    transition_rates,
)
from noneq_atomdyn.slab_optics import Geometry

W = 1.2 * GAAS.omega_r
ISO = DipoleSpec.isotropic()


def test_gamma0_formula():
    w, d = 2e14, 3e-29
    ref = w**3 * d**2 / (3 * math.pi * EPS_0 * HBAR * C_LIGHT**3)
    np.testing.assert_allclose(gamma0(w, d), ref, rtol=1e-15)


def test_mean_photon_n():
    w = 1e14
    assert mean_photon_n(w, 0.0) == 0.0
    np.testing.assert_allclose(mean_photon_n(w, 300.0), 1 / math.expm1(HBAR * w / (K_B * 300.0)), rtol=1e-14)
    # classical limit n -> k T / (hbar w)
    np.testing.assert_allclose(mean_photon_n(w, 1e7), K_B * 1e7 / (HBAR * w), rtol=1e-4)
    with pytest.raises(InvalidInput):
        mean_photon_n(w, -1.0)
    with pytest.raises(InvalidInput):
        mean_photon_n(0.0, 300.0)


@pytest.mark.parametrize("T", [5.0, 50.0, 300.0, 1e4])
def test_effective_temperature_inverts_bose(T):
    np.testing.assert_allclose(effective_temperature(W, mean_photon_n(W, T)), T, rtol=1e-12)
    assert effective_temperature(W, 0.0) == 0.0


def test_dipole_spec():
    with pytest.raises(InvalidInput):
        DipoleSpec(dtilde=(0.5, 0.5, 0.5))
    with pytest.raises(InvalidInput):
        DipoleSpec(dtilde=(1.0, 0.0))
    with pytest.raises(InvalidInput):
        DipoleSpec(magnitude=-1.0)
    with pytest.raises(InvalidInput):
        DipoleSpec.preset("diagonal")
    assert DipoleSpec.preset("perpendicular").dtilde == (0.0, 0.0, 1.0)


def test_thermal_env_validation():
    with pytest.raises(InvalidInput):
        ThermalEnv(T_M=-1.0, T_W=300.0)
    with pytest.raises(InvalidInput):
        ThermalEnv(T_M=float("nan"), T_W=300.0)
    env = ThermalEnv(T_M=50.0, T_W=600.0)
    assert (env.T_min, env.T_max) == (50.0, 600.0)


def test_rateset_from_n_eff():
    r = RateSet.from_n_eff(W, 0.25, gamma0=2.0)
    assert (r.gamma_down, r.gamma_up) == (2.5, 0.5)
    with pytest.raises(InvalidInput):
        RateSet.from_n_eff(W, -0.1)


def test_vacuum_rates():
    env = ThermalEnv(T_M=100.0, T_W=400.0)
    r = transition_rates(W, ISO, Geometry(1e-6, 1e-6), Vacuum(), env)
    assert (r.alpha_W, r.alpha_M) == (1.0, 0.0)
    np.testing.assert_allclose(r.n_eff, mean_photon_n(W, 400.0), rtol=1e-15)
    np.testing.assert_allclose(r.gamma_down - r.gamma_up, gamma0(W, ISO.magnitude), rtol=1e-14)


def test_alpha_sum_equals_equilibrium_enhancement():
    geom = Geometry(0.3e-6, 2e-6)
    f = compute_factors(W, geom, GAAS)
    a_w, a_m = alphas(W, geom, GAAS, ISO.dtilde)
    np.testing.assert_allclose(a_w + a_m, 1 + np.dot(f.C + f.D, ISO.dtilde), rtol=1e-12)


def test_equilibrium_matches_ote_at_equal_temperatures():
    geom = Geometry(0.3e-6, 2e-6)
    eq = equilibrium_rates(W, ISO, geom, GAAS, 300.0)
    ote = transition_rates(W, ISO, geom, GAAS, ThermalEnv(300.0, 300.0))
    np.testing.assert_allclose([eq.gamma_down, eq.gamma_up], [ote.gamma_down, ote.gamma_up], rtol=1e-12)
    np.testing.assert_allclose(ote.T_eff, 300.0, rtol=1e-10)


def test_equilibrium_ratio_is_body_independent():
    w = surface_resonance(GAAS)
    ratios = [equilibrium_rates(w, ISO, Geometry(z, 1e-2), GAAS, 300.0) for z in np.geomspace(1e-8, 1e-5, 4)]
    ratios = [r.gamma_up / r.gamma_down for r in ratios]
    np.testing.assert_allclose(ratios, math.exp(-HBAR * w / (K_B * 300.0)), rtol=1e-12)


@pytest.mark.parametrize("z,TM,TW", [(1e-8, 600.0, 50.0), (1e-6, 50.0, 600.0), (1e-4, 0.0, 300.0)])
def test_n_eff_between_bath_occupations(z, TM, TW):
    env = ThermalEnv(T_M=TM, T_W=TW)
    r = transition_rates(W, ISO, Geometry(z, 1e-6), GAAS, env)
    assert mean_photon_n(W, env.T_min) - 1e-12 <= r.n_eff <= mean_photon_n(W, env.T_max) + 1e-12
    assert env.T_min - 1e-9 <= r.T_eff <= env.T_max + 1e-9


def test_near_field_follows_body_temperature():
    env = ThermalEnv(T_M=600.0, T_W=50.0)
    r = transition_rates(surface_resonance(GAAS), ISO, Geometry.half_space(1e-8), GAAS, env)
    assert r.alpha_M > 100 * r.alpha_W
    np.testing.assert_allclose(r.T_eff, 600.0, rtol=0.02)


def test_both_alphas_zero():
    f = EnvBodyFactors(W, Geometry.half_space(1e-6), GAAS, np.zeros(3), np.full(3, -1.0), np.zeros(3))
    with pytest.raises(BothAlphasZero):
        transition_rates(W, ISO, f.geom, GAAS, ThermalEnv(300.0, 300.0), factors=f)


def test_mirror_perpendicular_contact_doubles_rate():
    env = ThermalEnv(T_M=0.0, T_W=0.0)
    r = transition_rates(W, DipoleSpec.perpendicular(), Geometry.half_space(1e-3 * C_LIGHT / W), PerfectMirror(), env)
    np.testing.assert_allclose(r.gamma_down / r.gamma0, 2.0, rtol=1e-2)


def test_crossover_distance():
    w = surface_resonance(GAAS)
    z = crossover_distance(w, GAAS, ISO.dtilde)
    a_w, a_m = alphas(w, Geometry.half_space(z), GAAS, ISO.dtilde)
    np.testing.assert_allclose(a_w, a_m, rtol=1e-8)
    with pytest.raises(InvalidInput):
        crossover_distance(w, GAAS, ISO.dtilde, z_bounds=(1e-4, 1e-3))


def test_gold_far_field_recovers_wall_temperature():
    env = ThermalEnv(T_M=500.0, T_W=200.0)
    r = transition_rates(GOLD_OMEGA_R, ISO, Geometry(1e-3, 1e-2), GOLD, env)
    n_w = mean_photon_n(GOLD_OMEGA_R, 200.0)
    assert abs(r.n_eff - n_w) / n_w < 0.05
