"""Transition rates, effective photon numbers and Markov-validity diagnostics.

For a transition of frequency ``omega`` and dipole orientation ``d~`` the
rates out of thermal equilibrium are::

    Gamma(+omega) = Gamma0 (alpha_W + alpha_M) (1 + n_eff)
    Gamma(-omega) = Gamma0 (alpha_W + alpha_M) n_eff
    n_eff = (n(T_W) alpha_W + n(T_M) alpha_M) / (alpha_W + alpha_M)

with ``alpha_W = (1 + B + 2C) . d~ / 2`` and ``alpha_M = (1 - B + 2D) . d~ / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .constants import C_LIGHT, EPS_0, HBAR, K_B
from .errors import BothAlphasZero, InvalidInput, QuadratureNoConvergence
from .quadrature import (
    EnvBodyFactors,
    Tolerances,
    compute_B,
    compute_C,
    compute_D,
    compute_factors,
)
from .slab_optics import Geometry

DEFAULT_DIPOLE = 1e-29  # C m


@dataclass(frozen=True)
class DipoleSpec:
    """Dipole magnitude |d| (C m) and orientation weights d~_i = |d_i|^2 / |d|^2."""

    magnitude: float = DEFAULT_DIPOLE
    dtilde: tuple = (1 / 3, 1 / 3, 1 / 3)

    def __post_init__(self):
        d = np.asarray(self.dtilde, dtype=float)
        if d.shape != (3,):
            raise InvalidInput("dtilde must have three components")
        if np.any(d < 0) or abs(d.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"dtilde must be non-negative and sum to 1, got {self.dtilde}")
        if not (np.isfinite(self.magnitude) and self.magnitude >= 0):
            raise InvalidInput("dipole magnitude must be finite and >= 0")
        object.__setattr__(self, "dtilde", tuple(float(x) for x in d))

    @classmethod
    def parallel(cls, magnitude=DEFAULT_DIPOLE):
        return cls(magnitude, (0.5, 0.5, 0.0))

    @classmethod
    def perpendicular(cls, magnitude=DEFAULT_DIPOLE):
        return cls(magnitude, (0.0, 0.0, 1.0))

    @classmethod
    def isotropic(cls, magnitude=DEFAULT_DIPOLE):
        return cls(magnitude, (1 / 3, 1 / 3, 1 / 3))

    @classmethod
    def preset(cls, name, magnitude=DEFAULT_DIPOLE):
        try:
            return {"parallel": cls.parallel, "perpendicular": cls.perpendicular,
                    "isotropic": cls.isotropic}[name](magnitude)
        except KeyError:
            raise InvalidInput(f"unknown dipole preset {name!r}") from None

    @property
    def vector(self):
        return np.asarray(self.dtilde)


@dataclass(frozen=True)
class ThermalEnv:
    """Body temperature T_M and wall (environment) temperature T_W in kelvin."""

    T_M: float
    T_W: float

    def __post_init__(self):
        for name in ("T_M", "T_W"):
            t = getattr(self, name)
            if not (np.isfinite(t) and t >= 0):
                raise InvalidInput(f"{name} must be finite and >= 0, got {t}")

    @property
    def T_min(self):
        return min(self.T_M, self.T_W)

    @property
    def T_max(self):
        return max(self.T_M, self.T_W)


@dataclass(frozen=True)
class RateSet:
    omega: float
    gamma0: float
    alpha_W: float
    alpha_M: float
    n_eff: float
    T_eff: float
    gamma_down: float
    gamma_up: float
    quad_error: float = field(default=0.0, compare=False)

    @property
    def gamma_total(self):
        return self.gamma_down + self.gamma_up

    @classmethod
    def from_n_eff(cls, omega, n_eff, gamma0=1.0, alpha_sum=1.0):
        """Rates fixed by an effective photon number alone (no body model)."""
        if not n_eff >= 0:
            raise InvalidInput("n_eff must be >= 0")
        g = gamma0 * alpha_sum
        return cls(omega, gamma0, alpha_sum, 0.0, float(n_eff), effective_temperature(omega, n_eff),
                   g * (1.0 + n_eff), g * n_eff)


@dataclass(frozen=True)
class MarkovDiagnostics:
    tau_R: float
    tau_A: float
    tau_B: float
    born_markov_ok: bool
    rwa_ok: bool
    grid: dict = field(default_factory=dict, compare=False)


def gamma0(omega, magnitude):
    """Vacuum spontaneous-emission rate w^3 |d|^2 / (3 pi eps0 hbar c^3)."""
    return omega**3 * magnitude**2 / (3.0 * math.pi * EPS_0 * HBAR * C_LIGHT**3)


def mean_photon_n(omega, T):
    """Bose occupation 1 / (exp(hbar w / k_B T) - 1); T = 0 gives exactly 0."""
    w = np.asarray(omega, dtype=float)
    t = np.asarray(T, dtype=float)
    if np.any(~(w > 0)):
        raise InvalidInput("omega must be > 0")
    if np.any(~(t >= 0)):
        raise InvalidInput("T must be >= 0")
    with np.errstate(divide="ignore", over="ignore"):
        x = HBAR * w / (K_B * t)
        n = np.where(t > 0, 1.0 / np.expm1(x), 0.0)
    return float(n) if n.ndim == 0 else n


def effective_temperature(omega, n_eff):
    """Temperature whose Bose occupation at omega equals n_eff (0 K for n_eff = 0)."""
    if n_eff <= 0:
        return 0.0
    return HBAR * omega / (K_B * math.log1p(1.0 / n_eff))


def alphas_from_factors(factors, dtilde):
    d = np.asarray(dtilde, dtype=float)
    a_w = 0.5 * float(np.dot(1.0 + factors.B + 2.0 * factors.C, d))
    a_m = 0.5 * float(np.dot(1.0 - factors.B + 2.0 * factors.D, d))
    return a_w, a_m


def alphas(omega, geom, model, dtilde, tol=None):
    """(alpha_W, alpha_M) for a dipole with orientation weights ``dtilde``."""
    return alphas_from_factors(compute_factors(omega, geom, model, tol), dtilde)


def _rates(omega, dipole, factors, env):
    a_w, a_m = alphas_from_factors(factors, dipole.dtilde)
    total = a_w + a_m
    if total == 0.0:
        raise BothAlphasZero("alpha_W + alpha_M = 0: the transition is decoupled")
    n_w = mean_photon_n(omega, env.T_W)
    n_m = mean_photon_n(omega, env.T_M)
    n_eff = (n_w * a_w + n_m * a_m) / total
    g0 = gamma0(omega, dipole.magnitude)
    g = g0 * total
    return RateSet(
        omega=omega,
        gamma0=g0,
        alpha_W=a_w,
        alpha_M=a_m,
        n_eff=n_eff,
        T_eff=effective_temperature(omega, n_eff),
        gamma_down=g * (1.0 + n_eff),
        gamma_up=g * n_eff,
        quad_error=factors.max_error,
    )


def transition_rates(omega, dipole, geom, model, env, factors=None, tol=None):
    """Out-of-equilibrium rates for one transition.

    ``factors`` may carry precomputed :class:`EnvBodyFactors` for the same
    (omega, geom, model) to avoid repeating the quadratures.
    """
    if not omega > 0:
        raise InvalidInput("omega must be > 0")
    if factors is None:
        factors = compute_factors(omega, geom, model, tol)
    return _rates(omega, dipole, factors, env)


def equilibrium_rates(omega, dipole, geom, model, T, factors=None, tol=None):
    """Rates at T_M = T_W = T: Gamma0 (1 + (C + D) . d~) times (1 + n, n)."""
    if not omega > 0:
        raise InvalidInput("omega must be > 0")
    if factors is None:
        factors = compute_factors(omega, geom, model, tol)
    d = np.asarray(dipole.dtilde)
    a_w, a_m = alphas_from_factors(factors, d)
    total = 1.0 + float(np.dot(factors.C + factors.D, d))
    if total == 0.0:
        raise BothAlphasZero("1 + (C + D) . d~ = 0: the transition is decoupled")
    n = mean_photon_n(omega, T)
    g0 = gamma0(omega, dipole.magnitude)
    return RateSet(
        omega=omega,
        gamma0=g0,
        alpha_W=a_w,
        alpha_M=a_m,
        n_eff=n,
        T_eff=float(T) if n > 0 else 0.0,
        gamma_down=g0 * total * (1.0 + n),
        gamma_up=g0 * total * n,
        quad_error=factors.max_error,
    )


# --------------------------------------------------------------------------
# Markov diagnostics

TAU_B_GRID = {"lo": 1e-3, "hi": 20.0, "n_alpha": 160, "n_fft": 2**14}
# order-of-magnitude diagnostic: looser quadrature, early give-up on hard points
TAU_B_TOL = Tolerances(b_rtol=1e-7, c_rtol=1e-7, c_atol=1e-10, d_rtol=1e-7, d_atol=1e-12,
                       max_panels=5_000)


def _phase_averaged_factors(omega, geom, model):
    """B, C of the slab with D of the half-space.

    A thick, nearly lossless slab turns the evanescent integrand into a dense
    comb of guided-mode peaks; averaging over the round-trip phase
    exp(2 i k_zm delta) gives exactly the half-space coefficient.
    """
    B = compute_B(omega, geom, model, TAU_B_TOL)
    C = compute_C(omega, geom, model, TAU_B_TOL)
    D = compute_D(omega, Geometry.half_space(geom.z), model, TAU_B_TOL)
    return EnvBodyFactors(omega, geom, model, B, C, D)


def _tau_b(dipole, geom, model, env, grid=TAU_B_GRID):
    """1/e decay time of the envelope of the projected field correlation.

    The spectral density is the thermal (absorption) part
    gamma(w) = Gamma0(w) (alpha_W + alpha_M) n_eff(w); the temperature-free
    vacuum part grows as w^3 and only adds a cutoff-dependent spike at s = 0.
    The density is sampled on a log grid, interpolated onto a uniform grid and
    transformed as a one-sided (analytic) signal, so |C(s)| is the envelope
    rather than the carrier oscillation at the dominant frequency.

    Returns ``(tau_B, skipped)`` where ``skipped`` counts grid frequencies
    whose full quadrature did not converge; those use the phase-averaged D
    (or interpolation if even that fails).
    """
    t_max = env.T_max
    if t_max <= 0:
        return math.inf, 0
    scale = K_B * t_max / HBAR
    w_log = np.geomspace(grid["lo"] * scale, grid["hi"] * scale, grid["n_alpha"])
    spec = np.full_like(w_log, np.nan)
    skipped = 0
    for i, w in enumerate(w_log):
        try:
            spec[i] = transition_rates(w, dipole, geom, model, env, tol=TAU_B_TOL).gamma_up
        except QuadratureNoConvergence:
            skipped += 1
            try:
                f = _phase_averaged_factors(w, geom, model)
            except QuadratureNoConvergence:
                continue
            spec[i] = transition_rates(w, dipole, geom, model, env, factors=f).gamma_up
    ok = np.isfinite(spec)
    if not ok.any():
        return math.inf, skipped
    logs = np.log(np.maximum(spec[ok], 1e-300))
    n = grid["n_fft"]
    w_max = grid["hi"] * scale
    w_lin = np.linspace(0.0, w_max, n // 2 + 1)
    dense = np.zeros(n)
    inside = w_lin >= w_log[0]
    dense[: n // 2 + 1][inside] = np.exp(np.interp(np.log(w_lin[inside]), np.log(w_log[ok]), logs))
    # below the grid floor gamma_up vanishes like w^2
    dense[: n // 2 + 1][~inside] = spec[ok][0] * (w_lin[~inside] / w_log[ok][0]) ** 2
    corr = np.abs(np.fft.ifft(dense))[: n // 2]
    dw = w_max / (n // 2)
    ds = 2.0 * math.pi / (n * dw)
    level = corr[0] / math.e
    below = np.nonzero(corr < level)[0]
    if below.size == 0:
        return math.inf, skipped
    k = below[0]
    f0, f1 = corr[k - 1], corr[k]
    return (k - 1 + (f0 - level) / (f0 - f1)) * ds, skipped


def markov_diagnostics(omega, dipole, geom, model, env):
    """tau_R, tau_A, tau_B and the Born-Markov / rotating-wave verdicts."""
    r = transition_rates(omega, dipole, geom, model, env)
    tau_r = 1.0 / r.gamma_total
    tau_a = 1.0 / (2.0 * omega)
    tau_b, skipped = _tau_b(dipole, geom, model, env)
    scale = K_B * env.T_max / HBAR
    grid = dict(TAU_B_GRID, w_lo=TAU_B_GRID["lo"] * scale, w_hi=TAU_B_GRID["hi"] * scale,
                unconverged=skipped)
    return MarkovDiagnostics(
        tau_R=tau_r,
        tau_A=tau_a,
        tau_B=tau_b,
        born_markov_ok=bool(tau_b < tau_r / 10.0),
        rwa_ok=bool(tau_a < tau_r / 10.0),
        grid=grid,
    )


def crossover_distance(omega, model, dtilde, delta=0.0, semi_infinite=True, z_bounds=(1e-10, 1e-2)):
    """Distance z where alpha_W = alpha_M, so that n_eff = (n(T_W) + n(T_M)) / 2.

    Searches ``z_bounds`` (metres) on a log grid for a sign change of
    alpha_W - alpha_M and refines it with Brent's method. Raises
    :class:`InvalidInput` if no crossing lies inside the bounds.
    """

    def geom(z):
        return Geometry.half_space(z) if semi_infinite else Geometry(z, delta)

    def g(logz):
        a_w, a_m = alphas(omega, geom(math.exp(logz)), model, dtilde)
        return a_w - a_m

    lz = np.linspace(math.log(z_bounds[0]), math.log(z_bounds[1]), 41)
    vals = [g(x) for x in lz]
    for i in range(len(lz) - 1):
        if vals[i] == 0:
            return math.exp(lz[i])
        if vals[i] * vals[i + 1] < 0:
            return math.exp(brentq(g, lz[i], lz[i + 1], xtol=1e-12))
    raise InvalidInput("alpha_W - alpha_M does not change sign inside z_bounds")
