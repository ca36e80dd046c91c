"""Mode kinematics and reflection/transmission of a planar slab.

The slab occupies ``-delta < z < 0``; the emitter sits at ``z > 0`` in vacuum.
Public functions take SI quantities. The vectorised kernels prefixed with
``reduced_`` work in units of w/c (``kz = c k_z / w`` etc.) and are what the
quadrature engine calls.

Cancellation-free forms are used throughout: ``k_z - k_zm`` is computed as
``(k_z^2 - k_zm^2) / (k_z + k_zm)`` with ``k_z^2 - k_zm^2 = 1 - eps`` exactly,
and ``1 - r^2 e^{2 i k_zm delta}`` as ``(1 - e) + e (1 - r^2)`` with
``1 - r^2 = t tbar``. Both matter for thin slabs and deep evanescent waves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT
from .errors import DegenerateDenominator, InvalidInput, ResonantDenominator
from .matprops import PerfectMirror, Vacuum, permittivity

PROPAGATIVE = "propagative"
EVANESCENT = "evanescent"

# exponent real parts below this give exactly zero
_EXP_FLOOR = -700.0
_RESONANCE_TOL = 1e-14
_TINY = 1e-300


@dataclass(frozen=True)
class ModeKinematics:
    omega: float
    k: float
    k_z: complex
    k_zm: complex
    sector: str


@dataclass(frozen=True)
class Geometry:
    """Emitter-slab distance ``z`` and slab thickness ``delta`` in metres."""

    z: float
    delta: float = 0.0
    semi_infinite: bool = False

    def __post_init__(self):
        if not np.isfinite(self.z) or self.z < 0:
            raise InvalidInput(f"z must be finite and >= 0, got {self.z}")
        if not self.semi_infinite and (not np.isfinite(self.delta) or self.delta < 0):
            raise InvalidInput(f"delta must be finite and >= 0, got {self.delta}")

    @classmethod
    def half_space(cls, z):
        return cls(z=z, delta=float("inf"), semi_infinite=True)


@dataclass(frozen=True)
class SlabCoefficients:
    rho_TE: complex
    rho_TM: complex
    tau_TE: complex
    tau_TM: complex


@dataclass(frozen=True)
class Fresnel:
    r_TE: complex
    r_TM: complex
    t_TE: complex
    t_TM: complex
    tbar_TE: complex
    tbar_TM: complex


# --------------------------------------------------------------------------
# vectorised kernels, reduced units


def medium_kz(eps_minus_kt2):
    """Branch-corrected sqrt(eps - k~^2): Im >= 0, and Re >= 0 when Im == 0."""
    q = np.sqrt(np.asarray(eps_minus_kt2, dtype=complex))
    flip = (q.imag < 0) | ((q.imag == 0) & (q.real < 0))
    return np.where(flip, -q, q)


def _expm1(z):
    """exp(z) - 1 for complex arrays, accurate for small |z|."""
    x, y = z.real, z.imag
    return np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2 + 1j * np.exp(x) * np.sin(y)


def reduced_fresnel(kz, kzm, eps):
    """Interface coefficients and ``1 - r^2`` for both polarisations.

    Returns ``(r_te, r_tm, one_minus_r2_te, one_minus_r2_tm)``.
    ``kz``, ``kzm`` are reduced and ``kz^2 - kzm^2 == 1 - eps`` is assumed.
    """
    s_te = kz + kzm
    s_tm = eps * kz + kzm
    if np.any(np.abs(s_te) < _TINY) or np.any(np.abs(s_tm) < _TINY):
        raise DegenerateDenominator("Fresnel denominator vanishes")
    kt2 = kz * 0 + 1.0 - kz**2  # k~^2, kept complex for broadcasting
    r_te = (1.0 - eps) / s_te**2
    r_tm = (eps - 1.0) * (eps - kt2 * (eps + 1.0)) / s_tm**2
    om_te = 4.0 * kz * kzm / s_te**2
    om_tm = 4.0 * eps * kz * kzm / s_tm**2
    return r_te, r_tm, om_te, om_tm


def _phase(kzm, dtilde):
    """Return ``(e, 1 - e)`` for ``e = exp(2 i kzm dtilde)`` with underflow clamp."""
    arg = 2j * kzm * dtilde
    small = arg.real < _EXP_FLOOR
    safe = np.where(small, 0.0, arg)
    e = np.where(small, 0.0, np.exp(safe))
    one_minus = np.where(small, 1.0, -_expm1(safe))
    return e, one_minus


def reduced_rho(kz, kzm, eps, dtilde, semi_infinite):
    """Slab reflection coefficients ``(rho_te, rho_tm)`` on arrays."""
    r_te, r_tm, om_te, om_tm = reduced_fresnel(kz, kzm, eps)
    if semi_infinite:
        return r_te, r_tm
    if dtilde == 0:
        z = np.zeros_like(r_te)
        return z, z
    e, one_minus = _phase(kzm, dtilde)
    den_te = one_minus + e * om_te
    den_tm = one_minus + e * om_tm
    _check_resonance(den_te, den_tm)
    return r_te * one_minus / den_te, r_tm * one_minus / den_tm


def reduced_rho_tau(kz, kzm, eps, dtilde, semi_infinite):
    """Slab ``(rho_te, rho_tm, tau_te, tau_tm)`` on arrays (propagative use)."""
    r_te, r_tm, om_te, om_tm = reduced_fresnel(kz, kzm, eps)
    if semi_infinite:
        z = np.zeros_like(r_te)
        return r_te, r_tm, z, z
    if dtilde == 0:
        z = np.zeros_like(r_te)
        one = np.ones_like(r_te)
        return z, z, one, one
    e, one_minus = _phase(kzm, dtilde)
    den_te = one_minus + e * om_te
    den_tm = one_minus + e * om_tm
    _check_resonance(den_te, den_tm)
    arg = 1j * (kzm - kz) * dtilde
    small = arg.real < _EXP_FLOOR
    prop = np.where(small, 0.0, np.exp(np.where(small, 0.0, arg)))
    # t tbar == 1 - r^2 for both polarisations
    tau_te = om_te * prop / den_te
    tau_tm = om_tm * prop / den_tm
    return r_te * one_minus / den_te, r_tm * one_minus / den_tm, tau_te, tau_tm


def _check_resonance(den_te, den_tm):
    if np.any(np.abs(den_te) < _RESONANCE_TOL) or np.any(np.abs(den_tm) < _RESONANCE_TOL):
        raise ResonantDenominator(
            "1 - r^2 exp(2 i k_zm delta) vanishes (lossless slab at a Fabry-Perot resonance)"
        )


# --------------------------------------------------------------------------
# scalar SI API


def kinematics(omega, k, eps):
    """Vacuum and in-medium normal wavevector components for mode (omega, k)."""
    if not omega > 0:
        raise InvalidInput("omega must be > 0")
    if not k >= 0:
        raise InvalidInput("k must be >= 0")
    k0 = omega / C_LIGHT
    kt = k / k0
    if kt <= 1.0:
        kz = complex(np.sqrt(1.0 - kt * kt))
        sector = PROPAGATIVE
    else:
        kz = 1j * np.sqrt(kt * kt - 1.0)
        sector = EVANESCENT
    kzm = complex(medium_kz(complex(eps) - kt * kt))
    return ModeKinematics(omega=omega, k=k, k_z=kz * k0, k_zm=kzm * k0, sector=sector)


def fresnel(kin, eps):
    """Vacuum-medium r, t and medium-vacuum tbar for both polarisations."""
    eps = complex(eps)
    if eps == 1.0:
        return Fresnel(0j, 0j, 1 + 0j, 1 + 0j, 1 + 0j, 1 + 0j)
    k0 = kin.omega / C_LIGHT
    kz = np.asarray(kin.k_z / k0)
    kzm = np.asarray(kin.k_zm / k0)
    r_te, r_tm, _, _ = reduced_fresnel(kz, kzm, eps)
    n = np.sqrt(eps)
    s_te = kz + kzm
    s_tm = eps * kz + kzm
    return Fresnel(
        r_TE=complex(r_te),
        r_TM=complex(r_tm),
        t_TE=complex(2 * kz / s_te),
        t_TM=complex(2 * n * kz / s_tm),
        tbar_TE=complex(2 * kzm / s_te),
        tbar_TM=complex(2 * n * kzm / s_tm),
    )


def slab_coefficients(kin, eps, geom):
    """Finite-thickness reflection and transmission (rho_p, tau_p).

    ``eps`` may be a complex number or a :class:`PerfectMirror`/``Vacuum``
    instance; a perfect mirror gives rho = (-1)^p and tau = 0 for any thickness.
    """
    if isinstance(eps, PerfectMirror):
        return SlabCoefficients(-1 + 0j, 1 + 0j, 0j, 0j)
    if isinstance(eps, Vacuum):
        eps = 1.0
    eps = complex(eps)
    if eps == 1.0 or (not geom.semi_infinite and geom.delta == 0):
        return SlabCoefficients(0j, 0j, 1 + 0j, 1 + 0j)
    k0 = kin.omega / C_LIGHT
    kz = np.asarray(kin.k_z / k0)
    kzm = np.asarray(kin.k_zm / k0)
    dt = 0.0 if geom.semi_infinite else geom.delta * k0
    rte, rtm, tte, ttm = reduced_rho_tau(kz, kzm, eps, dt, geom.semi_infinite)
    return SlabCoefficients(complex(rte), complex(rtm), complex(tte), complex(ttm))


def slab_coefficients_for(model, omega, k, geom):
    """Convenience wrapper: evaluate the model, kinematics and slab coefficients."""
    if isinstance(model, (PerfectMirror, Vacuum)):
        kin = kinematics(omega, k, 1.0)
        return slab_coefficients(kin, model, geom)
    eps = permittivity(model, omega)
    return slab_coefficients(kinematics(omega, k, eps), eps, geom)
