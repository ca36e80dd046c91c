"""Environment/body factor vectors B, C and D of a planar slab.

All three are dimensionless 3-vectors (x, y, z components; x == y by
in-plane isotropy). Internally everything runs in reduced variables
``z~ = w z / c``, ``delta~ = w delta / c``:

* propagative sector, ``s = c k_z / w`` in [0, 1] (``k dk / k_z -> (w/c) ds``)::

      B = 3/4 sum_p int_0^1 M_p^+(s) (|rho_p|^2 + |tau_p|^2) ds
      C = 3/4 sum_p int_0^1 M_p^-(s) Re(rho_p e^{2 i s z~}) ds

  with ``M_TE = (1, 1, 0)``, ``M_TM^(+/-) = (+/- s^2, +/- s^2, 2 (1 - s^2))``;

* evanescent sector, ``u = c Im(k_z) / w`` in (0, inf)::

      D = 3/4 sum_p int_0^inf M_p(u) Im(rho_p) e^{-2 u z~} du

  with ``M_TE = (1, 1, 0)``, ``M_TM = (u^2, u^2, 2 (1 + u^2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1

from . import gk
from .constants import C_LIGHT
from .errors import DivergentAtContact, InvalidInput, RegimeParameterMismatch
from .matprops import PerfectMirror, Vacuum, permittivity
from .slab_optics import Geometry, medium_kz, reduced_rho, reduced_rho_tau

TE, TM = 1, 2


@dataclass(frozen=True)
class Tolerances:
    """Quadrature targets; a component converges when error <= max(atol, rtol |value|)."""

    b_rtol: float = 1e-10
    c_rtol: float = 1e-9
    c_atol: float = 1e-12
    d_rtol: float = 1e-9
    d_atol: float = 1e-15
    max_panels: int = 200_000

    def __post_init__(self):
        for name in ("b_rtol", "c_rtol", "c_atol", "d_rtol", "d_atol"):
            if not getattr(self, name) >= 0:
                raise InvalidInput(f"tolerance {name} must be >= 0")
        if self.max_panels < 1:
            raise InvalidInput("max_panels must be >= 1")


DEFAULT_TOL = Tolerances()
_MAX_FP_PANELS = 20000


@dataclass(frozen=True)
class Diagnostics:
    error: np.ndarray
    panels: int
    truncation: float = 0.0


@dataclass(frozen=True)
class EnvBodyFactors:
    omega: float
    geom: Geometry
    model: object
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def max_error(self):
        errs = [np.max(d.error) for d in self.diagnostics.values()]
        return float(max(errs)) if errs else 0.0


def _xyz(xy, z):
    return np.array([xy, xy, z], dtype=float)


def _reduced(omega, geom):
    k0 = omega / C_LIGHT
    zt = geom.z * k0
    dt = 0.0 if geom.semi_infinite else geom.delta * k0
    return zt, dt


def _no_body(model, geom):
    return isinstance(model, Vacuum) or (not geom.semi_infinite and geom.delta == 0)


def _eps(model, omega):
    if isinstance(model, PerfectMirror):
        return None
    return complex(permittivity(model, omega))


def angular_weight(p, phi, k, omega):
    """Weight vector M_p^phi(k, omega) multiplying each polarisation."""
    if p not in (TE, TM, "TE", "TM"):
        raise InvalidInput(f"polarisation must be TE or TM, got {p!r}")
    if phi not in (1, -1):
        raise InvalidInput("phi must be +1 or -1")
    if p in (TE, "TE"):
        return np.array([1.0, 1.0, 0.0])
    kt2 = (C_LIGHT * k / omega) ** 2
    kz2 = abs(1.0 - kt2)
    return np.array([phi * kz2, phi * kz2, 2.0 * kt2])


# --------------------------------------------------------------------------
# panel layout


def _fp_panels(eps, dt, lo2, hi2, per_period=8):
    """Panels needed to resolve multiple-reflection oscillations.

    ``lo2``/``hi2`` bound ``eps - k~^2 - (eps - 1)``, i.e. the range of
    ``s^2`` (propagative) or ``-u^2`` (evanescent) swept by the integral.
    """
    if dt == 0 or eps is None:
        return 0
    k_a = medium_kz(eps - 1.0 + lo2)
    k_b = medium_kz(eps - 1.0 + hi2)
    if math.exp(-2.0 * dt * min(k_a.imag, k_b.imag)) < 1e-17:
        return 0
    swing = 2.0 * dt * abs(k_b.real - k_a.real)
    return min(_MAX_FP_PANELS, math.ceil(swing * per_period / (2 * math.pi)))


def _prop_edges(eps, dt, zt=0.0):
    n = max(4, math.ceil(4.0 * zt / math.pi), _fp_panels(eps, dt, 0.0, 1.0))
    return np.linspace(0.0, 1.0, n + 1)


def u_max_for(zt):
    return max(30.0 / zt, 10.0)


def _evan_edges(eps, dt, semi, zt):
    umax = u_max_for(zt)
    q = abs(np.sqrt(eps - 1.0)) if eps is not None else 1.0
    ua = min(umax, max(2.0, 2.0 * q))
    n1 = max(8, _fp_panels(eps, dt, 0.0, -min(ua, q) ** 2))
    pts = list(np.linspace(0.0, ua, n1 + 1))
    if zt > 1.0:
        pts += [c / zt for c in (0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)]
    u = ua
    while u < umax:
        u *= 2.0
        pts.append(min(u, umax))
    if not semi and dt > 0 and eps is not None:
        # thin-slab guided mode near u* where r_tm^2 e^{-2 u delta~} = 1
        big = np.log(((eps - 1.0) / (eps + 1.0)) ** 2)
        if big.real > 0:
            ustar = big.real / (2.0 * dt)
            pts += [ustar * f for f in (0.8, 0.95, 1.0, 1.05, 1.25)]
        # thin-film guided modes near u = delta~ (eps - 1) / 2 (TE) and / (2 eps) (TM)
        for ug in (abs(dt * (eps - 1.0)) / 2.0, (dt * (eps - 1.0) / (2.0 * eps)).real):
            if ug > 0:
                pts += [ug * f for f in (0.25, 0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 2.0, 4.0, 16.0, 64.0)]
    pts = np.unique(np.clip(np.array(pts), 0.0, umax))
    return pts


# --------------------------------------------------------------------------
# integrands (rows: xy, z)


def _kzm_prop(eps, s):
    return medium_kz(eps - 1.0 + s * s)


def _integrand_B(eps, dt, semi):
    def f(s):
        kz = s.astype(complex)
        kzm = _kzm_prop(eps, s)
        rte, rtm, tte, ttm = reduced_rho_tau(kz, kzm, eps, dt, semi)
        te = np.abs(rte) ** 2 + np.abs(tte) ** 2
        tm = np.abs(rtm) ** 2 + np.abs(ttm) ** 2
        s2 = s * s
        return 0.75 * np.vstack([te + s2 * tm, 2.0 * (1.0 - s2) * tm])

    return f


def _integrand_C(eps, dt, semi, zt):
    def f(s):
        if eps is None:
            rte = -np.ones_like(s, dtype=complex)
            rtm = np.ones_like(s, dtype=complex)
        else:
            rte, rtm = reduced_rho(s.astype(complex), _kzm_prop(eps, s), eps, dt, semi)
        ph = np.exp(2j * s * zt)
        a = (rte * ph).real
        b = (rtm * ph).real
        s2 = s * s
        return 0.75 * np.vstack([a - s2 * b, 2.0 * (1.0 - s2) * b])

    return f


def _integrand_D_parts(eps, dt, semi, zt):
    """Rows: TE_xy, TM_xy, TM_z."""

    def f(u):
        kz = 1j * u
        kzm = medium_kz(eps - 1.0 - u * u)
        rte, rtm = reduced_rho(kz, kzm, eps, dt, semi)
        w = np.exp(-2.0 * u * zt)
        u2 = u * u
        return 0.75 * w * np.vstack([rte.imag, u2 * rtm.imag, 2.0 * (1.0 + u2) * rtm.imag])

    return f


# --------------------------------------------------------------------------
# public API


def _check_omega(omega):
    if not omega > 0:
        raise InvalidInput("omega must be > 0")


def compute_B(omega, geom, model, tol=None):
    """Propagative reflected + transmitted power weight; independent of z."""
    return _compute_B(omega, geom, model, tol or DEFAULT_TOL)[0]


def _compute_B(omega, geom, model, tol):
    _check_omega(omega)
    if _no_body(model, geom) or isinstance(model, PerfectMirror):
        return np.ones(3), Diagnostics(np.zeros(3), 0)
    eps = _eps(model, omega)
    _, dt = _reduced(omega, geom)
    res = gk.integrate(
        _integrand_B(eps, dt, geom.semi_infinite),
        _prop_edges(eps, dt),
        rtol=tol.b_rtol,
        max_panels=tol.max_panels,
    )
    return _xyz(*res.value), Diagnostics(_xyz(*res.error), res.panels)


def compute_C(omega, geom, model, tol=None):
    """Propagative interference term between direct and reflected fields."""
    return _compute_C(omega, geom, model, tol or DEFAULT_TOL)[0]


def _compute_C(omega, geom, model, tol):
    _check_omega(omega)
    if _no_body(model, geom):
        return np.zeros(3), Diagnostics(np.zeros(3), 0)
    eps = _eps(model, omega)
    zt, dt = _reduced(omega, geom)
    res = gk.integrate(
        _integrand_C(eps, dt, geom.semi_infinite, zt),
        _prop_edges(eps, dt, zt),
        rtol=tol.c_rtol,
        atol=tol.c_atol,
        max_panels=tol.max_panels,
    )
    return _xyz(*res.value), Diagnostics(_xyz(*res.error), res.panels)


def compute_D_parts(omega, geom, model, tol=None):
    """D split by polarisation: dict with keys TE_xy, TM_xy, TM_z."""
    return _compute_D_parts(omega, geom, model, tol or DEFAULT_TOL)[0]


def _compute_D_parts(omega, geom, model, tol):
    _check_omega(omega)
    if not geom.z > 0:
        raise DivergentAtContact("D diverges at z = 0")
    zero = {"TE_xy": 0.0, "TM_xy": 0.0, "TM_z": 0.0}
    if _no_body(model, geom) or isinstance(model, PerfectMirror):
        return zero, Diagnostics(np.zeros(3), 0)
    eps = _eps(model, omega)
    zt, dt = _reduced(omega, geom)
    f = _integrand_D_parts(eps, dt, geom.semi_infinite, zt)
    edges = _evan_edges(eps, dt, geom.semi_infinite, zt)
    res = gk.integrate(
        f,
        edges,
        rtol=tol.d_rtol,
        atol=tol.d_atol,
        max_panels=tol.max_panels,
        groups=((0, 1), (2,)),
    )
    parts = dict(zip(("TE_xy", "TM_xy", "TM_z"), (float(v) for v in res.value)))
    err = _xyz(res.error[0] + res.error[1], res.error[2])
    return parts, Diagnostics(err, res.panels, _tail_bound(f, edges[-1], zt))


def _tail_bound(f, umax, zt):
    """Bound on the neglected ``u > u_max`` contribution.

    Each row is taken as its value at ``u_max`` times the exponential tail,
    with the TM polynomial growth ``(1 + u^2)`` integrated exactly.
    """
    level = np.abs(f(np.array([umax]))[:, 0])
    a = 2.0 * zt
    flat = 1.0 / a
    poly = ((1 + umax**2) / a + 2 * umax / a**2 + 2 / a**3) / (1 + umax**2)
    return float(level[0] * flat + (level[1] + level[2]) * poly)


def compute_D(omega, geom, model, tol=None):
    """Evanescent (near-field) emission weight of the body; diverges as z -> 0."""
    parts = compute_D_parts(omega, geom, model, tol)
    return _xyz(parts["TE_xy"] + parts["TM_xy"], parts["TM_z"])


def compute_factors(omega, geom, model, tol=None):
    """B, C and D together with per-integral diagnostics."""
    tol = tol or DEFAULT_TOL
    B, db = _compute_B(omega, geom, model, tol)
    C, dc = _compute_C(omega, geom, model, tol)
    parts, dd = _compute_D_parts(omega, geom, model, tol)
    D = _xyz(parts["TE_xy"] + parts["TM_xy"], parts["TM_z"])
    return EnvBodyFactors(omega, geom, model, B, C, D, {"B": db, "C": dc, "D": dd})


def mirror_C_closed_form(omega, z):
    """C for a perfect mirror at distance z (closed form, argument 2 w z / c)."""
    if not z >= 0:
        raise InvalidInput("z must be >= 0")
    a = 2.0 * omega * z / C_LIGHT
    if a < 1e-3:
        a2 = a * a
        # sin a / a^3 - cos a / a^2 and sin a / a, Taylor to a^6
        g = 1.0 / 3.0 - a2 / 30.0 + a2**2 / 840.0 - a2**3 / 45360.0
        h = 1.0 - a2 / 6.0 + a2**2 / 120.0 - a2**3 / 5040.0
    else:
        g = math.sin(a) / a**3 - math.cos(a) / a**2
        h = math.sin(a) / a
    return 1.5 * np.array([g - h, g - h, 2.0 * g])


def sum_rule(omega):
    """Sum over p of int_0^{w/c} k dk / k_z M_p^+, normalised by 4 w / 3 c.

    Evaluated in the reduced variable ``s`` with the same engine as B; the
    result is (1, 1, 1) for every omega.
    """
    _check_omega(omega)
    k0 = omega / C_LIGHT

    def f(s):
        s2 = s * s
        # k dk / k_z = k0 ds; TE weight (1,1,0) + TM weight (s^2, s^2, 2(1-s^2))
        return k0 * np.vstack([1.0 + s2, 2.0 * (1.0 - s2)])

    res = gk.integrate(f, np.linspace(0.0, 1.0, 5), rtol=1e-14)
    return _xyz(*res.value) / (4.0 * k0 / 3.0)


# --------------------------------------------------------------------------
# asymptotics

REGIMES = (
    "large_z",
    "small_z",
    "large_z_thick",
    "large_z_thin",
    "contact_thin_first",
    "contact_thick_first",
)


def slab_f(eps, dtilde):
    """cot(delta~ sqrt(eps - 1)) / sqrt(eps - 1); delta~ = inf gives -i / sqrt(eps - 1)."""
    q = medium_kz(eps - 1.0)
    if math.isinf(dtilde):
        return -1j / q
    return (1.0 / np.tan(dtilde * q)) / q


def asymptote_D(omega, geom, model, regime):
    """Closed-form limiting behaviour of D in the requested regime."""
    if regime not in REGIMES:
        raise InvalidInput(f"unknown regime {regime!r}; expected one of {REGIMES}")
    if isinstance(model, (Vacuum, PerfectMirror)):
        raise RegimeParameterMismatch("asymptotes need a lossy dielectric model")
    _check_omega(omega)
    eps = _eps(model, omega)
    zt, dt = _reduced(omega, geom)
    if geom.semi_infinite:
        dt = math.inf
    q = medium_kz(eps - 1.0)

    if regime.startswith("large_z"):
        if zt < 10.0:
            raise RegimeParameterMismatch(f"{regime} needs w z / c >= 10, got {zt:.3g}")
        if regime == "large_z":
            f = slab_f(eps, dt)
        elif regime == "large_z_thick":
            if dt < 10.0:
                raise RegimeParameterMismatch(f"large_z_thick needs w delta / c >= 10, got {dt:.3g}")
            f = -1j / q
        else:
            if not dt <= 0.1:
                raise RegimeParameterMismatch(f"large_z_thin needs w delta / c <= 0.1, got {dt:.3g}")
            # cot(x) -> 1/x for a thin slab
            f = 1.0 / (dt * q * q)
        te = -3.0 * np.imag(f) / (8.0 * zt**2)
        tm_xy = -9.0 * np.imag(eps * f) / (16.0 * zt**4)
        tm_z = -3.0 * np.imag(eps * f) / (4.0 * zt**2)
        return _xyz(te + tm_xy, tm_z)

    if zt > 0.1:
        raise RegimeParameterMismatch(f"{regime} needs w z / c <= 0.1, got {zt:.3g}")
    i1 = np.imag((eps - 1.0) / (eps + 1.0))
    if regime == "small_z":
        return 3.0 * i1 / (16.0 * zt**3) * np.array([1.0, 1.0, 2.0])
    if regime == "contact_thick_first":
        if dt < 10.0 * zt:
            raise RegimeParameterMismatch("contact_thick_first needs delta >> z")
        te = _te_contact_thick(eps)
        return _xyz(te + 3.0 * i1 / (16.0 * zt**3), 3.0 * i1 / (8.0 * zt**3))
    # contact_thin_first: delta -> 0 taken before z -> 0
    if not dt <= 0.1 * zt:
        raise RegimeParameterMismatch("contact_thin_first needs delta << z")
    i2 = np.imag((eps * eps - 1.0) / eps)
    return _thin_contact(eps, dt, zt, i2)


def _te_contact_thick(eps):
    """TE part of D at contact for a half-space: 3/4 int_0^inf Im r_TE du."""

    def f(u):
        kzm = medium_kz(eps - 1.0 - u * u)
        kz = 1j * u
        r = (1.0 - eps) / (kz + kzm) ** 2
        return 0.75 * r.imag[None, :]

    # int_U^inf Im r ~ Im(eps)/(4U) beyond U
    U = 1e4 * max(1.0, abs(eps))
    head = gk.integrate(f, np.concatenate([[0.0], np.geomspace(1e-3, U, 40)]), rtol=1e-10)
    return float(head.value[0]) + 0.75 * (eps.imag / 4.0) / U


def _thin_contact(eps, dt, zt, i2):
    """Contact law when the slab is thinner than the distance (delta~ << z~ << 1).

    To first order in delta~ the TM coefficient grows linearly,
    Im rho_TM ~ (delta~ / 2) I2 u, so the z~^-3 divergence of a thick body
    becomes delta~ / z~^4. The TE coefficient is
    delta~ (eps - 1) / (2 u - delta~ (eps - 1)), a thin-film guided-mode pole
    whose Laplace transform is an exponential integral.
    """
    x = dt * (eps - 1.0) * zt
    te = 0.375 * dt * np.imag((eps - 1.0) * np.exp(-x) * exp1(-x))
    tm_xy = 9.0 * dt * i2 / (64.0 * zt**4)
    tm_z = 9.0 * dt * i2 / (32.0 * zt**4)
    return _xyz(te + tm_xy, tm_z)
