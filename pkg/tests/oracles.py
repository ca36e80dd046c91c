"""Independent reference implementations used only by the tests.

Nothing here imports the package's quadrature, optics or dynamics code: the
slab coefficients are the textbook Fresnel/Airy formulas evaluated naively,
integrals are plain trapezoid sums, and ODEs are stepped with classical RK4.
"""

from itertools import pairwise

import numpy as np

N_TRAPZ = 100_000


def naive_rho_tau(kz, eps, dt):
    """Airy-summed slab coefficients straight from the textbook formulas (reduced units)."""
    kt2 = 1.0 - kz**2
    kzm = np.sqrt(eps - kt2 + 0j)
    kzm = np.where(kzm.imag < 0, -kzm, kzm)
    r_te = (kz - kzm) / (kz + kzm)
    r_tm = (eps * kz - kzm) / (eps * kz + kzm)
    n = np.sqrt(eps + 0j)
    t_te, tb_te = 2 * kz / (kz + kzm), 2 * kzm / (kz + kzm)
    t_tm, tb_tm = 2 * n * kz / (eps * kz + kzm), 2 * n * kzm / (eps * kz + kzm)
    if np.isinf(dt):
        z = np.zeros_like(r_te)
        return r_te, r_tm, z, z
    e = np.exp(2j * kzm * dt)
    prop = np.exp(1j * (kzm - kz) * dt)
    rho_te = r_te * (1 - e) / (1 - r_te**2 * e)
    rho_tm = r_tm * (1 - e) / (1 - r_tm**2 * e)
    tau_te = t_te * tb_te * prop / (1 - r_te**2 * e)
    tau_tm = t_tm * tb_tm * prop / (1 - r_tm**2 * e)
    return rho_te, rho_tm, tau_te, tau_tm


def _trapz(y, x):
    return np.trapezoid(y, x) if hasattr(np, "trapezoid") else np.trapz(y, x)


def trapezoid_BCD(eps, zt, dt, n=N_TRAPZ):
    """B, C, D as (xy, z) pairs by trapezoid sums in s = k_z and u = Im k_z."""
    s = np.linspace(0.0, 1.0, n)
    rte, rtm, tte, ttm = naive_rho_tau(s.astype(complex), eps, dt)
    s2 = s * s
    te = np.abs(rte) ** 2 + np.abs(tte) ** 2
    tm = np.abs(rtm) ** 2 + np.abs(ttm) ** 2
    B = 0.75 * np.array([_trapz(te + s2 * tm, s), _trapz(2 * (1 - s2) * tm, s)])
    ph = np.exp(2j * s * zt)
    cte, ctm = np.real(rte * ph), np.real(rtm * ph)
    C = 0.75 * np.array([_trapz(cte - s2 * ctm, s), _trapz(2 * (1 - s2) * ctm, s)])
    # e^{-2 u z~} < 1e-35 beyond u_max; u = a sinh(x) concentrates points at
    # small u, where thin-film guided-mode poles are narrowest
    a = 1e-4
    x = np.linspace(0.0, np.arcsinh(40.0 / zt / a), n)
    u = a * np.sinh(x)
    rte, rtm, _, _ = naive_rho_tau(1j * u, eps, dt)
    w = np.exp(-2 * u * zt)
    D = 0.75 * np.array([
        _trapz(w * (rte.imag + u * u * rtm.imag), u),
        _trapz(w * 2 * (1 + u * u) * rtm.imag, u),
    ])
    return B, C, D


def rk4(f, y0, t_points, steps_per_interval):
    """Classical fixed-step RK4 returning y at each of ``t_points`` (first must be 0)."""
    y = np.array(y0, dtype=complex)
    out = [y.copy()]
    for t0, t1 in pairwise(t_points):
        h = (t1 - t0) / steps_per_interval
        for _ in range(steps_per_interval):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def two_level_rhs(g_dn, g_up, delta):
    """Bloch equations: y = (rho11, rho22, rho12)."""

    def f(y):
        r11, r22, r12 = y
        return np.array([
            g_dn * r22 - g_up * r11,
            g_up * r11 - g_dn * r22,
            (1j * delta - 0.5 * (g_dn + g_up)) * r12,
        ])

    return f


def lambda_rhs(d31, u31, d32, u32, deltas):
    """Lambda-system equations: y = (rho11, rho22, rho33, rho12, rho13, rho23)."""
    w21, w31, w32 = deltas

    def f(y):
        r11, r22, r33, r12, r13, r23 = y
        return np.array([
            -u31 * r11 + d31 * r33,
            -u32 * r22 + d32 * r33,
            u31 * r11 - d31 * r33 + u32 * r22 - d32 * r33,
            (1j * w21 - 0.5 * (u31 + u32)) * r12,
            (1j * w31 - 0.5 * (d31 + u31 + d32)) * r13,
            (1j * w32 - 0.5 * (d32 + u32 + d31)) * r23,
        ])

    return f


def detailed_balance_ladder(gamma_up, gamma_down):
    """Populations of a nearest-neighbour ladder from p_{n+1} / p_n = up_n / down_n."""
    p = [1.0]
    for up, dn in zip(gamma_up, gamma_down):
        p.append(p[-1] * up / dn)
    p = np.array(p)
    return p / p.sum()
