"""Time evolution and steady states of two-level, Lambda three-level and N-level emitters.

Levels are indexed from 0 (ground) upwards; ``rho[i, j]`` is
``<i+1| rho |j+1>`` in one-based physics notation. Coherences follow
``d rho_ij / dt = (i Delta_ji - decay_ij) rho_ij`` for i < j, where
``Delta_ji`` is the (Lamb-shifted) splitting, supplied by the caller and
defaulting to the bare transition frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm
from scipy.sparse.csgraph import connected_components

from .constants import HBAR, K_B
from .errors import (
    BothChannelsDark,
    DegenerateRateMatrix,
    DegenerateScheme,
    DisconnectedLevels,
    InvalidInput,
    InvalidState,
    NonDiagonalInput,
    ZeroTotalRate,
)
from .rates import DipoleSpec

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
# eigenvector matrices worse conditioned than this use the matrix exponential
EIG_COND_LIMIT = 1e8
EIG_RESID_TOL = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    """Validated N x N density matrix (N >= 2)."""

    data: np.ndarray

    def __post_init__(self):
        rho = np.array(self.data, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 2:
            raise InvalidState(f"density matrix must be square with dim >= 2, got {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidState("density matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise InvalidState("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace is {np.trace(rho).real!r}, expected 1")
        diag = rho.diagonal().real
        if np.any(diag < -TRACE_TOL) or np.any(diag > 1 + TRACE_TOL):
            raise InvalidState("diagonal entries must lie in [0, 1]")
        if np.linalg.eigvalsh(rho).min() < -PSD_TOL:
            raise InvalidState("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "data", rho)

    @property
    def dim(self):
        return self.data.shape[0]

    @property
    def populations(self):
        return self.data.diagonal().real.copy()

    def __getitem__(self, idx):
        return self.data[idx]

    def is_diagonal(self, tol=1e-12):
        off = self.data - np.diag(self.data.diagonal())
        return bool(np.max(np.abs(off)) <= tol)

    @classmethod
    def from_populations(cls, pops):
        return cls(np.diag(np.asarray(pops, dtype=float)))

    @classmethod
    def basis(cls, dim, level):
        p = np.zeros(dim)
        p[level] = 1.0
        return cls.from_populations(p)

    @classmethod
    def pure(cls, amplitudes):
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim):
        return cls(np.eye(dim) / dim)


@dataclass(frozen=True)
class LevelScheme:
    """Level frequencies (rad/s, increasing) and allowed dipole transitions.

    ``transitions`` holds ``(upper, lower)`` zero-based index pairs; ``dipoles``
    the matching :class:`DipoleSpec` objects.
    """

    levels: tuple
    transitions: tuple
    dipoles: tuple = field(default=(), compare=False)

    def __post_init__(self):
        w = np.asarray(self.levels, dtype=float)
        if w.ndim != 1 or w.size < 2 or not np.all(np.isfinite(w)):
            raise InvalidInput("need at least two finite level frequencies")
        if not np.all(np.diff(w) > 0):
            raise DegenerateScheme("level frequencies must be strictly increasing")
        trans = tuple((int(u), int(lo)) for u, lo in self.transitions)
        if not trans:
            raise InvalidInput("at least one allowed transition is required")
        for u, lo in trans:
            if not (0 <= lo < u < w.size):
                raise InvalidInput(f"transition {(u, lo)} must satisfy 0 <= lower < upper < {w.size}")
        if len(set(trans)) != len(trans):
            raise InvalidInput("duplicate transition")
        freqs = [w[u] - w[lo] for u, lo in trans]
        if len(freqs) > 1:
            f = np.sort(freqs)
            if np.any(np.diff(f) <= 1e-12 * f[-1]):
                raise DegenerateScheme("transition frequencies must be pairwise distinct")
        dip = tuple(self.dipoles) or tuple(DipoleSpec.isotropic() for _ in trans)
        if len(dip) != len(trans):
            raise InvalidInput("one DipoleSpec per transition is required")
        object.__setattr__(self, "levels", tuple(float(x) for x in w))
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "dipoles", dip)

    @property
    def dim(self):
        return len(self.levels)

    def frequency(self, upper, lower):
        return self.levels[upper] - self.levels[lower]

    @property
    def transition_frequencies(self):
        return tuple(self.frequency(u, lo) for u, lo in self.transitions)

    @classmethod
    def two_level(cls, omega0, dipole=None):
        if not omega0 > 0:
            raise InvalidInput("omega0 must be > 0")
        return cls((0.0, omega0), ((1, 0),), (dipole or DipoleSpec.isotropic(),))

    @classmethod
    def lambda_scheme(cls, omega31, omega32, dipole31=None, dipole32=None):
        """Levels 1 < 2 < 3 with 1-3 and 2-3 allowed and 1-2 forbidden."""
        if not omega31 > omega32 > 0:
            raise DegenerateScheme("Lambda scheme needs omega31 > omega32 > 0")
        iso = DipoleSpec.isotropic()
        return cls(
            (0.0, omega31 - omega32, omega31),
            ((2, 0), (2, 1)),
            (dipole31 or iso, dipole32 or iso),
        )


def _as_state(rho, dim=None):
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(rho)
    if dim is not None and rho.dim != dim:
        raise InvalidState(f"expected a {dim}x{dim} state, got {rho.dim}x{rho.dim}")
    return rho


def _check_time(t):
    if not (np.isfinite(t) and t >= 0):
        raise InvalidInput("t must be finite and >= 0")


def _hermitian_from_upper(pops, upper):
    """Assemble rho from populations and {(i, j): rho_ij} for i < j."""
    rho = np.diag(np.asarray(pops, dtype=complex))
    for (i, j), v in upper.items():
        rho[i, j] = v
        rho[j, i] = np.conj(v)
    return DensityMatrix(rho)


# --------------------------------------------------------------------------
# two-level


def two_level_evolve(rho0, t, rates, delta_omega=None):
    """Closed-form state at time ``t`` for a two-level emitter."""
    rho0 = _as_state(rho0, 2)
    _check_time(t)
    if t == 0:
        return rho0
    delta = rates.omega if delta_omega is None else delta_omega
    g_dn, g_up = rates.gamma_down, rates.gamma_up
    gamma = g_dn + g_up
    p0 = rho0.populations
    if gamma == 0:
        pops = p0
        decay = 1.0
    else:
        decay = math.exp(-gamma * t)
        grow = -math.expm1(-gamma * t) / gamma
        pops = p0 * decay + grow * np.array([g_dn, g_up])
    rho12 = rho0[0, 1] * np.exp(1j * delta * t) * math.exp(-0.5 * gamma * t)
    return _hermitian_from_upper(pops, {(0, 1): rho12})


def two_level_steady(rates):
    """Stationary state diag(Gamma(w), Gamma(-w)) / gamma; thermal at T_eff."""
    if not rates.gamma_down > 0:
        raise ZeroTotalRate("two-level steady state needs Gamma(omega) > 0")
    gamma = rates.gamma_down + rates.gamma_up
    return DensityMatrix.from_populations([rates.gamma_down / gamma, rates.gamma_up / gamma])


# --------------------------------------------------------------------------
# Lambda three-level


def lambda_rate_matrix(rates31, rates32):
    """Generator M of d(rho11, rho22, rho33)/dt = M (rho11, rho22, rho33)."""
    d31, u31 = rates31.gamma_down, rates31.gamma_up
    d32, u32 = rates32.gamma_down, rates32.gamma_up
    return np.array(
        [
            [-u31, 0.0, d31],
            [0.0, -u32, d32],
            [u31, u32, -d31 - d32],
        ]
    )


def _propagate(M, p0, t):
    """exp(M t) p0 by eigendecomposition, or the matrix exponential when ill conditioned."""
    if not np.all(np.isfinite(M)):
        raise DegenerateRateMatrix("rate matrix has non-finite entries")
    lam, V = np.linalg.eig(M)
    # balancing can return wrong eigenvectors when rates span hundreds of decades
    resid = np.max(np.abs(M @ V - V * lam)) if np.all(np.isfinite(V)) else np.inf
    if np.linalg.cond(V) < EIG_COND_LIMIT and resid <= EIG_RESID_TOL * np.max(np.abs(M)):
        c = np.linalg.solve(V, p0)
        return (V @ (np.exp(lam * t) * c)).real
    return (expm(M * t) @ p0).real


def _lambda_populations(p0, t, d31, u31, d32, u32):
    """Lambda populations at time t.

    Probability conservation reduces the system to deviations (y1, y2) from
    the steady state pi, driven by the 2x2 matrix
    A = -[[a, d31], [d32, b]] with a = u31 + d31 and b = u32 + d32. Its
    eigenvalues are -(a + b + r)/2 and lam_s = -det / ((a + b + r)/2), where
    r^2 = (a - b)^2 + 4 d31 d32 and det = u31 u32 + u31 d32 + d31 u32, and
    exp(A t) = exp(lam_s t) (I + g (A - lam_s I)) with g = -expm1(-r t) / r.
    A - lam_s I = -[[h1, d31], [d32, h2]] with h1 + h2 = r and h1 h2 = d31 d32.
    Every quantity is a sum of non-negative terms, so the slow mode stays
    accurate however stiff the rates are. Returns None when det = 0.
    """
    det = u31 * u32 + u31 * d32 + d31 * u32
    if not det > 0:
        return None
    a, b = u31 + d31, u32 + d32
    r = math.sqrt((a - b) ** 2 + 4.0 * d31 * d32)
    # h1 = a + lam_s and h2 = b + lam_s; h1 h2 = d31 d32
    if a >= b:
        h1 = 0.5 * (a - b + r)
        h2 = d31 * d32 / h1 if h1 > 0 else 0.0
    else:
        h2 = 0.5 * (b - a + r)
        h1 = d31 * d32 / h2 if h2 > 0 else 0.0
    lam_s = -det / (0.5 * (a + b + r))
    if r > 0:
        # 1 - g h1 and 1 - g h2 rewritten with h1 + h2 = r
        q = math.exp(-r * t)
        g = -math.expm1(-r * t) / r
        c1, c2 = (h2 + h1 * q) / r, (h1 + h2 * q) / r
    else:
        g, c1, c2 = t, 1.0, 1.0
    pi = np.array([d31 * u32, u31 * d32, u31 * u32]) / det
    y1, y2 = p0[0] - pi[0], p0[1] - pi[1]
    e = math.exp(lam_s * t)
    z1 = e * (c1 * y1 - g * d31 * y2)
    z2 = e * (c2 * y2 - g * d32 * y1)
    return pi + np.array([z1, z2, -(z1 + z2)])


def _check_lambda(rates31, rates32):
    if not rates31.omega > rates32.omega:
        raise DegenerateScheme("Lambda scheme needs omega31 > omega32")


def three_level_evolve(rho0, t, rates31, rates32, deltas=None):
    """State at time ``t`` for a Lambda emitter.

    ``deltas`` = (Delta21, Delta31, Delta32) with Delta31 = Delta21 + Delta32;
    default is the bare splittings.
    """
    rho0 = _as_state(rho0, 3)
    _check_time(t)
    _check_lambda(rates31, rates32)
    if t == 0:
        return rho0
    if deltas is None:
        w31, w32 = rates31.omega, rates32.omega
        deltas = (w31 - w32, w31, w32)
    d21, d31_, d32_ = deltas
    # splittings of shifted levels always satisfy Delta31 = Delta21 + Delta32
    if abs(d31_ - d21 - d32_) > 1e-12 * max(abs(d21), abs(d31_), abs(d32_)):
        raise InvalidInput("deltas must satisfy Delta31 = Delta21 + Delta32")
    M = lambda_rate_matrix(rates31, rates32)
    g31d, g31u = rates31.gamma_down, rates31.gamma_up
    g32d, g32u = rates32.gamma_down, rates32.gamma_up
    if not np.all(np.isfinite(M)):
        raise DegenerateRateMatrix("rate matrix has non-finite entries")
    pops = _lambda_populations(rho0.populations, t, g31d, g31u, g32d, g32u)
    if pops is None:
        # no upward rate on either channel: the steady state is not unique
        pops = _propagate(M, rho0.populations, t)
    # M conserves probability exactly; remove rounding drift
    pops = np.clip(pops, 0.0, None)
    pops = pops / pops.sum()
    # per-level phases keep rho_ij ~ exp(i Delta_ij t) consistent when Delta t is huge
    level = np.exp(-1j * np.array([0.0, d21, d31_]) * t)
    decay = {
        (0, 1): 0.5 * (g31u + g32u),
        (0, 2): 0.5 * (g31d + g31u + g32d),
        (1, 2): 0.5 * (g32d + g32u + g31d),
    }
    upper = {
        (i, j): rho0[i, j] * level[i] * np.conj(level[j]) * math.exp(-k * t) for (i, j), k in decay.items()
    }
    return _hermitian_from_upper(pops, upper)


def three_level_steady(rates31, rates32):
    """Stationary Lambda state from the rate products, cross-checked against the n_eff form."""
    _check_lambda(rates31, rates32)
    if not (rates31.gamma_down > 0 and rates32.gamma_down > 0):
        raise ZeroTotalRate("both downward rates must be > 0")
    d31, u31 = rates31.gamma_down, rates31.gamma_up
    d32, u32 = rates32.gamma_down, rates32.gamma_up
    prod = np.array([d31 * u32, u31 * d32, u31 * u32])
    z = prod.sum()
    if z == 0:
        raise BothChannelsDark(
            "no upward rate on either transition: both lower levels are dark "
            "and the steady state depends on the initial condition"
        )
    pops = prod / z
    n31, n32 = rates31.n_eff, rates32.n_eff
    nform = np.array([n32 * (1 + n31), n31 * (1 + n32), n31 * n32])
    zn = nform.sum()
    if zn > 0 and np.max(np.abs(nform / zn - pops)) > 1e-12:
        raise InvalidInput("RateSets are inconsistent: Gamma(-w)/Gamma(w) != n_eff/(1+n_eff)")
    return DensityMatrix.from_populations(pops)


# --------------------------------------------------------------------------
# N-level


def _connected(n, edges):
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for u, lo in edges:
        parent[find(u)] = find(lo)
    return len({find(i) for i in range(n)}) == 1


def rate_matrix(scheme, rates):
    """Off-diagonal jump rates q[i, j] (i -> j) for every allowed transition."""
    n = scheme.dim
    q = np.zeros((n, n))
    for u, lo in scheme.transitions:
        try:
            r = rates[(u, lo)]
        except KeyError:
            raise InvalidInput(f"no RateSet supplied for transition {(u, lo)}") from None
        q[u, lo] += r.gamma_down
        q[lo, u] += r.gamma_up
    return q


def _gth(q):
    """Stationary vector of an irreducible jump-rate matrix by GTH state reduction."""
    n = q.shape[0]
    a = q.copy()
    for k in range(n - 1, 0, -1):
        out = a[k, :k].sum()
        if not out > 0:
            raise DegenerateRateMatrix(f"rates into level {k} underflow: steady state not resolvable")
        a[:k, k] /= out
        a[:k, :k] += np.outer(a[:k, k], a[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for j in range(1, n):
        pi[j] = pi[:j] @ a[:j, j]
    return pi / pi.sum()


def nlevel_steady(scheme, rates):
    """Population steady state of the classical master equation.

    ``rates`` maps each ``(upper, lower)`` transition of ``scheme`` to its
    :class:`RateSet`. Levels that cannot be re-entered (zero upward rate into
    them) are transient and end with zero population; the steady state is
    unique when exactly one closed class of levels remains. That class is
    solved with the subtraction-free GTH state reduction, which keeps tiny
    populations accurate.
    """
    n = scheme.dim
    if not _connected(n, scheme.transitions):
        raise DisconnectedLevels("the allowed transitions do not connect all levels")
    q = rate_matrix(scheme, rates)
    _, label = connected_components(q > 0, directed=True, connection="strong")
    closed = [c for c in np.unique(label)
              if not np.any(q[np.ix_(label == c, label != c)] > 0)]
    if len(closed) != 1:
        raise DegenerateRateMatrix(
            f"{len(closed)} closed classes of levels: steady state not unique"
        )
    keep = label == closed[0]
    pi = np.zeros(n)
    pi[keep] = _gth(q[np.ix_(keep, keep)]) if keep.sum() > 1 else 1.0
    return DensityMatrix.from_populations(pi)


# --------------------------------------------------------------------------
# state diagnostics


def purity(rho):
    """Tr(rho^2), between 1/dim and 1."""
    rho = _as_state(rho)
    return float(np.real(np.sum(rho.data * rho.data.T)))


def thermal_populations(scheme, T):
    """Gibbs populations exp(-hbar w_n / k_B T) / Z; T = 0 gives the ground state."""
    w = np.asarray(scheme.levels) - scheme.levels[0]
    if T <= 0:
        p = np.zeros(w.size)
        p[0] = 1.0
        return p
    p = np.exp(-HBAR * w / (K_B * T))
    return p / p.sum()


CLOSEST_T_RANGE = (0.1, 1e4)
# bracket width relative to T; far below 0.05 K because the L1 distance is
# V-shaped at the optimum and self-retrieval needs distances near 1e-8
CLOSEST_T_RTOL = 1e-10
_CLOSEST_SCAN = 400


def closest_thermal(rho, scheme):
    """Temperature of the Gibbs state nearest to a diagonal ``rho`` in trace norm.

    The trace norm of a difference of diagonal matrices is the L1 distance of
    their populations. A log-spaced scan over ``CLOSEST_T_RANGE`` brackets the
    global minimum, then golden-section search refines it to ``CLOSEST_T_RTOL``.
    Returns ``(T, distance)``.
    """
    rho = _as_state(rho, scheme.dim)
    if not rho.is_diagonal():
        raise NonDiagonalInput("closest_thermal needs a diagonal state")
    p = rho.populations

    def dist(T):
        return float(np.abs(p - thermal_populations(scheme, T)).sum())

    lo, hi = CLOSEST_T_RANGE
    grid = np.geomspace(lo, hi, _CLOSEST_SCAN)
    vals = np.array([dist(T) for T in grid])
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = dist(c), dist(d)
    while b - a > CLOSEST_T_RTOL * b:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = dist(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = dist(d)
    best = min((grid[k], vals[k]), (c, fc), (d, fd), key=lambda x: x[1])
    return float(best[0]), float(best[1])
