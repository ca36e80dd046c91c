"""Dielectric permittivity models for the slab material.

Models are frozen dataclasses; :func:`permittivity` dispatches on the model
type and accepts scalar or array frequencies (rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    InvalidInput,
    MirrorHasNoFinitePermittivity,
    NoSurfaceResonance,
    TabulatedOutOfRange,
    TabulatedParseError,
)


@dataclass(frozen=True)
class Vacuum:
    """No body at all: eps = 1 exactly."""


@dataclass(frozen=True)
class PerfectMirror:
    """Ideal conductor. Has no finite permittivity; slab_optics special-cases it."""


@dataclass(frozen=True)
class DrudeLorentz:
    """eps(w) = eps_inf (w^2 - w_l^2 + i g w) / (w^2 - w_r^2 + i g w)."""

    eps_inf: float
    omega_l: float
    omega_r: float
    gamma: float

    def max_frequency(self):
        return max(self.omega_l, self.omega_r, self.gamma)


@dataclass(frozen=True)
class Drude:
    """eps(w) = 1 - w_pl^2 / (w^2 + i g w)."""

    omega_pl: float
    gamma: float

    def max_frequency(self):
        return max(self.omega_pl, self.gamma)


@dataclass(frozen=True)
class Tabulated:
    """Sampled eps(w), linearly interpolated in real and imaginary parts.

    Queries outside ``[omega[0], omega[-1]]`` raise :class:`TabulatedOutOfRange`.
    """

    omega: tuple
    eps: tuple
    source: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise InvalidInput("tabulated model needs at least two samples")
        if len(self.eps) != w.size:
            raise InvalidInput("omega and eps sample counts differ")
        if not np.all(np.diff(w) > 0):
            raise InvalidInput("tabulated frequencies must be strictly increasing")
        if w[0] <= 0:
            raise InvalidInput("tabulated frequencies must be positive")

    @classmethod
    def from_file(cls, path):
        """Load ``omega_rad_per_s, eps_real[, eps_imag]`` rows; ``#`` starts a comment."""
        path = Path(path)
        omegas, values = [], []
        for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p for p in line.replace(",", " ").split()]
            if len(parts) not in (2, 3):
                raise TabulatedParseError(
                    f"{path}:{lineno}: expected 2 or 3 columns, got {len(parts)}"
                )
            try:
                nums = [float(p) for p in parts]
            except ValueError as exc:
                raise TabulatedParseError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(nums)):
                raise TabulatedParseError(f"{path}:{lineno}: non-finite value")
            omegas.append(nums[0])
            values.append(complex(nums[1], nums[2] if len(nums) == 3 else 0.0))
        try:
            return cls(tuple(omegas), tuple(values), source=str(path))
        except InvalidInput as exc:
            raise TabulatedParseError(f"{path}: {exc}") from None

    def max_frequency(self):
        return self.omega[-1]


PermittivityModel = Vacuum | PerfectMirror | DrudeLorentz | Drude | Tabulated

# Parameter sets used throughout the numerical examples.
GAAS = DrudeLorentz(eps_inf=11.0, omega_l=0.550e14, omega_r=0.506e14, gamma=0.00452e14)
GOLD = Drude(omega_pl=137.2e14, gamma=0.4059e14)
GAAS_OMEGA_R = GAAS.omega_r
# frequency whose photon energy equals k_B * 300 K, as quoted for gold
GOLD_OMEGA_R = 0.392e14


def permittivity(model, omega):
    """Complex permittivity of ``model`` at angular frequency ``omega`` (rad/s)."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise InvalidInput("omega must be > 0")
    if isinstance(model, Vacuum):
        out = np.ones_like(w, dtype=complex)
    elif isinstance(model, PerfectMirror):
        raise MirrorHasNoFinitePermittivity(
            "a perfect mirror is handled by its exact reflection coefficients"
        )
    elif isinstance(model, DrudeLorentz):
        iw = 1j * model.gamma * w
        out = model.eps_inf * (w**2 - model.omega_l**2 + iw) / (w**2 - model.omega_r**2 + iw)
    elif isinstance(model, Drude):
        out = 1.0 - model.omega_pl**2 / (w**2 + 1j * w * model.gamma)
    elif isinstance(model, Tabulated):
        grid = np.asarray(model.omega)
        if np.any(w < grid[0]) or np.any(w > grid[-1]):
            raise TabulatedOutOfRange(
                f"omega outside tabulated range [{grid[0]:.6g}, {grid[-1]:.6g}]"
            )
        samples = np.asarray(model.eps, dtype=complex)
        out = np.interp(w, grid, samples.real) + 1j * np.interp(w, grid, samples.imag)
    else:
        raise InvalidInput(f"unknown permittivity model {model!r}")
    return complex(out) if out.ndim == 0 else out


def surface_resonance(model, rtol=1e-12):
    """Surface-mode frequency: root of Re eps(w) = -1 where Re eps is increasing.

    A Lorentz oscillator crosses -1 twice (steeply downward just above the
    transverse resonance, then upward towards the longitudinal one); only the
    upward crossing supports a surface mode. If several upward crossings exist
    the highest-frequency one is returned.
    """
    if not isinstance(model, (DrudeLorentz, Drude)):
        raise InvalidInput("surface_resonance needs a Drude or Drude-Lorentz model")
    top = 10.0 * model.max_frequency()
    grid = np.geomspace(top * 1e-6, top, 20001)

    def g(w):
        return np.real(permittivity(model, w)) + 1.0

    vals = g(grid)
    ups = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    if ups.size == 0:
        raise NoSurfaceResonance(f"Re eps never crosses -1 upward below {top:.3e} rad/s")
    lo, hi = grid[ups[-1]], grid[ups[-1] + 1]
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
