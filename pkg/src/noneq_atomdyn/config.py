"""Sweep configuration: YAML schema, validation and grid expansion.

A configuration is a mapping with the keys below (``schema_version: 1``)::

    schema_version: 1
    command: steady                   # used by the ``figure`` subcommand
    material: {model: gaas}           # gaas | gold | vacuum | mirror |
                                      # drude_lorentz | drude | tabulated
    scheme: {type: lambda,            # two_level (default) | lambda
             omega31: {values: [1.0], unit: omega_p},
             omega32: {values: [1.02], unit: omega_r}}
    omega: {log: [0.5, 2, 31], unit: omega_r}      # two-level only
    geometry:
      z: {log: [0.01, 100, 41], unit: um}
      delta: {values: [0.01, 2], unit: um}         # or semi_infinite: true
    temperatures: [{T_W: 300, T_M: 50}]
    dipole: {preset: isotropic, magnitude: 1.0e-29}
    times: {lin: [0, 1.0e-6, 11]}                  # dynamics only, seconds
    initial_state: ground             # ground | excited | mixed |
                                      # {populations: [...]} | {amplitudes: [...]}
    tolerances: {d_rtol: 1.0e-9}
    output: {path: out.csv, format: csv}
    jobs: 4

An axis is a list of numbers or a mapping holding exactly one of
``values``/``lin``/``log`` plus an optional ``unit``. Unknown keys anywhere
are errors.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .errors import AtomDynError, ConfigError
from .matprops import (
    GAAS,
    GOLD,
    GOLD_OMEGA_R,
    Drude,
    DrudeLorentz,
    PerfectMirror,
    Tabulated,
    Vacuum,
    surface_resonance,
)
from .quadrature import Tolerances
from .rates import DipoleSpec, ThermalEnv

SCHEMA_VERSION = 1
COMMANDS = ("rates", "steady", "dynamics", "sweep")
FORMATS = ("csv", "json")

_TOP_KEYS = {
    "schema_version", "command", "material", "scheme", "omega", "geometry",
    "temperatures", "dipole", "times", "initial_state", "tolerances", "output", "jobs",
}
_LENGTH_UNITS = {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12}
_NAMED_STATES = ("ground", "excited", "mixed")


def _fail(where, msg):
    raise ConfigError(f"{where}: {msg}")


def _check_keys(where, mapping, allowed, required=()):
    if not isinstance(mapping, dict):
        _fail(where, f"expected a mapping, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        _fail(where, f"unknown key(s) {', '.join(map(str, unknown))}")
    missing = [k for k in required if k not in mapping]
    if missing:
        _fail(where, f"missing key(s) {', '.join(missing)}")


def _number(where, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        _fail(where, f"expected a number, got {x!r}")
    if not np.isfinite(x):
        _fail(where, f"expected a finite number, got {x!r}")
    return float(x)


def _frequency_units(model):
    units = {"rad/s": 1.0, "omega_room": GOLD_OMEGA_R}
    if isinstance(model, DrudeLorentz):
        units["omega_r"] = model.omega_r
    if isinstance(model, (DrudeLorentz, Drude)):
        try:
            units["omega_p"] = surface_resonance(model)
        except AtomDynError:
            pass
    return units


def parse_axis(where, spec, units):
    """Expand an axis spec to a strictly increasing float array in SI units."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        spec = [spec]
    if isinstance(spec, list):
        spec = {"values": spec}
    _check_keys(where, spec, {"values", "lin", "log", "unit"})
    kinds = [k for k in ("values", "lin", "log") if k in spec]
    if len(kinds) != 1:
        _fail(where, "give exactly one of values, lin, log")
    kind = kinds[0]
    unit = spec.get("unit", next(iter(units)))
    if unit not in units:
        _fail(where, f"unknown unit {unit!r}; choose from {', '.join(units)}")
    body = spec[kind]
    if kind == "values":
        if not isinstance(body, list):
            _fail(where, "values must be a list")
        vals = np.array([_number(where, v) for v in body])
    else:
        if not (isinstance(body, list) and len(body) == 3):
            _fail(where, f"{kind} needs [start, stop, count]")
        start, stop = _number(where, body[0]), _number(where, body[1])
        n = body[2]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            _fail(where, "count must be a positive integer")
        if kind == "log":
            if start <= 0 or stop <= 0:
                _fail(where, "log axis bounds must be > 0")
            vals = np.geomspace(start, stop, n)
        else:
            vals = np.linspace(start, stop, n)
    if vals.size == 0:
        _fail(where, "axis is empty")
    if vals.size > 1 and not np.all(np.diff(vals) > 0):
        _fail(where, "axis must be strictly increasing")
    return vals * units[unit]


def _material(spec):
    where = "material"
    if isinstance(spec, str):
        spec = {"model": spec}
    _check_keys(where, spec, {"model", "eps_inf", "omega_l", "omega_r", "gamma", "omega_pl", "file"},
                required=("model",))
    name = spec["model"]
    params = {k: v for k, v in spec.items() if k != "model"}

    def only(*keys):
        extra = sorted(set(params) - set(keys))
        if extra:
            _fail(where, f"model {name!r} does not take {', '.join(extra)}")
        missing = [k for k in keys if k not in params]
        if missing:
            _fail(where, f"model {name!r} needs {', '.join(missing)}")
        return {k: _number(f"{where}.{k}", params[k]) for k in keys}

    if name == "gaas":
        only()
        return GAAS
    if name == "gold":
        only()
        return GOLD
    if name == "vacuum":
        only()
        return Vacuum()
    if name == "mirror":
        only()
        return PerfectMirror()
    if name == "drude_lorentz":
        return DrudeLorentz(**only("eps_inf", "omega_l", "omega_r", "gamma"))
    if name == "drude":
        return Drude(**only("omega_pl", "gamma"))
    if name == "tabulated":
        if set(params) != {"file"}:
            _fail(where, "tabulated model takes exactly one key: file")
        try:
            return Tabulated.from_file(params["file"])
        except (OSError, AtomDynError) as exc:
            _fail(where, str(exc))
    _fail(where, f"unknown model {name!r}")


def _dipole(spec):
    where = "dipole"
    if spec is None:
        return DipoleSpec.isotropic()
    if isinstance(spec, str):
        spec = {"preset": spec}
    _check_keys(where, spec, {"preset", "dtilde", "magnitude"})
    if ("preset" in spec) == ("dtilde" in spec):
        _fail(where, "give exactly one of preset, dtilde")
    mag = _number(f"{where}.magnitude", spec.get("magnitude", 1e-29))
    try:
        if "preset" in spec:
            return DipoleSpec.preset(spec["preset"], mag)
        if not isinstance(spec["dtilde"], list):
            _fail(where, "dtilde must be a list of three weights")
        return DipoleSpec(mag, tuple(_number(f"{where}.dtilde", x) for x in spec["dtilde"]))
    except AtomDynError as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(where, str(exc))


def _temperatures(spec):
    where = "temperatures"
    if not isinstance(spec, list) or not spec:
        _fail(where, "need a non-empty list of {T_W, T_M} pairs")
    out = []
    for i, item in enumerate(spec):
        _check_keys(f"{where}[{i}]", item, {"T_W", "T_M"}, required=("T_W", "T_M"))
        try:
            out.append(ThermalEnv(T_M=_number(where, item["T_M"]), T_W=_number(where, item["T_W"])))
        except AtomDynError as exc:
            if isinstance(exc, ConfigError):
                raise
            _fail(f"{where}[{i}]", str(exc))
    return tuple(out)


def _tolerances(spec):
    if spec is None:
        return None
    fields = {"b_rtol", "c_rtol", "c_atol", "d_rtol", "d_atol", "max_panels"}
    _check_keys("tolerances", spec, fields)
    kw = {}
    for k, v in spec.items():
        if k == "max_panels":
            if isinstance(v, bool) or not isinstance(v, int):
                _fail("tolerances.max_panels", "must be an integer")
            kw[k] = v
        else:
            kw[k] = _number(f"tolerances.{k}", v)
    try:
        return Tolerances(**kw)
    except AtomDynError as exc:
        _fail("tolerances", str(exc))


def _initial_state(spec, dim):
    where = "initial_state"
    if spec is None:
        spec = "ground"
    if isinstance(spec, str):
        if spec not in _NAMED_STATES:
            _fail(where, f"unknown state {spec!r}; choose from {', '.join(_NAMED_STATES)}")
        return spec
    _check_keys(where, spec, {"populations", "amplitudes"})
    if len(spec) != 1:
        _fail(where, "give exactly one of populations, amplitudes")
    key, vals = next(iter(spec.items()))
    if not isinstance(vals, list) or len(vals) != dim:
        _fail(where, f"{key} needs {dim} entries")
    return (key, tuple(_number(where, v) for v in vals))


@dataclass(frozen=True)
class Plan:
    """Fully validated sweep, ready to expand into grid points."""

    command: str
    model: object
    scheme: str
    omegas: tuple  # two-level: (omega,) tuples; lambda: (omega31, omega32) tuples
    z: tuple
    delta: tuple
    semi_infinite: bool
    temperatures: tuple
    dipole: DipoleSpec
    tol: Tolerances | None
    times: tuple
    initial_state: object
    output_path: str | None
    output_format: str
    jobs: int | None
    echo: dict

    @property
    def dim(self):
        return 2 if self.scheme == "two_level" else 3

    def points(self):
        """Geometric grid points ``(index, omegas, z, delta)`` in row-major order."""
        grid = itertools.product(self.omegas, self.z, self.delta)
        return [(i, w, z, d) for i, (w, z, d) in enumerate(grid)]


def build_plan(raw, command=None):
    """Validate a raw config mapping and return a :class:`Plan`."""
    if not isinstance(raw, dict):
        _fail("config", "top level must be a mapping")
    _check_keys("config", raw, _TOP_KEYS, required=("schema_version", "material", "geometry",
                                                    "temperatures"))
    if raw["schema_version"] != SCHEMA_VERSION:
        _fail("schema_version", f"unsupported version {raw['schema_version']!r}; expected {SCHEMA_VERSION}")
    cmd = command or raw.get("command")
    if cmd not in COMMANDS:
        _fail("command", f"expected one of {', '.join(COMMANDS)}, got {cmd!r}")
    model = _material(raw["material"])
    funits = _frequency_units(model)

    scheme_spec = raw.get("scheme", {"type": "two_level"})
    _check_keys("scheme", scheme_spec, {"type", "omega31", "omega32"}, required=("type",))
    kind = scheme_spec["type"]
    if kind == "two_level":
        if set(scheme_spec) - {"type"}:
            _fail("scheme", "two_level takes its frequencies from the omega axis")
        if "omega" not in raw:
            _fail("omega", "two-level sweeps need an omega axis")
        omegas = tuple((float(w),) for w in parse_axis("omega", raw["omega"], funits))
        if omegas[0][0] <= 0:
            _fail("omega", "frequencies must be > 0")
    elif kind == "lambda":
        if "omega" in raw:
            _fail("omega", "lambda sweeps take omega31/omega32 inside scheme")
        for k in ("omega31", "omega32"):
            if k not in scheme_spec:
                _fail("scheme", f"lambda scheme needs {k}")
        w31 = parse_axis("scheme.omega31", scheme_spec["omega31"], funits)
        w32 = parse_axis("scheme.omega32", scheme_spec["omega32"], funits)
        omegas = tuple((float(a), float(b)) for a, b in itertools.product(w31, w32))
        if any(not a > b > 0 for a, b in omegas):
            _fail("scheme", "every grid point needs omega31 > omega32 > 0")
    else:
        _fail("scheme.type", f"unknown scheme {kind!r}; choose two_level or lambda")

    geo = raw["geometry"]
    _check_keys("geometry", geo, {"z", "delta", "semi_infinite"}, required=("z",))
    z = parse_axis("geometry.z", geo["z"], _LENGTH_UNITS)
    if z[0] <= 0:
        _fail("geometry.z", "distances must be > 0")
    semi = geo.get("semi_infinite", False)
    if not isinstance(semi, bool):
        _fail("geometry.semi_infinite", "must be true or false")
    if semi:
        if "delta" in geo:
            _fail("geometry", "give either delta or semi_infinite: true")
        delta = (float("inf"),)
    else:
        if "delta" not in geo:
            _fail("geometry", "need delta or semi_infinite: true")
        delta = parse_axis("geometry.delta", geo["delta"], _LENGTH_UNITS)
        if delta[0] < 0:
            _fail("geometry.delta", "thickness must be >= 0")
        delta = tuple(float(d) for d in delta)

    times = ()
    if cmd == "dynamics":
        if "times" not in raw:
            _fail("times", "dynamics needs a times axis")
        t = parse_axis("times", raw["times"], _TIME_UNITS)
        if t[0] < 0:
            _fail("times", "times must be >= 0")
        times = tuple(float(x) for x in t)
    elif "times" in raw or "initial_state" in raw:
        _fail("config", "times and initial_state only apply to dynamics")
    dim = 2 if kind == "two_level" else 3
    init = _initial_state(raw.get("initial_state"), dim) if cmd == "dynamics" else None

    out = raw.get("output", {})
    _check_keys("output", out, {"path", "format"})
    fmt = out.get("format", "csv")
    if fmt not in FORMATS:
        _fail("output.format", f"expected csv or json, got {fmt!r}")
    jobs = raw.get("jobs")
    if jobs is not None and (isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1):
        _fail("jobs", "must be a positive integer")

    echo = {k: copy.deepcopy(v) for k, v in raw.items() if k not in ("output", "jobs")}
    echo["command"] = cmd
    return Plan(
        command=cmd,
        model=model,
        scheme=kind,
        omegas=omegas,
        z=tuple(float(x) for x in z),
        delta=delta,
        semi_infinite=semi,
        temperatures=_temperatures(raw["temperatures"]),
        dipole=_dipole(raw.get("dipole")),
        tol=_tolerances(raw.get("tolerances")),
        times=times,
        initial_state=init,
        output_path=out.get("path"),
        output_format=fmt,
        jobs=jobs,
        echo=echo,
    )


def load_yaml(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None


def preset_names():
    root = resources.files("noneq_atomdyn") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name):
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = (resources.files("noneq_atomdyn") / "presets" / f"{name}.yaml").read_text()
    return yaml.safe_load(text)
