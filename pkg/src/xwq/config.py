"""JSON run configuration: parsing, strict validation, defaults and unit conversion.

Physical configurations (``"units": "physical"``, the default) give every
dimensional value in SI; they are converted on load to natural units fixed by
(Delta, omega2, hbar).  ``"units": "natural"`` takes values as given.
Momentum-band entries (``mode.p``, ``mode.p_band``) are always natural.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import XWQError
from .grids import is_power_of_two
from .units import MediumParams, UnitSystem, physical_medium

PIPELINES = ("basis", "kernel", "propagate", "squeeze")


class ConfigParseError(XWQError):
    """The file could not be read or is not valid JSON (exit code 2)."""


class ConfigValidationError(XWQError):
    """One or more configuration values are invalid (exit code 3)."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


# key -> (kind, default); kind is a unit dimension name, or a plain type tag.
SCHEMA = {
    "medium": {
        "omega0": ("frequency", None),
        "n": ("dimensionless", 1.0),
        "omega1": ("velocity", None),
        "omega2": ("diffusivity", None),
        "chi": ("kerr", 0.0),
        "k": ("wavenumber", None),
    },
    "mode": {
        "q": ("int", 0),
        "delta": ("length", None),
        "p": ("natural", 0.0),
        "q_max": ("int", 4),
        "p_band": ("band", [-4.0, 4.0]),
    },
    "grid": {
        "nz": ("int", 256),
        "z_extent": ("length", None),
        "nr": ("int", 128),
        "r_extent": ("length", None),
        "radial": ("str", "bessel"),
    },
    "pulse": {
        "width": ("length", None),
        "photon_number": ("dimensionless", 1.0e10),
        "nz": ("int", 128),
        "extent": ("length", None),
    },
    "solver": {
        "dt": ("time", None),
        "T": ("time", None),
        "save_every": ("int", 0),
    },
    "device": {
        "mz": ("bool", True),
        "lo": ("str", "matched"),
        "n_theta": ("int", 64),
        "sigma": ("str", "profile"),
        "arm_mismatch": ("dimensionless", 0.0),
    },
    "kernel": {
        "indices": ("indices", [[0, 0, 0, 0]]),
        "vertex": ("bool", False),
    },
    "sweep": {
        "parameter": ("str", None),
        "values": ("list", None),
        "pipeline": ("str", "squeeze"),
    },
    "output": {
        "green": ("bool", False),
    },
}
TOP_LEVEL = {"units", "medium", "mode", "grid", "pulse", "solver", "device", "kernel", "sweep", "output"}

# Natural-unit defaults for values that depend on other settings.
NATURAL_DEFAULTS = {
    ("mode", "delta"): 1.0,
    ("grid", "z_extent"): 20.0,
    ("pulse", "width"): 4.0,
    ("solver", "dt"): 0.01,
    ("solver", "T"): 1.0,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; every numeric entry of ``sections`` is in natural units."""

    medium: MediumParams
    units: UnitSystem | None
    sections: dict
    raw: dict

    def section(self, name) -> dict:
        return self.sections[name]

    def echo(self) -> dict:
        """Resolved configuration (defaults filled, natural units)."""
        m = self.medium
        return {
            "units": "natural",
            "source_units": "physical" if self.units else "natural",
            "medium": {"omega0": m.omega0, "n": m.n, "k": m.k, "omega1": m.omega1, "omega2": m.omega2, "chi": m.chi, "hbar": m.hbar},
            **{k: v for k, v in self.sections.items() if k != "medium"},
        }

    def hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_config_text(text: str, source: str = "<string>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigParseError(f"{source}: top level must be a JSON object")
    return data


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_value(path, kind, v, errs):
    if kind == "int":
        if not (isinstance(v, int) and not isinstance(v, bool)):
            errs.append(f"{path}: expected an integer, got {v!r}")
    elif kind == "bool":
        if not isinstance(v, bool):
            errs.append(f"{path}: expected true/false, got {v!r}")
    elif kind == "str":
        if not isinstance(v, str):
            errs.append(f"{path}: expected a string, got {v!r}")
    elif kind == "list":
        if not isinstance(v, list):
            errs.append(f"{path}: expected a list, got {v!r}")
    elif kind == "band":
        if not (isinstance(v, list) and len(v) == 2 and all(_is_number(x) for x in v) and v[0] < v[1]):
            errs.append(f"{path}: expected [low, high] with low < high, got {v!r}")
    elif kind == "indices":
        ok = isinstance(v, list) and v and all(
            isinstance(t, list) and len(t) == 4 and all(isinstance(i, int) and not isinstance(i, bool) and i >= 0 for i in t) for t in v)
        if not ok:
            errs.append(f"{path}: expected a non-empty list of four non-negative integers each")
    else:
        if not _is_number(v):
            errs.append(f"{path}: expected a finite number, got {v!r}")


def validate(data: dict) -> RunConfig:
    """Validate a parsed configuration, reporting every violation at once."""
    errs = []
    for key in data:
        if key not in TOP_LEVEL:
            errs.append(f"{key}: unknown top-level key")
    units_kind = data.get("units", "physical")
    if units_kind not in ("physical", "natural"):
        errs.append(f"units: must be 'physical' or 'natural', got {units_kind!r}")
    if "medium" not in data:
        errs.append("medium: section is required")
    sections = {}
    for name, spec in SCHEMA.items():
        given = data.get(name, {})
        if not isinstance(given, dict):
            errs.append(f"{name}: must be an object")
            given = {}
        for key in given:
            if key not in spec:
                errs.append(f"{name}.{key}: unknown key")
        sec = {}
        for key, (kind, default) in spec.items():
            if key in given:
                _check_value(f"{name}.{key}", kind, given[key], errs)
                sec[key] = copy.deepcopy(given[key])
            else:
                sec[key] = copy.deepcopy(default)
        sections[name] = sec
    med = sections["medium"]
    for key in ("omega0", "omega1", "omega2"):
        if med[key] is None:
            errs.append(f"medium.{key}: required")
    for key in ("omega0", "omega1", "omega2", "k"):
        if _is_number(med[key]) and med[key] <= 0:
            errs.append(f"medium.{key}: must be > 0")
    if _is_number(med["n"]) and med["n"] < 1:
        errs.append("medium.n: must be >= 1")
    if units_kind == "natural" and med["k"] is None:
        errs.append("medium.k: required in natural units")
    g = sections["grid"]
    for key in ("nz", "nr"):
        if isinstance(g[key], int) and not is_power_of_two(g[key]):
            errs.append(f"grid.{key}: must be a power of two")
    if isinstance(sections["pulse"]["nz"], int) and not is_power_of_two(sections["pulse"]["nz"]):
        errs.append("pulse.nz: must be a power of two")
    if g["radial"] not in ("bessel", "legendre"):
        errs.append("grid.radial: must be 'bessel' or 'legendre'")
    if g["radial"] == "legendre" and isinstance(g["nr"], int) and g["nr"] % 8:
        errs.append("grid.nr: must be a multiple of 8 for legendre panels")
    for name, key in (("grid", "z_extent"), ("grid", "r_extent"), ("pulse", "width"), ("pulse", "extent"),
                      ("solver", "dt"), ("mode", "delta"), ("pulse", "photon_number")):
        v = sections[name][key]
        if v is not None and _is_number(v) and v <= 0:
            errs.append(f"{name}.{key}: must be > 0")
    s = sections["solver"]
    if _is_number(s["T"]) and s["T"] < 0:
        errs.append("solver.T: must be >= 0")
    if isinstance(s["save_every"], int) and s["save_every"] < 0:
        errs.append("solver.save_every: must be >= 0")
    mode = sections["mode"]
    for key in ("q", "q_max"):
        if isinstance(mode[key], int) and mode[key] < 0:
            errs.append(f"mode.{key}: must be >= 0")
    if isinstance(mode["q_max"], int) and mode["q_max"] > 8:
        errs.append("mode.q_max: must be <= 8")
    dev = sections["device"]
    if dev["lo"] not in ("matched",):
        errs.append("device.lo: only 'matched' is supported")
    if dev["sigma"] not in ("profile", "constant"):
        errs.append("device.sigma: must be 'profile' or 'constant'")
    if isinstance(dev["n_theta"], int) and dev["n_theta"] < 2:
        errs.append("device.n_theta: must be >= 2")
    sw = sections["sweep"]
    if "sweep" in data:
        if sw["parameter"] is None:
            errs.append("sweep.parameter: required")
        elif isinstance(sw["parameter"], str):
            parts = sw["parameter"].split(".")
            if len(parts) != 2 or parts[0] not in SCHEMA or parts[0] == "sweep" or parts[1] not in SCHEMA.get(parts[0], {}):
                errs.append(f"sweep.parameter: unknown parameter {sw['parameter']!r}")
        if not sw["values"]:
            errs.append("sweep.values: must be a non-empty list")
        if sw["pipeline"] not in PIPELINES:
            errs.append(f"sweep.pipeline: must be one of {', '.join(PIPELINES)}")
    if errs:
        raise ConfigValidationError(errs)

    try:
        if units_kind == "physical":
            medium_si = physical_medium(med["omega0"], med["n"], med["omega1"], med["omega2"], med["chi"], med["k"])
            delta_si = mode["delta"] if mode["delta"] is not None else 1.0e-5
            units = UnitSystem(delta_si, medium_si.omega2)
            medium = units.medium_to_natural(medium_si)
        else:
            units = None
            medium = MediumParams(med["omega0"], med["n"], med["k"], med["omega1"], med["omega2"], med["chi"], 1.0)
    except XWQError as exc:
        raise ConfigValidationError([str(exc)]) from exc

    conv = {}
    for name, spec in SCHEMA.items():
        if name in ("medium", "sweep"):
            conv[name] = sections[name]
            continue
        sec = {}
        for key, (kind, _d) in spec.items():
            v = sections[name][key]
            if units is not None and v is not None and _is_number(v) and kind not in ("int", "natural", "dimensionless", "band"):
                v = units.to_natural(v, kind)
            sec[key] = v
        conv[name] = sec
    if units is not None:
        conv["mode"]["delta"] = 1.0
    for (name, key), default in NATURAL_DEFAULTS.items():
        if conv[name][key] is None:
            conv[name][key] = default * (conv["mode"]["delta"] if key in ("z_extent", "width") else 1.0)
    if conv["grid"]["r_extent"] is None:
        conv["grid"]["r_extent"] = conv["grid"]["z_extent"] / medium.beta
    if conv["pulse"]["extent"] is None:
        conv["pulse"]["extent"] = 8.0 * conv["pulse"]["width"]
    return RunConfig(medium, units, conv, copy.deepcopy(data))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"{path}: {exc.strerror or exc}") from exc
    return validate(parse_config_text(text, str(path)))


def override(data: dict, dotted: str, value) -> dict:
    """Copy of ``data`` with ``section.key`` set to ``value`` (used by sweeps)."""
    out = copy.deepcopy(data)
    out.pop("sweep", None)
    section, key = dotted.split(".")
    out.setdefault(section, {})[key] = value
    return out
