"""Experiment configuration: strict INI files with documented keys.

Every key is optional; omitted keys take the reference-setup defaults.
Unknown sections or keys are rejected so a misspelt parameter cannot pass
silently.  Lengths are metres, powers watts.

Layout::

    [geometry]   tx_f tx_l tx_r rx_f rx_l rx_r gain_radius reflectivity
                 x0 y0 z0 dx dy dz wavelength
    [grid]       n window
    [foxli]      max_iterations tolerance stability_window seed_kind
                 perturbation seed method
    [power]      p_in i_s v_s g0_lg eta_b eta_pv v_split
    [safety]     output_power cavity_length light_speed beam_area mpe
    [sweep]      axis start stop steps point
    [output]     directory emit_plots

``g0_lg`` accepts a number or a preset name (``calibrated``, ``eta_g``).
``v_split`` is ``symmetric`` or four comma-separated factors.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import os
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from .errors import ConfigError
from .field import GridSpec
from .foxli import FoxLiConfig
from .power import GAIN_PRESETS, PowerModelParams, SafetyParams
from .rays import FtcrGeometry
from .wave import CavityGeometry

__all__ = ["SweepSpec", "OutputSpec", "ExperimentConfig", "load_config", "loads_config", "dump_config", "write_config"]

OUTPUT_ENV = "RBCSIM_OUTPUT_DIR"
AXES = ("x", "y", "z")


@dataclass(frozen=True)
class SweepSpec:
    """Displacement sweep along one axis.

    In point mode only ``start`` is used and a single record is produced.
    """

    axis: str = "x"
    start: float = -0.20
    stop: float = 0.20
    steps: int = 21
    point: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}, got {self.axis!r}")
        if self.point:
            return
        if self.steps < 2:
            raise ConfigError(f"sweep steps must be >= 2, got {self.steps}")
        if not self.start < self.stop:
            raise ConfigError(f"sweep start ({self.start}) must be below stop ({self.stop})")

    def displacements(self) -> List[float]:
        if self.point:
            return [float(self.start)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclass(frozen=True)
class OutputSpec:
    directory: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, "results"))
    emit_plots: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: CavityGeometry = CavityGeometry()
    grid: GridSpec = GridSpec()
    foxli: FoxLiConfig = FoxLiConfig()
    power: PowerModelParams = PowerModelParams()
    safety: SafetyParams = SafetyParams()
    sweep: SweepSpec = SweepSpec()
    output: OutputSpec = field(default_factory=OutputSpec)

    def power_params(self) -> PowerModelParams:
        """Power parameters with reflectivity and gain radius taken from the geometry."""
        g = self.geometry
        return replace(self.power, reflectivity=g.reflectivity, gain_radius=g.gain_radius)

    def digest(self) -> str:
        """SHA-256 of the canonical serialisation."""
        return hashlib.sha256(dump_config(self).encode()).hexdigest()


# -- value codecs -------------------------------------------------------------


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_g0(text: str) -> float:
    t = text.strip()
    if t in GAIN_PRESETS:
        return GAIN_PRESETS[t]
    return float(t)


def _parse_split(text: str):
    t = text.strip()
    if t == "symmetric":
        return t
    parts = [p for p in t.split(",") if p.strip()]
    return tuple(float(p) for p in parts)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


# Each key: (parser, getter from ExperimentConfig).
Key = Tuple[Callable[[str], Any], Callable[[ExperimentConfig], Any]]

SCHEMA: Dict[str, Dict[str, Key]] = {
    "geometry": {
        "tx_f": (float, lambda c: c.geometry.tx.f),
        "tx_l": (float, lambda c: c.geometry.tx.l),
        "tx_r": (float, lambda c: c.geometry.tx.r),
        "rx_f": (float, lambda c: c.geometry.rx.f),
        "rx_l": (float, lambda c: c.geometry.rx.l),
        "rx_r": (float, lambda c: c.geometry.rx.r),
        "gain_radius": (float, lambda c: c.geometry.gain_radius),
        "reflectivity": (float, lambda c: c.geometry.reflectivity),
        "x0": (float, lambda c: c.geometry.initial_position[0]),
        "y0": (float, lambda c: c.geometry.initial_position[1]),
        "z0": (float, lambda c: c.geometry.initial_position[2]),
        "dx": (float, lambda c: c.geometry.displacement[0]),
        "dy": (float, lambda c: c.geometry.displacement[1]),
        "dz": (float, lambda c: c.geometry.displacement[2]),
        "wavelength": (float, lambda c: c.geometry.wavelength),
    },
    "grid": {
        "n": (int, lambda c: c.grid.n),
        "window": (float, lambda c: c.grid.window),
    },
    "foxli": {
        "max_iterations": (int, lambda c: c.foxli.max_iterations),
        "tolerance": (float, lambda c: c.foxli.tolerance),
        "stability_window": (int, lambda c: c.foxli.stability_window),
        "seed_kind": (str.strip, lambda c: c.foxli.seed_kind),
        "perturbation": (float, lambda c: c.foxli.perturbation),
        "seed": (int, lambda c: c.foxli.seed),
        "method": (str.strip, lambda c: c.foxli.method),
    },
    "power": {
        "p_in": (float, lambda c: c.power.p_in),
        "i_s": (float, lambda c: c.power.i_s),
        "v_s": (float, lambda c: c.power.v_s),
        "g0_lg": (_parse_g0, lambda c: c.power.g0_lg),
        "eta_b": (float, lambda c: c.power.eta_b),
        "eta_pv": (float, lambda c: c.power.eta_pv),
        "v_split": (_parse_split, lambda c: c.power.v_split),
    },
    "safety": {
        "output_power": (float, lambda c: c.safety.output_power),
        "cavity_length": (float, lambda c: c.safety.cavity_length),
        "light_speed": (float, lambda c: c.safety.light_speed),
        "beam_area": (float, lambda c: c.safety.beam_area),
        "mpe": (float, lambda c: c.safety.mpe),
    },
    "sweep": {
        "axis": (str.strip, lambda c: c.sweep.axis),
        "start": (float, lambda c: c.sweep.start),
        "stop": (float, lambda c: c.sweep.stop),
        "steps": (int, lambda c: c.sweep.steps),
        "point": (_parse_bool, lambda c: c.sweep.point),
    },
    "output": {
        "directory": (str.strip, lambda c: c.output.directory),
        "emit_plots": (_parse_bool, lambda c: c.output.emit_plots),
    },
}


def _build(section: str, ctor: Callable[..., Any], **kwargs):
    try:
        return ctor(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[{section}] {exc}") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def _from_values(v: Dict[str, Dict[str, Any]]) -> ExperimentConfig:
    g = v["geometry"]
    tx = _build("geometry", FtcrGeometry, f=g["tx_f"], l=g["tx_l"], r=g["tx_r"])
    rx = _build("geometry", FtcrGeometry, f=g["rx_f"], l=g["rx_l"], r=g["rx_r"])
    geometry = _build(
        "geometry",
        CavityGeometry,
        tx=tx,
        rx=rx,
        gain_radius=g["gain_radius"],
        reflectivity=g["reflectivity"],
        initial_position=(g["x0"], g["y0"], g["z0"]),
        displacement=(g["dx"], g["dy"], g["dz"]),
        wavelength=g["wavelength"],
    )
    grid = _build("grid", GridSpec, **v["grid"])
    foxli = _build("foxli", FoxLiConfig, **v["foxli"])
    power = _build(
        "power",
        PowerModelParams,
        reflectivity=geometry.reflectivity,
        gain_radius=geometry.gain_radius,
        **v["power"],
    )
    safety = _build("safety", SafetyParams, reflectivity=geometry.reflectivity, **v["safety"])
    sweep = _build("sweep", SweepSpec, **v["sweep"])
    output = _build("output", OutputSpec, **v["output"])
    return ExperimentConfig(geometry, grid, foxli, power, safety, sweep, output)


def _defaults() -> Dict[str, Dict[str, Any]]:
    base = ExperimentConfig()
    return {s: {k: get(base) for k, (_, get) in keys.items()} for s, keys in SCHEMA.items()}


def loads_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse configuration text; see the module docstring for the key list."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",), default_section="__unused__")
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: cannot parse config: {exc}") from exc
    values = _defaults()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            parse, _ = SCHEMA[section][key]
            try:
                values[section][key] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key} = {raw!r}: {exc}") from exc
    return _from_values(values)


def load_config(path) -> ExperimentConfig:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text, source=path)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical text form: every key, fixed order, ``repr`` floats."""
    out = io.StringIO()
    for i, (section, keys) in enumerate(SCHEMA.items()):
        if i:
            out.write("\n")
        out.write(f"[{section}]\n")
        for key, (_, get) in keys.items():
            out.write(f"{key} = {_fmt(get(cfg))}\n")
    return out.getvalue()


def write_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_config(cfg))


def config_fields() -> Dict[str, List[str]]:
    """Documented keys per section, in canonical order."""
    return {s: list(keys) for s, keys in SCHEMA.items()}

