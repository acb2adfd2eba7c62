"""Run configuration: sectioned key=value files, validation, canonical hash.

Pulse parameters are accepted in experimental units (eV, attoseconds,
W/cm^2) and converted to atomic units on load.  An empty file yields the
full paper-default run.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import units
from .initial_states import (ESCAPE_DEPTH_AL, FERMI_MOMENTUM_AL,
                             INTERLAYER_SPACING_AL, YUKAWA_SCREENING_AL)
from .pulses import IrPulse, Screening, XuvPulse


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PulseConfig:
    xuv_energy_ev: float = 118.0
    xuv_duration_as: float = 432.0
    ir_photon_ev: float = 1.5
    ir_duration_au: float = 200.0
    ir_intensity_wcm2: float = 1e12
    screening: str = "screened"


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 549
    half_width: float = 0.5


@dataclass(frozen=True)
class PropagationConfig:
    t_min: float = -600.0
    t_max: float = 600.0
    delta_as: float = 6.0
    midpoint_hamiltonian: bool = False
    solver: str = "auto"


@dataclass(frozen=True)
class BandConfig:
    work_function_ev: float = 4.0
    fermi_momentum: float = FERMI_MOMENTUM_AL
    valence_states: int = 12
    core_states: int = 12
    core_binding_ev: float = 72.0
    n_layers: int = 20
    interlayer_spacing: float = INTERLAYER_SPACING_AL
    yukawa_screening_length: float = YUKAWA_SCREENING_AL
    escape_depth: float = ESCAPE_DEPTH_AL


@dataclass(frozen=True)
class ScanConfig:
    e_points: int = 25
    e_half_span: float = 0.4
    e_center_valence: float = 0.0   # 0 = auto (field-free line center)
    e_center_core: float = 0.0
    tau_min: float = -400.0
    tau_max: float = 400.0
    tau_points: int = 81


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    pulses: PulseConfig = field(default_factory=PulseConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    bands: BandConfig = field(default_factory=BandConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)

    # -- derived physical objects -------------------------------------------
    def xuv_pulse(self) -> XuvPulse:
        return XuvPulse.from_experimental(self.pulses.xuv_duration_as,
                                          self.pulses.xuv_energy_ev)

    def ir_pulse(self, screening: Optional[str] = None) -> IrPulse:
        mode = Screening.parse(screening or self.pulses.screening)
        return IrPulse.from_experimental(self.pulses.ir_intensity_wcm2,
                                         self.pulses.ir_photon_ev,
                                         self.pulses.ir_duration_au,
                                         screening=mode)

    @property
    def work_function(self) -> float:
        return units.ev_to_au(self.bands.work_function_ev)

    @property
    def core_binding(self) -> float:
        return units.ev_to_au(self.bands.core_binding_ev)

    @property
    def delta(self) -> float:
        return units.attoseconds_to_au(self.propagation.delta_as)

    def reduced(self) -> "RunConfig":
        """CI-speed preset: coarser basis, scan and window."""
        return replace(
            self,
            grid=replace(self.grid, n_points=301),
            propagation=replace(self.propagation, t_min=-450.0, t_max=450.0),
            scan=replace(self.scan, e_points=15, tau_points=41,
                         tau_min=-300.0, tau_max=300.0),
        )


_SECTIONS = {
    "pulses": PulseConfig,
    "grid": GridConfig,
    "propagation": PropagationConfig,
    "bands": BandConfig,
    "scan": ScanConfig,
    "outputs": OutputConfig,
}

_POSITIVE_FIELDS = {
    "xuv_energy_ev", "xuv_duration_as", "ir_photon_ev", "ir_duration_au",
    "ir_intensity_wcm2", "n_points", "half_width", "delta_as",
    "work_function_ev", "fermi_momentum", "valence_states", "core_states",
    "core_binding_ev", "n_layers", "interlayer_spacing",
    "yukawa_screening_length", "escape_depth", "e_points", "e_half_span",
    "tau_points",
}


def _coerce(name: str, target_type, raw: str):
    raw = raw.strip()
    try:
        if target_type is bool:
            if raw.lower() in ("true", "yes", "1", "on"):
                return True
            if raw.lower() in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"field {name!r}: cannot parse {raw!r} as "
                          f"{target_type.__name__}") from None


def _validate(config: RunConfig) -> RunConfig:
    for section_name, section in (
        ("pulses", config.pulses), ("grid", config.grid),
        ("propagation", config.propagation), ("bands", config.bands),
        ("scan", config.scan),
    ):
        for f in fields(section):
            value = getattr(section, f.name)
            if f.name in _POSITIVE_FIELDS and not value > 0:
                raise ConfigError(
                    f"field {section_name}.{f.name} must be positive, "
                    f"got {value}")
    try:
        Screening.parse(config.pulses.screening)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if config.propagation.t_max <= config.propagation.t_min:
        raise ConfigError("propagation.t_max must exceed propagation.t_min")
    if config.scan.tau_max <= config.scan.tau_min:
        raise ConfigError("scan.tau_max must exceed scan.tau_min")
    if config.propagation.solver not in ("auto", "lu"):
        raise ConfigError(
            f"propagation.solver must be 'auto' or 'lu', got "
            f"{config.propagation.solver!r}")
    if config.grid.n_points < 3:
        raise ConfigError("grid.n_points must be at least 3")
    return config


def parse_config(path) -> RunConfig:
    """Load and validate a sectioned key=value configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config_text(path.read_text())


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    sections = {}
    for section_name in parser.sections():
        if section_name not in _SECTIONS:
            raise ConfigError(f"unknown section [{section_name}]")
        cls = _SECTIONS[section_name]
        known = {f.name: f for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section_name):
            if key not in known:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section_name}]")
            values[key] = _coerce(f"{section_name}.{key}",
                                  _FIELD_TYPES[cls][key], raw)
        sections[section_name] = cls(**values)
    return _validate(RunConfig(**sections))


_FIELD_TYPES = {
    cls: {f.name: (bool if f.type == "bool" else
                   int if f.type == "int" else
                   float if f.type == "float" else str)
          for f in fields(cls)}
    for cls in _SECTIONS.values()
}


def serialize(config: RunConfig) -> str:
    """Canonical textual form; parse(serialize(x)) == x."""
    out = io.StringIO()
    for section_name, cls in _SECTIONS.items():
        section = getattr(config, section_name)
        out.write(f"[{section_name}]\n")
        for f in fields(cls):
            value = getattr(section, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            out.write(f"{f.name} = {value}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(config: RunConfig) -> str:
    """Content hash of the canonicalized configuration."""
    return hashlib.sha256(serialize(config).encode()).hexdigest()[:16]
