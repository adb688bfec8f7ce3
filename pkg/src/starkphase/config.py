"""
INI run configuration in laboratory units.

Sections and keys::

    [medium]  density_length_cm2 | (density_m3 and length_mm), length_mm,
              lambda12_nm, lambda13_nm, gamma2_mhz, gamma3_mhz, mu12, mu13
    [probe]   detuning_gamma, tau_ns, photons | peak_rabi_mhz, area, center_ns
    [switch]  same keys as [probe]
    [grid]    nz, nt, t_window_tau
    [model]   relaxation

Rates given in MHz are cyclic (Gamma = 2 pi * gamma2_mhz * 1e6 rad/s);
detunings are in units of Gamma2.  ``area = lambda2`` means the square of
the switch wavelength.  Dipoles are in C m.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import MISSING, dataclass, fields, replace
from typing import Optional, Union

from .bloch import RelaxationMode, RelaxationModel
from .errors import ConfigError, StarkPhaseError
from .physics import (
    DEFAULT_LENGTH,
    MediumSpec,
    PulseSpec,
    photons_from_rabi,
    rabi_from_photons,
)
from .propagation import SimulationGrid

TWO_PI_MHZ = 2 * math.pi * 1e6
MIN_WINDOW_TAU = 12.0
LAMBDA2 = "lambda2"


@dataclass(frozen=True)
class MediumSection:
    lambda12_nm: float
    lambda13_nm: float
    gamma2_mhz: float
    gamma3_mhz: float
    density_length_cm2: Optional[float] = None
    density_m3: Optional[float] = None
    length_mm: Optional[float] = None
    mu12: Optional[float] = None
    mu13: Optional[float] = None

    def __post_init__(self):
        if self.density_length_cm2 is not None and self.density_m3 is not None:
            raise ConfigError("[medium] give density_length_cm2 or density_m3, not both")
        if self.density_length_cm2 is None and self.density_m3 is None:
            raise ConfigError("[medium] missing required key density_length_cm2 (or density_m3 + length_mm)")
        if self.density_m3 is not None and self.length_mm is None:
            raise ConfigError("[medium] missing required key length_mm (needed with density_m3)")
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if f.name in ("density_length_cm2", "density_m3"):
                if not (v >= 0 and math.isfinite(v)):
                    raise ConfigError(f"[medium] {f.name} must be >= 0")
            elif not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"[medium] {f.name} must be positive")

    @property
    def length(self) -> float:
        return (self.length_mm if self.length_mm is not None else DEFAULT_LENGTH * 1e3) * 1e-3

    @property
    def gamma2(self) -> float:
        return self.gamma2_mhz * TWO_PI_MHZ

    def build(self) -> MediumSpec:
        length = self.length
        if self.density_m3 is not None:
            density = self.density_m3
        else:
            density = self.density_length_cm2 * 1e4 / length
        return MediumSpec(
            density=density,
            length=length,
            lambda12=self.lambda12_nm * 1e-9,
            lambda13=self.lambda13_nm * 1e-9,
            gamma2=self.gamma2_mhz * TWO_PI_MHZ,
            gamma3=self.gamma3_mhz * TWO_PI_MHZ,
            mu12=self.mu12,
            mu13=self.mu13,
        )


@dataclass(frozen=True)
class BeamSection:
    detuning_gamma: float
    tau_ns: float
    photons: Optional[float] = None
    peak_rabi_mhz: Optional[float] = None
    area: Union[str, float] = LAMBDA2
    center_ns: float = 0.0

    def __post_init__(self):
        if self.photons is not None and self.peak_rabi_mhz is not None:
            raise ConfigError("photons and peak_rabi_mhz are mutually exclusive")
        if self.photons is None and self.peak_rabi_mhz is None:
            raise ConfigError("missing required key photons (or peak_rabi_mhz)")
        if not (self.tau_ns > 0 and math.isfinite(self.tau_ns)):
            raise ConfigError("tau_ns must be positive")
        if not math.isfinite(self.detuning_gamma) or not math.isfinite(self.center_ns):
            raise ConfigError("detuning_gamma and center_ns must be finite")
        for name in ("photons", "peak_rabi_mhz"):
            v = getattr(self, name)
            if v is not None and not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be >= 0")
        if isinstance(self.area, str):
            if self.area != LAMBDA2:
                raise ConfigError(f"area must be '{LAMBDA2}' or a number in m^2, got {self.area!r}")
        elif not (self.area > 0 and math.isfinite(self.area)):
            raise ConfigError("area must be positive")

    def build(self, gamma2: float, switch_wavelength: float) -> PulseSpec:
        area = switch_wavelength**2 if self.area == LAMBDA2 else float(self.area)
        return PulseSpec(
            detuning=self.detuning_gamma * gamma2,
            tau=self.tau_ns * 1e-9,
            area=area,
            photon_count=self.photons,
            peak_rabi=None if self.peak_rabi_mhz is None else self.peak_rabi_mhz * TWO_PI_MHZ,
            center_time=self.center_ns * 1e-9,
        )


@dataclass(frozen=True)
class GridSection:
    nz: int = 1024
    nt: int = 4096
    t_window_tau: float = 16.0

    def __post_init__(self):
        if self.nz < 2:
            raise ConfigError("[grid] nz must be >= 2")
        if self.nt < 16:
            raise ConfigError("[grid] nt must be >= 16")
        if not self.t_window_tau >= MIN_WINDOW_TAU:
            raise ConfigError(f"[grid] t_window_tau must be >= {MIN_WINDOW_TAU:g}")


@dataclass(frozen=True)
class ModelSection:
    relaxation: str = RelaxationMode.AS_WRITTEN.value

    def __post_init__(self):
        try:
            RelaxationMode(self.relaxation)
        except ValueError:
            modes = ", ".join(m.value for m in RelaxationMode)
            raise ConfigError(f"[model] relaxation must be one of {modes}") from None


@dataclass(frozen=True)
class RunConfig:
    medium: MediumSection
    probe: BeamSection
    switch: BeamSection
    grid: GridSection = GridSection()
    model: ModelSection = ModelSection()

    def build(self):
        """(medium, probe, switch, grid, relaxation) in SI units."""
        medium = self.medium.build()
        g2 = medium.gamma2
        probe = self.probe.build(g2, medium.lambda13)
        switch = self.switch.build(g2, medium.lambda13)
        tau = max(probe.tau, switch.tau)
        grid = SimulationGrid(
            nz=self.grid.nz,
            nt=self.grid.nt,
            z_max=medium.length,
            t_window=self.grid.t_window_tau * tau,
        )
        relax = RelaxationModel(medium.gamma2, medium.gamma3, RelaxationMode(self.model.relaxation))
        return medium, probe, switch, grid, relax

    def derived(self) -> dict:
        """Quantities computed from the configuration, for echoing."""
        medium, probe, switch, grid, relax = self.build()
        out = {
            "density_m3": medium.density,
            "length_m": medium.length,
            "mu12_cm": medium.mu12,
            "mu13_cm": medium.mu13,
            "grid_dt_s": grid.dt,
            "grid_dz_m": grid.dz,
        }
        for name, pulse, mu, lam in (
            ("probe", probe, medium.mu12, medium.lambda12),
            ("switch", switch, medium.mu13, medium.lambda13),
        ):
            if pulse.photon_count is not None:
                out[f"{name}_peak_rabi_mhz"] = rabi_from_photons(pulse, mu, lam) / TWO_PI_MHZ
                out[f"{name}_photons"] = pulse.photon_count
            else:
                out[f"{name}_peak_rabi_mhz"] = pulse.peak_rabi / TWO_PI_MHZ
                out[f"{name}_photons"] = photons_from_rabi(pulse, mu, lam)
            out[f"{name}_area_m2"] = pulse.area
        return out

    def with_value(self, path: str, value) -> "RunConfig":
        """Copy with one ``section.key`` replaced, e.g. ``switch.photons``."""
        try:
            section_name, key = path.split(".")
        except ValueError:
            raise ConfigError(f"parameter path must look like section.key, got {path!r}") from None
        if section_name not in _SECTIONS:
            raise ConfigError(f"unknown section [{section_name}]")
        section = getattr(self, section_name)
        cls = _SECTIONS[section_name]
        names = {f.name for f in fields(cls)}
        if key not in names:
            raise ConfigError(f"[{section_name}] unknown key {key!r}")
        changes = {key: _coerce(cls, key, value, section_name, None)}
        exclusive = {"photons": "peak_rabi_mhz", "peak_rabi_mhz": "photons",
                     "density_length_cm2": "density_m3", "density_m3": "density_length_cm2"}
        if key in exclusive and exclusive[key] in names:
            changes[exclusive[key]] = None
        return replace(self, **{section_name: replace(section, **changes)})


_SECTIONS = {
    "medium": MediumSection,
    "probe": BeamSection,
    "switch": BeamSection,
    "grid": GridSection,
    "model": ModelSection,
}
_REQUIRED_SECTIONS = ("medium", "probe", "switch")
_INT_KEYS = {"nz", "nt"}
_STR_KEYS = {"relaxation"}


def _coerce(cls, key: str, raw, section: str, line: Optional[int]):
    where = f"[{section}] {key}" + (f" (line {line})" if line else "")
    if key in _STR_KEYS:
        return str(raw).strip()
    if key == "area" and str(raw).strip() == LAMBDA2:
        return LAMBDA2
    try:
        if key in _INT_KEYS:
            return int(str(raw).strip()) if isinstance(raw, str) else int(raw)
        return float(raw)
    except (TypeError, ValueError):
        if key == "area":
            raise ConfigError(f"{where}: area must be '{LAMBDA2}' or a number in m^2, got {raw!r}") from None
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from None


def _line_numbers(text: str) -> dict:
    """Map (section, key) to its 1-based line in ``text``."""
    lines = {}
    section = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif "=" in s and section is not None:
            lines[(section, s.split("=", 1)[0].strip())] = i
    return lines


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        delimiters=("=",),
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    where = _line_numbers(text)

    unknown = [s for s in parser.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section [{unknown[0]}]")

    for name in parser.sections():
        known = {f.name for f in fields(_SECTIONS[name])}
        for key in parser.options(name):
            if key not in known:
                line = where.get((name, key))
                raise ConfigError(f"[{name}] unknown key {key!r}" + (f" (line {line})" if line else ""))
    for name in _REQUIRED_SECTIONS:
        if not parser.has_section(name):
            first = next(f.name for f in fields(_SECTIONS[name]))
            raise ConfigError(f"missing required key [{name}] {first}")

    sections = {}
    for name, cls in _SECTIONS.items():
        if not parser.has_section(name):
            continue
        kwargs = {}
        for key, raw in parser.items(name):
            kwargs[key] = _coerce(cls, key, raw, name, where.get((name, key)))
        required = [f.name for f in fields(cls) if f.default is MISSING]
        for key in required:
            if key not in kwargs:
                raise ConfigError(f"missing required key [{name}] {key}")
        try:
            sections[name] = cls(**kwargs)
        except ConfigError as exc:
            raise ConfigError(f"[{name}] {exc}") from None
    cfg = RunConfig(**sections)
    try:
        cfg.build()
    except ConfigError:
        raise
    except StarkPhaseError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(section):
            v = getattr(section, f.name)
            if v is None:
                continue
            out.append(f"{f.name} = {_fmt(v)}")
        out.append("")
    return "\n".join(out)


DEFAULT_CONFIG_TEXT = """\
# Reference operating point: lambda = 780 nm, Gamma = 2 pi x 6 MHz,
# Delta_p = Delta_s = 160 Gamma, NL = 1.5e13 cm^-2, tau = 20 ns, A = lambda^2.
[medium]
density_length_cm2 = 1.5e13
length_mm = 10
lambda12_nm = 780
lambda13_nm = 780
gamma2_mhz = 6
gamma3_mhz = 6

[probe]
detuning_gamma = 160
tau_ns = 20
photons = 500       # weak probe
area = lambda2

[switch]
detuning_gamma = 160
tau_ns = 20
photons = 5000
area = lambda2

[grid]
nz = 1024
nt = 4096
t_window_tau = 16

[model]
relaxation = as_written
"""


def default_config() -> RunConfig:
    return parse_config(DEFAULT_CONFIG_TEXT)
