"""
Physical constants, parameter types and closed-form results for the
ac-Stark conditional phase shifter.

All quantities are SI with angular frequencies in rad/s.  Phase sign
convention follows the propagation equation used by the simulator: an
envelope crossing a medium of susceptibility chi picks up the factor
``exp(-1j * (omega / c) * chi * L)``.  The scalar ``linear_phase`` returned
here is the phase *retardation* ``(omega / c) * Re(chi) * L``; the simulated
envelope phase is its negative.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError, SingularityError, ValidityWarning


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 299792458.0  # m/s (exact)
    hbar: float = 1.054571817e-34  # J s (exact)
    mu0: float = 1.25663706212e-6  # H/m (CODATA 2018)

    @property
    def eps0(self) -> float:
        return 1.0 / (self.mu0 * self.c**2)

    @property
    def eta(self) -> float:
        """Impedance of free space, sqrt(mu0/eps0)."""
        return self.mu0 * self.c


CONST = PhysicalConstants()

# Paper-scale defaults (Rb D2-like transition)
DEFAULT_WAVELENGTH = 780e-9
DEFAULT_GAMMA = 2 * math.pi * 6e6
DEFAULT_DETUNING = 160 * DEFAULT_GAMMA
DEFAULT_DENSITY_LENGTH = 1.5e13 * 1e4  # 1.5e13 cm^-2 in m^-2
DEFAULT_TAU = 20e-9
DEFAULT_SWITCH_PHOTONS = 5000.0
DEFAULT_PROBE_PHOTONS = 500.0
DEFAULT_LENGTH = 10e-3


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


def derive_dipole_moment(wavelength: float, gamma: float) -> float:
    """Dipole matrix element of a purely radiatively broadened transition.

    mu**2 = 3 pi eps0 hbar gamma c**3 / omega**3 with omega = 2 pi c / lambda.
    """
    _require_positive(wavelength=wavelength, gamma=gamma)
    omega = 2 * math.pi * CONST.c / wavelength
    return math.sqrt(3 * math.pi * CONST.eps0 * CONST.hbar * gamma * CONST.c**3 / omega**3)


@dataclass(frozen=True)
class MediumSpec:
    """Homogeneous V-type medium.  Dipoles default to the radiative values."""

    density: float
    length: float
    lambda12: float = DEFAULT_WAVELENGTH
    lambda13: float = DEFAULT_WAVELENGTH
    gamma2: float = DEFAULT_GAMMA
    gamma3: float = DEFAULT_GAMMA
    mu12: Optional[float] = None
    mu13: Optional[float] = None

    def __post_init__(self):
        if not (self.density >= 0 and math.isfinite(self.density)):
            raise DomainError(f"density must be non-negative, got {self.density!r}")
        _require_positive(
            length=self.length,
            lambda12=self.lambda12,
            lambda13=self.lambda13,
            gamma2=self.gamma2,
            gamma3=self.gamma3,
        )
        if self.mu12 is None:
            object.__setattr__(self, "mu12", derive_dipole_moment(self.lambda12, self.gamma2))
        if self.mu13 is None:
            object.__setattr__(self, "mu13", derive_dipole_moment(self.lambda13, self.gamma3))
        _require_positive(mu12=self.mu12, mu13=self.mu13)

    @classmethod
    def from_density_length(cls, density_length: float, length: float = DEFAULT_LENGTH, **kw) -> "MediumSpec":
        return cls(density=density_length / length, length=length, **kw)

    @property
    def density_length(self) -> float:
        return self.density * self.length

    @property
    def omega12(self) -> float:
        return 2 * math.pi * CONST.c / self.lambda12

    @property
    def omega13(self) -> float:
        return 2 * math.pi * CONST.c / self.lambda13

    @property
    def coupling_p(self) -> float:
        """Field coupling eta*omega*N*mu**2/hbar of the probe (rad/s per m)."""
        return CONST.eta * self.omega12 * self.density * self.mu12**2 / CONST.hbar

    @property
    def coupling_s(self) -> float:
        return CONST.eta * self.omega13 * self.density * self.mu13**2 / CONST.hbar


@dataclass(frozen=True)
class PulseSpec:
    """One Gaussian field envelope Omega0 * exp(-(t - t0)**2 / (2 tau**2)).

    Exactly one of ``photon_count`` and ``peak_rabi`` is given; the other is
    derived with :func:`resolve_peak_rabi` once the transition is known.
    """

    detuning: float
    tau: float = DEFAULT_TAU
    area: float = DEFAULT_WAVELENGTH**2
    photon_count: Optional[float] = None
    peak_rabi: Optional[float] = None
    center_time: float = 0.0

    def __post_init__(self):
        _require_positive(tau=self.tau, area=self.area)
        if (self.photon_count is None) == (self.peak_rabi is None):
            raise DomainError("exactly one of photon_count / peak_rabi must be set")
        if self.photon_count is not None and not (self.photon_count >= 0 and math.isfinite(self.photon_count)):
            raise DomainError(f"photon_count must be >= 0, got {self.photon_count!r}")
        if self.peak_rabi is not None and not (self.peak_rabi >= 0 and math.isfinite(self.peak_rabi)):
            raise DomainError(f"peak_rabi must be >= 0, got {self.peak_rabi!r}")
        if not math.isfinite(self.detuning):
            raise DomainError("detuning must be finite")

    @property
    def bandwidth_ok(self) -> bool:
        return 1.0 / self.tau < abs(self.detuning) / 10

    def envelope(self, t, peak_rabi: float):
        import numpy as np

        return peak_rabi * np.exp(-((np.asarray(t) - self.center_time) ** 2) / (2 * self.tau**2))


@dataclass(frozen=True)
class AnalyticEstimate:
    cps: float
    absorption: float
    phi1: float
    stark_shift: float
    warnings: tuple = field(default=(), compare=False)

    @property
    def transmission(self) -> float:
        return math.exp(-self.absorption)


def _energy_factor(tau: float, area: float, mu: float, wavelength: float) -> float:
    """Omega0**2 per photon for the Gaussian envelope.

    n hbar omega = A * (eps0 c / 2) * (hbar / mu)**2 * Omega0**2 * tau * sqrt(pi)
    """
    omega = 2 * math.pi * CONST.c / wavelength
    return 2 * omega * mu**2 / (area * CONST.eps0 * CONST.c * CONST.hbar * tau * math.sqrt(math.pi))


def rabi_from_photons(pulse: PulseSpec, mu: float, wavelength: float) -> float:
    """Peak Rabi frequency carrying ``pulse.photon_count`` photons."""
    n = pulse.photon_count
    if n is None:
        raise DomainError("pulse has no photon_count")
    if n < 0:
        raise DomainError("photon_count must be >= 0")
    _require_positive(tau=pulse.tau, area=pulse.area, mu=mu, wavelength=wavelength)
    return math.sqrt(n * _energy_factor(pulse.tau, pulse.area, mu, wavelength))


def photons_from_rabi(pulse: PulseSpec, mu: float, wavelength: float) -> float:
    """Photon number of a pulse given by its peak Rabi frequency."""
    if pulse.peak_rabi is None:
        raise DomainError("pulse has no peak_rabi")
    _require_positive(tau=pulse.tau, area=pulse.area, mu=mu, wavelength=wavelength)
    return pulse.peak_rabi**2 / _energy_factor(pulse.tau, pulse.area, mu, wavelength)


def resolve_peak_rabi(pulse: PulseSpec, mu: float, wavelength: float) -> float:
    if pulse.peak_rabi is not None:
        return pulse.peak_rabi
    return rabi_from_photons(pulse, mu, wavelength)


def resolve_photons(pulse: PulseSpec, mu: float, wavelength: float) -> float:
    if pulse.photon_count is not None:
        return pulse.photon_count
    return photons_from_rabi(pulse, mu, wavelength)


def stark_shift(omega_s: float, delta_s: float) -> float:
    """Light shift of the ground state, Omega_s**2 / (4 Delta_s), signed."""
    if delta_s == 0:
        raise SingularityError("ac Stark shift diverges at zero switch detuning")
    return abs(omega_s) ** 2 / (4 * delta_s)


def _two_level_chi(density: float, mu: float, delta, gamma: float):
    import numpy as np

    denom = 2 * np.asarray(delta, dtype=float) + 1j * gamma
    if np.any(denom == 0):
        raise SingularityError("susceptibility pole: on resonance with zero linewidth")
    chi = density * mu**2 / (CONST.hbar * CONST.eps0) / denom
    return complex(chi) if chi.ndim == 0 else chi


def linear_susceptibility(medium: MediumSpec, delta_p: float, delta_stark: float = 0.0) -> complex:
    """Probe susceptibility N mu12**2 / (hbar eps0) / (2 (Delta_p + delta_s) + i Gamma2)."""
    return _two_level_chi(medium.density, medium.mu12, delta_p + delta_stark, medium.gamma2)


def switch_susceptibility(medium: MediumSpec, delta_s: float) -> complex:
    """Linear susceptibility seen by the switch on |1>-|3>."""
    return _two_level_chi(medium.density, medium.mu13, delta_s, medium.gamma3)


def attenuation_coefficient(medium: MediumSpec, delta_p: float, delta_stark: float = 0.0) -> float:
    """Intensity attenuation coefficient 2 (omega/c) |Im chi| (1/m)."""
    chi = linear_susceptibility(medium, delta_p, delta_stark)
    return 2 * medium.omega12 / CONST.c * abs(chi.imag)


def linear_transfer(medium: MediumSpec, delta_p: float, z, delta_stark: float = 0.0):
    """Complex amplitude transfer exp(-i (omega/c) chi z) of a weak CW probe."""
    import numpy as np

    chi = linear_susceptibility(medium, delta_p, delta_stark)
    return np.exp(-1j * medium.omega12 / CONST.c * chi * np.asarray(z))


def linear_phase(medium: MediumSpec, delta_p: float) -> float:
    """Probe phase retardation (omega_p / c) Re(chi) L without the switch.

    N already sits inside chi, so it is not applied a second time.
    """
    chi = linear_susceptibility(medium, delta_p)
    return medium.omega12 / CONST.c * chi.real * medium.length


def far_detuned_phase(medium: MediumSpec, delta_p: float) -> float:
    """Leading |Delta_p| >> Gamma term of :func:`linear_phase`.

    (omega_p / c) N mu12**2 L / (2 hbar eps0 Delta_p); drops the Gamma**2
    correction so it scales exactly with N / Delta_p.
    """
    if delta_p == 0:
        raise SingularityError("far-detuned phase diverges at zero detuning")
    chi = medium.density * medium.mu12**2 / (CONST.hbar * CONST.eps0) / (2 * delta_p)
    return medium.omega12 / CONST.c * chi * medium.length


def chi3(medium: MediumSpec, delta_p: float, delta_s: float) -> complex:
    """d chi_p / d |E_s|**2 at E_s = 0 (m**2/V**2).

    Uses delta_stark = mu13**2 |E_s|**2 / (4 hbar**2 Delta_s).
    """
    if delta_s == 0:
        raise SingularityError("chi3 diverges at zero switch detuning")
    denom = complex(2 * delta_p, medium.gamma2)
    if denom == 0:
        raise SingularityError("susceptibility pole: on resonance with zero linewidth")
    dchi_ddelta = -2 * medium.density * medium.mu12**2 / (CONST.hbar * CONST.eps0) / denom**2
    ddelta_dE2 = medium.mu13**2 / (4 * CONST.hbar**2 * delta_s)
    return dchi_ddelta * ddelta_dE2


def _collect_validity(medium: MediumSpec, probe: PulseSpec, switch: Optional[PulseSpec]) -> list:
    msgs = []
    pulses = [("probe", probe, medium.gamma2)]
    if switch is not None:
        pulses.append(("switch", switch, medium.gamma3))
    for name, pulse, gamma in pulses:
        if abs(pulse.detuning) < 10 * gamma:
            msgs.append(f"{name} detuning |{pulse.detuning:.3g}| < 10 Gamma: far-detuned estimate unreliable")
        if not pulse.bandwidth_ok:
            msgs.append(f"{name} bandwidth 1/tau = {1 / pulse.tau:.3g} not << |detuning|/10")
    return msgs


def validity_warnings(medium: MediumSpec, probe: PulseSpec, switch: Optional[PulseSpec] = None) -> list:
    """Emit (and return) non-fatal warnings for stretched approximations."""
    msgs = _collect_validity(medium, probe, switch)
    for msg in msgs:
        warnings.warn(msg, ValidityWarning, stacklevel=3)
    return msgs


def estimate_cps_absorption(medium: MediumSpec, probe: PulseSpec, switch: PulseSpec) -> AnalyticEstimate:
    """Far-detuned closed-form CPS and absorption of the probe.

    CPS ~= n_s (3 / 8 pi) (lambda_s**2 / A) / (tau Delta_s) (Gamma / Delta_p) phi1
    absorption ~= (Gamma / Delta_p) phi1
    """
    _require_positive(tau=switch.tau, area=switch.area)
    msgs = validity_warnings(medium, probe, switch)
    if probe.detuning == 0 or switch.detuning == 0:
        raise SingularityError("far-detuned estimate requires nonzero detunings")
    phi1 = far_detuned_phase(medium, probe.detuning)
    n_s = resolve_photons(switch, medium.mu13, medium.lambda13)
    g_over_d = medium.gamma2 / probe.detuning
    absorption = g_over_d * phi1
    cps = (
        n_s
        * (3 / (8 * math.pi))
        * (medium.lambda13**2 / switch.area)
        / (switch.tau * switch.detuning)
        * g_over_d
        * phi1
    )
    omega_s = resolve_peak_rabi(switch, medium.mu13, medium.lambda13)
    return AnalyticEstimate(
        cps=cps,
        absorption=absorption,
        phi1=phi1,
        stark_shift=stark_shift(omega_s, switch.detuning),
        warnings=tuple(msgs),
    )


@dataclass(frozen=True)
class DesignPoint:
    tau: float
    delta_p: float
    delta_s: float
    density_length: float

    @property
    def bandwidth(self) -> float:
        return 1.0 / self.tau


def design_for_bandwidth(bandwidth: float, n_s: float, medium: MediumSpec, probe: PulseSpec, switch: PulseSpec) -> DesignPoint:
    """Detunings and density-length reproducing the baseline at bandwidth 1/tau.

    Keeps tau*Delta and NL/Delta**2 fixed, so the far-detuned CPS and
    absorption do not change.  The switch photon number ``n_s`` is carried
    through unchanged.
    """
    if not (bandwidth > 0 and math.isfinite(bandwidth)):
        raise DomainError(f"bandwidth must be positive, got {bandwidth!r}")
    if n_s < 0:
        raise DomainError("n_s must be >= 0")
    ratio = probe.tau * bandwidth  # tau0 / tau
    return DesignPoint(
        tau=1.0 / bandwidth,
        delta_p=probe.detuning * ratio,
        delta_s=switch.detuning * ratio,
        density_length=medium.density_length * ratio**2,
    )


def apply_design(point: DesignPoint, n_s: float, medium: MediumSpec, probe: PulseSpec, switch: PulseSpec):
    """Scaled (medium, probe, switch) for a design point.

    Density is rescaled at fixed length.  Pulses given by peak Rabi frequency
    are converted to photon counts first so energy is what is held fixed.
    """
    from dataclasses import replace

    new_medium = replace(medium, density=point.density_length / medium.length)
    n_p = resolve_photons(probe, medium.mu12, medium.lambda12)
    new_probe = replace(
        probe,
        detuning=point.delta_p,
        tau=point.tau,
        photon_count=n_p,
        peak_rabi=None,
        center_time=probe.center_time * point.tau / probe.tau,
    )
    new_switch = replace(
        switch,
        detuning=point.delta_s,
        tau=point.tau,
        photon_count=n_s,
        peak_rabi=None,
        center_time=switch.center_time * point.tau / switch.tau,
    )
    return new_medium, new_probe, new_switch


def reference_defaults(n_s: float = DEFAULT_SWITCH_PHOTONS, n_p: float = DEFAULT_PROBE_PHOTONS):
    """(medium, probe, switch) at the reference operating point."""
    medium = MediumSpec.from_density_length(DEFAULT_DENSITY_LENGTH)
    probe = PulseSpec(detuning=DEFAULT_DETUNING, photon_count=n_p)
    switch = PulseSpec(detuning=DEFAULT_DETUNING, photon_count=n_s)
    return medium, probe, switch
