"""
Coupled Maxwell-Bloch solve on the (z, t') grid by the method of lines.

At every z the density matrix is marched over the whole local-time axis,
then both envelopes are advanced with

    d Omega_p / dz = -i eta omega_p N mu12**2 / hbar * rho_12
    d Omega_s / dz = -i eta omega_s N mu13**2 / hbar * rho_13

using a Heun predictor-corrector step in z.  The step is taken in the
interaction picture of the exact weak-field (linear) response, which is
diagonal in the envelope spectrum; the nonlinear remainder is confined to
frequencies well inside the atomic detunings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bloch import RelaxationModel, march_coherences
from .errors import (
    ConfigError,
    DegenerateInputError,
    NumericalInstabilityError,
    UsageError,
)
from .physics import (
    CONST,
    MediumSpec,
    PulseSpec,
    linear_susceptibility,
    resolve_peak_rabi,
    switch_susceptibility,
    validity_warnings,
)

EDGE_TOL = 1e-6
# RK4 on the imaginary axis is stable up to |lambda dt| = 2.83
RK4_STABILITY = 2.5
# passband kept by the z-step filter, as a fraction of the smallest |detuning|
CUTOFF_FRACTION = 0.5
# the filter is only used when the cutoff clears the pulse spectra by this many 1/tau
MIN_CUTOFF_TAU = 10.0


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform (z, t') grid; t' spans [-t_window/2, t_window/2].

    The z step is Heun's predictor-corrector.  With ``interaction_picture``
    it acts on the envelope spectrum in the frame of the exact weak-field
    response exp(-i k(omega) z), so only the nonlinear remainder is
    integrated numerically.  ``band_limit`` confines that remainder to
    |omega| < CUTOFF_FRACTION * min|Delta| (see :func:`passband`).
    """

    nz: int = 1024
    nt: int = 4096
    z_max: float = 10e-3
    t_window: float = 16 * 20e-9
    band_limit: bool = True
    interaction_picture: bool = True

    def __post_init__(self):
        if self.nz < 2:
            raise ConfigError("nz must be >= 2")
        if self.nt < 16:
            raise ConfigError("nt must be >= 16")
        if not (self.z_max > 0 and self.t_window > 0):
            raise ConfigError("z_max and t_window must be positive")

    @property
    def dz(self) -> float:
        return self.z_max / (self.nz - 1)

    @property
    def dt(self) -> float:
        return self.t_window / (self.nt - 1)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(-self.t_window / 2, self.t_window / 2, self.nt)

    @property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.z_max, self.nz)

    @property
    def angular_frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.nt, self.dt)

    @classmethod
    def for_pulses(cls, medium: MediumSpec, tau: float, nz: int = 1024, nt: int = 4096, window_tau: float = 16.0, **kw):
        return cls(nz=nz, nt=nt, z_max=medium.length, t_window=window_tau * tau, **kw)

    def refined(self, factor: int = 2, z: bool = True, t: bool = True) -> "SimulationGrid":
        """Nested refinement: every old grid point stays a grid point."""
        return replace(
            self,
            nz=(self.nz - 1) * factor + 1 if z else self.nz,
            nt=(self.nt - 1) * factor + 1 if t else self.nt,
        )


@dataclass
class EnvelopeGrid:
    """Rabi-frequency envelopes on the full grid, shape (nz, nt)."""

    omega_p: np.ndarray
    omega_s: np.ndarray


@dataclass
class PropagationResult:
    medium: MediumSpec
    probe: PulseSpec
    switch: Optional[PulseSpec]
    grid: SimulationGrid
    relaxation: RelaxationModel
    t: np.ndarray
    z: np.ndarray
    input_p: np.ndarray
    input_s: np.ndarray
    output_p: np.ndarray
    output_s: np.ndarray
    phase_vs_z: np.ndarray
    weighted_phase_vs_z: np.ndarray
    switch_phase_vs_z: np.ndarray
    transmission_p: float
    transmission_s: float
    envelopes: Optional[EnvelopeGrid] = None
    warnings: tuple = field(default=(), repr=False)

    @property
    def output_phase(self) -> float:
        return float(self.phase_vs_z[-1])


def _wrap_near(theta: float, previous: Optional[float]) -> float:
    if previous is None:
        return theta
    return theta + 2 * math.pi * round((previous - theta) / (2 * math.pi))


def extract_phase(envelope: np.ndarray, previous: Optional[float] = None) -> float:
    """Argument of the envelope at its peak, unwrapped to lie nearest ``previous``."""
    env = np.asarray(envelope)
    mag = np.abs(env)
    k = int(np.argmax(mag))
    if not mag[k] > 0:
        raise DegenerateInputError("all-zero envelope has no phase")
    return _wrap_near(float(np.angle(env[k])), previous)


def energy_weighted_phase(envelope: np.ndarray, previous: Optional[float] = None) -> float:
    """Argument of sum |Omega| Omega: the |Omega|**2-weighted mean phasor."""
    env = np.asarray(envelope)
    s = np.sum(np.abs(env) * env)
    if s == 0:
        raise DegenerateInputError("all-zero envelope has no phase")
    return _wrap_near(float(np.angle(s)), previous)


def _energy(env: np.ndarray) -> float:
    return float(np.sum(np.abs(env) ** 2))


def input_envelopes(medium: MediumSpec, probe: PulseSpec, switch: Optional[PulseSpec], t: np.ndarray):
    op = probe.envelope(t, resolve_peak_rabi(probe, medium.mu12, medium.lambda12)).astype(complex)
    if switch is None:
        os_ = np.zeros_like(op)
    else:
        os_ = switch.envelope(t, resolve_peak_rabi(switch, medium.mu13, medium.lambda13)).astype(complex)
    return op, os_


def _check_window(env: np.ndarray, name: str) -> None:
    peak = np.max(np.abs(env))
    if peak == 0:
        return
    edge = max(abs(env[0]), abs(env[-1]))
    if edge > EDGE_TOL * peak:
        raise ConfigError(f"{name} envelope at the window edge is {edge / peak:.2e} of peak; widen t_window")


def passband(grid: SimulationGrid, probe: PulseSpec, switch: Optional[PulseSpec]) -> Optional[np.ndarray]:
    """Boolean FFT mask for the numerically integrated z source, or None.

    Explicit z steps are unstable for envelope components near an atomic
    resonance (f = +Delta), where the medium response is ~1/Gamma instead
    of ~1/Delta.  Far-detuned pulses have no content there.
    """
    if not grid.band_limit:
        return None
    pulses = [probe] + ([switch] if switch is not None else [])
    cutoff = CUTOFF_FRACTION * min(abs(q.detuning) for q in pulses)
    if cutoff < MIN_CUTOFF_TAU / min(q.tau for q in pulses):
        return None
    mask = np.abs(grid.angular_frequencies) < cutoff
    if mask.all():
        return None
    return mask


def linear_generators(medium: MediumSpec, delta_p: float, delta_s: Optional[float], grid: SimulationGrid):
    """Weak-field z generators -i k(omega) on the FFT frequency grid.

    An envelope component exp(i omega t') sees the detuning Delta - omega.
    """
    w = grid.angular_frequencies
    lin_p = -1j * medium.omega12 / CONST.c * linear_susceptibility(medium, delta_p - w)
    lin_s = None
    if delta_s is not None:
        lin_s = -1j * medium.omega13 / CONST.c * switch_susceptibility(medium, delta_s - w)
    return lin_p, lin_s


def check_time_step(grid: SimulationGrid, probe: PulseSpec, switch: Optional[PulseSpec], rabi_max: float) -> None:
    detunings = [abs(probe.detuning)] + ([abs(switch.detuning)] if switch is not None else [])
    rate = max(detunings) + rabi_max
    if rate * grid.dt > RK4_STABILITY:
        need = int(math.ceil(rate * grid.t_window / RK4_STABILITY)) + 1
        raise ConfigError(f"time step too coarse for RK4 (|Delta|+Omega)*dt = {rate * grid.dt:.2f}; use nt >= {need}")


def simulate(
    medium: MediumSpec,
    probe: PulseSpec,
    switch: Optional[PulseSpec],
    grid: SimulationGrid,
    relax: Optional[RelaxationModel] = None,
    keep_grid: bool = True,
) -> PropagationResult:
    """Propagate probe (and optional switch) through the medium."""
    if relax is None:
        relax = RelaxationModel(medium.gamma2, medium.gamma3)
    if not math.isclose(grid.z_max, medium.length, rel_tol=1e-12):
        raise ConfigError("grid.z_max must equal the medium length")
    msgs = validity_warnings(medium, probe, switch)
    t = grid.t
    op, os_ = input_envelopes(medium, probe, switch, t)
    _check_window(op, "probe")
    _check_window(os_, "switch")
    e_p0, e_s0 = _energy(op), _energy(os_)
    if e_p0 == 0:
        raise DegenerateInputError("probe carries no energy")
    check_time_step(grid, probe, switch, float(np.max(np.abs(op)) + np.max(np.abs(os_))))
    mask = passband(grid, probe, switch)

    dz, dt = grid.dz, grid.dt
    kp, ks = medium.coupling_p, medium.coupling_s
    dp = probe.detuning
    ds = switch.detuning if switch is not None else 0.0
    if grid.interaction_picture and medium.density > 0:
        lin_p, lin_s = linear_generators(medium, dp, ds if switch is not None else None, grid)
    else:
        lin_p = lin_s = None
    prop_p = None if lin_p is None else np.exp(lin_p * dz)
    prop_s = None if lin_s is None else np.exp(lin_s * dz)

    nz = grid.nz
    if keep_grid:
        grid_p = np.empty((nz, grid.nt), complex)
        grid_s = np.empty((nz, grid.nt), complex)
        grid_p[0], grid_s[0] = op, os_
    phase = np.zeros(nz)
    wphase = np.zeros(nz)
    sphase = np.zeros(nz)
    ref_p = extract_phase(op)
    ref_w = energy_weighted_phase(op)
    ref_s = extract_phase(os_) if e_s0 > 0 else 0.0
    step_p = -medium.omega12 / CONST.c * linear_susceptibility(medium, dp).real * dz
    step_s = -medium.omega13 / CONST.c * switch_susceptibility(medium, ds).real * dz

    def residual(p, s, iz):
        """Band-limited d/dz of the envelope spectra minus the linear part."""
        if kp == 0 and ks == 0:
            return None, None
        r12, r13, bad = march_coherences(p, s, dp, ds, relax, dt)
        if bad >= 0:
            raise NumericalInstabilityError(
                f"Bloch integration unstable at z={iz * dz:.6g} m (iz={iz}), t'={t[bad]:.6g} s (it={bad})"
            )
        fp = np.fft.fft(-1j * kp * r12)
        fs = np.fft.fft(-1j * ks * r13)
        if lin_p is not None:
            fp -= lin_p * np.fft.fft(p)
        if lin_s is not None:
            fs -= lin_s * np.fft.fft(s)
        if mask is not None:
            fp[~mask] = 0.0
            fs[~mask] = 0.0
        return fp, fs

    def evolve(spec, prop):
        return spec if prop is None else spec * prop

    ip = np.fft.ifft
    rp, rs = residual(op, os_, 0)
    p, s = op, os_
    inert = kp == 0 and ks == 0
    for iz in range(1, nz):
        if inert:
            if keep_grid:
                grid_p[iz], grid_s[iz] = p, s
            continue
        # Heun predictor-corrector in the interaction picture (Lawson RK2)
        hp, hs = np.fft.fft(p), np.fft.fft(s)
        p_pred = ip(evolve(hp + dz * rp, prop_p))
        s_pred = ip(evolve(hs + dz * rs, prop_s))
        rp_pred, rs_pred = residual(p_pred, s_pred, iz)
        p = ip(evolve(hp + 0.5 * dz * rp, prop_p) + 0.5 * dz * rp_pred)
        s = ip(evolve(hs + 0.5 * dz * rs, prop_s) + 0.5 * dz * rs_pred)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(s))):
            bad = int(np.argmin(np.isfinite(p) & np.isfinite(s)))
            raise NumericalInstabilityError(f"non-finite envelope at z={iz * dz:.6g} m, t'={t[bad]:.6g} s")
        # unwrap against the previous value advanced by the linear phase step
        phase[iz] = extract_phase(p, phase[iz - 1] + step_p + ref_p) - ref_p
        wphase[iz] = energy_weighted_phase(p, wphase[iz - 1] + step_p + ref_w) - ref_w
        if e_s0 > 0:
            sphase[iz] = extract_phase(s, sphase[iz - 1] + step_s + ref_s) - ref_s
        if keep_grid:
            grid_p[iz], grid_s[iz] = p, s
        if iz < nz - 1:
            rp, rs = residual(p, s, iz)

    return PropagationResult(
        medium=medium,
        probe=probe,
        switch=switch,
        grid=grid,
        relaxation=relax,
        t=t,
        z=grid.z,
        input_p=op,
        input_s=os_,
        output_p=p,
        output_s=s,
        phase_vs_z=phase,
        weighted_phase_vs_z=wphase,
        switch_phase_vs_z=sphase,
        transmission_p=_energy(p) / e_p0,
        transmission_s=_energy(s) / e_s0 if e_s0 > 0 else 1.0,
        envelopes=EnvelopeGrid(grid_p, grid_s) if keep_grid else None,
        warnings=tuple(msgs),
    )


def conditional_phase_shift(on: PropagationResult, off: PropagationResult) -> float:
    """Output probe phase with the switch on minus with it off."""
    if on.medium != off.medium or on.probe != off.probe or on.grid != off.grid:
        raise UsageError("on/off runs must share medium, probe and grid")
    if on.relaxation != off.relaxation:
        raise UsageError("on/off runs must share the relaxation model")
    return float(on.phase_vs_z[-1] - off.phase_vs_z[-1])


@dataclass
class PairedRun:
    on: PropagationResult
    off: PropagationResult

    @property
    def cps(self) -> float:
        return conditional_phase_shift(self.on, self.off)

    @property
    def cps_vs_z(self) -> np.ndarray:
        return self.on.phase_vs_z - self.off.phase_vs_z


def simulate_pair(medium, probe, switch, grid, relax=None, keep_grid=True) -> PairedRun:
    off = simulate(medium, probe, None, grid, relax, keep_grid)
    on = simulate(medium, probe, switch, grid, relax, keep_grid)
    return PairedRun(on=on, off=off)


@dataclass
class ConvergenceRow:
    nz: int
    nt: int
    cps: float
    transmission: float


@dataclass
class ConvergenceReport:
    rows: list
    d_cps: list
    d_transmission: list
    converged: bool

    def observed_order(self) -> float:
        """log2 of the ratio of the last two successive CPS deltas (factor-2 refinement)."""
        if len(self.d_cps) < 2 or self.d_cps[-1] == 0:
            return math.inf
        return math.log2(abs(self.d_cps[-2]) / abs(self.d_cps[-1]))


def convergence_report(
    medium: MediumSpec,
    probe: PulseSpec,
    switch: PulseSpec,
    grid: SimulationGrid,
    levels: Sequence[int] = (1, 2, 4),
    relax: Optional[RelaxationModel] = None,
    refine_z: bool = True,
    refine_t: bool = True,
) -> ConvergenceReport:
    """Re-run the paired simulation on nested grids refined by each factor in ``levels``."""
    if len(levels) < 2:
        raise UsageError("need at least two refinement levels")
    rows = []
    for f in levels:
        g = grid.refined(f, z=refine_z, t=refine_t) if f != 1 else grid
        run = simulate_pair(medium, probe, switch, g, relax, keep_grid=False)
        rows.append(ConvergenceRow(g.nz, g.nt, run.cps, run.on.transmission_p))
    d_cps = [b.cps - a.cps for a, b in zip(rows, rows[1:])]
    d_tr = [b.transmission - a.transmission for a, b in zip(rows, rows[1:])]
    converged = abs(d_cps[-1]) < 1e-3 and abs(d_tr[-1]) < 1e-4
    return ConvergenceReport(rows, d_cps, d_tr, converged)
