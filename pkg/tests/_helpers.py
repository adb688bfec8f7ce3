"""Shared builders and invariant checks for the test suite."""

import math
from dataclasses import dataclass, replace

import numpy as np

from starkphase.bloch import RelaxationMode, RelaxationModel, ground_state, integrate_time_slice
import warnings

from starkphase.errors import ValidityWarning
from starkphase.physics import (
    CONST,
    MediumSpec,
    PulseSpec,
    attenuation_coefficient,
    estimate_cps_absorption,
    reference_defaults,
    resolve_peak_rabi,
    switch_susceptibility,
)
from starkphase.propagation import SimulationGrid, input_envelopes, simulate

TWO_PI = 2 * math.pi
G6 = TWO_PI * 6e6


@dataclass
class Case:
    medium: MediumSpec
    probe: PulseSpec
    switch: PulseSpec
    grid: SimulationGrid
    label: str


def stable_nt(medium, probe, switch, t_window, target=0.5, minimum=1024):
    """Smallest nt keeping (|Delta| + Omega_max) dt below ``target``."""
    om = resolve_peak_rabi(probe, medium.mu12, medium.lambda12) + resolve_peak_rabi(switch, medium.mu13, medium.lambda13)
    rate = max(abs(probe.detuning), abs(switch.detuning)) + om
    return max(minimum, int(math.ceil(rate * t_window / target)) + 1)


def default_case(nz=17) -> Case:
    m, p, s = reference_defaults()
    t_window = 16 * p.tau
    grid = SimulationGrid(nz=nz, nt=4096, z_max=m.length, t_window=t_window)
    return Case(m, p, s, grid, "default")


def random_case(seed: int, nz=17) -> Case:
    """A valid, moderately far-detuned configuration drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    g2 = TWO_PI * rng.uniform(3e6, 10e6)
    g3 = TWO_PI * rng.uniform(3e6, 10e6)
    length = rng.uniform(2e-3, 20e-3)
    nl = rng.uniform(1e12, 3e13) * 1e4
    medium = MediumSpec(
        density=nl / length,
        length=length,
        lambda12=rng.uniform(700e-9, 900e-9),
        lambda13=rng.uniform(700e-9, 900e-9),
        gamma2=g2,
        gamma3=g3,
    )
    sign = rng.choice([-1.0, 1.0], size=2)
    tau_p, tau_s = rng.uniform(10e-9, 40e-9, size=2)
    # far detuned and narrow band: |Delta| >= 20 Gamma and |Delta| tau >= 25
    lo_p, lo_s = max(20 * g2, 25 / tau_p), max(20 * g2, 25 / tau_s)
    probe = PulseSpec(
        detuning=sign[0] * rng.uniform(lo_p, max(lo_p, 200 * g2) * 1.5),
        tau=tau_p,
        photon_count=rng.uniform(10, 500),
    )
    switch = PulseSpec(
        detuning=sign[1] * rng.uniform(lo_s, max(lo_s, 200 * g2) * 1.5),
        tau=tau_s,
        photon_count=rng.uniform(0, 8000),
    )
    # keep to the operating regime: optical depth <= 1.5 on both arms and
    # an estimated conditional phase of at most 3 rad
    od = max(
        attenuation_coefficient(medium, probe.detuning) * length,
        switch_attenuation(medium, switch.detuning) * length,
    )
    if od > 1.5:
        medium = replace(medium, density=medium.density * 1.5 / od)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        cps = abs(estimate_cps_absorption(medium, probe, switch).cps)
    if cps > 3.0:
        switch = replace(switch, photon_count=switch.photon_count * 3.0 / cps)
    # perturbative fields: Omega_s <= 0.3 |Delta_s|, Omega_p <= 0.1 |Delta_p|
    for name, limit, mu, lam in (("probe", 0.1, medium.mu12, medium.lambda12), ("switch", 0.3, medium.mu13, medium.lambda13)):
        pulse = probe if name == "probe" else switch
        ratio = resolve_peak_rabi(pulse, mu, lam) / abs(pulse.detuning)
        if ratio > limit:
            pulse = replace(pulse, photon_count=pulse.photon_count * (limit / ratio) ** 2)
            probe, switch = (pulse, switch) if name == "probe" else (probe, pulse)
    t_window = 16 * max(probe.tau, switch.tau)
    nt = stable_nt(medium, probe, switch, t_window)
    grid = SimulationGrid(nz=nz, nt=nt, z_max=length, t_window=t_window)
    return Case(medium, probe, switch, grid, f"seed{seed}")


def switch_attenuation(medium: MediumSpec, delta_s: float) -> float:
    chi = switch_susceptibility(medium, delta_s)
    return 2 * medium.omega13 / CONST.c * abs(chi.imag)


def time_slice(case: Case, mode: RelaxationMode, t=None):
    """Full density matrix over the input fields of ``case``."""
    t = case.grid.t if t is None else t
    op, os_ = input_envelopes(case.medium, case.probe, case.switch, t)
    relax = RelaxationModel(case.medium.gamma2, case.medium.gamma3, mode)
    return integrate_time_slice(ground_state(), op, os_, case.probe.detuning, case.switch.detuning, relax, t[1] - t[0])


def density_invariants(rhos: np.ndarray, mode: RelaxationMode) -> dict:
    """Worst-case Hermiticity error, min eigenvalue, trace drift / increase."""
    herm = float(np.max(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1))))))
    eig = float(np.min(np.linalg.eigvalsh(rhos)))
    tr = np.real(np.trace(rhos, axis1=1, axis2=2))
    out = {"hermiticity": herm, "min_eig": eig}
    if mode is RelaxationMode.REPOPULATING:
        out["trace_drift"] = float(np.max(np.abs(tr - 1.0)))
    else:
        out["trace_increase"] = float(np.max(np.diff(tr)))
    return out


def invariants_ok(inv: dict) -> bool:
    ok = inv["hermiticity"] <= 1e-12 and inv["min_eig"] >= -1e-9
    if "trace_drift" in inv:
        ok = ok and inv["trace_drift"] <= 1e-9
    else:
        ok = ok and inv["trace_increase"] <= 1e-15
    return ok


def rk4_observed_order(case: Case, mode=RelaxationMode.AS_WRITTEN, levels=4) -> float:
    """Order from successive differences of rho(t') under dt halving.

    Differences are taken on the samples shared by all levels.
    """
    t_window = case.grid.t_window
    n0 = case.grid.nt - 1
    runs = []
    for k in range(levels):
        t = np.linspace(-t_window / 2, t_window / 2, n0 * 2**k + 1)
        runs.append(time_slice(case, mode, t)[:: 2**k])
    d = [np.max(np.abs(b - a)) for a, b in zip(runs, runs[1:])]
    return math.log2(d[-2] / d[-1])


def z_observed_order(case: Case, mode=RelaxationMode.AS_WRITTEN, levels=(17, 33, 65, 129)) -> float:
    """Order of the z march from nested nz refinements of the output probe."""
    relax = RelaxationModel(case.medium.gamma2, case.medium.gamma3, mode)
    outs = []
    for nz in levels:
        g = replace(case.grid, nz=nz)
        r = simulate(case.medium, case.probe, case.switch, g, relax, keep_grid=False)
        outs.append(np.concatenate([r.output_p, r.output_s]))
    d = [np.max(np.abs(b - a)) for a, b in zip(outs, outs[1:])]
    return math.log2(d[-2] / d[-1])


def inert_identity_error(case: Case) -> float:
    m0 = replace(case.medium, density=0.0)
    r = simulate(m0, case.probe, case.switch, case.grid, keep_grid=False)
    scale = max(np.max(np.abs(r.input_p)), 1e-300)
    return float(
        max(np.max(np.abs(r.output_p - r.input_p)), np.max(np.abs(r.output_s - r.input_s))) / scale
    )


def symmetric_variant(case: Case) -> Case:
    """Same case with identical transitions and detunings on both arms."""
    m = replace(case.medium, lambda13=case.medium.lambda12, gamma3=case.medium.gamma2, mu13=case.medium.mu12)
    s = replace(case.switch, detuning=case.probe.detuning)
    ratio = resolve_peak_rabi(s, m.mu13, m.lambda13) / abs(s.detuning)
    if ratio > 0.3:
        s = replace(s, photon_count=s.photon_count * (0.3 / ratio) ** 2)
    nt = stable_nt(m, case.probe, s, case.grid.t_window)
    return Case(m, case.probe, s, replace(case.grid, nt=nt), case.label + "-sym")


def swap_symmetry_error(case: Case, mode=RelaxationMode.AS_WRITTEN) -> float:
    """Exchanging probe and switch must exchange the outputs."""
    c = symmetric_variant(case)
    relax = RelaxationModel(c.medium.gamma2, c.medium.gamma3, mode)
    a = simulate(c.medium, c.probe, c.switch, c.grid, relax, keep_grid=False)
    b = simulate(c.medium, c.switch, c.probe, c.grid, relax, keep_grid=False)
    scale = max(np.max(np.abs(a.input_p)), np.max(np.abs(a.input_s)))
    return float(
        max(np.max(np.abs(a.output_p - b.output_s)), np.max(np.abs(a.output_s - b.output_p))) / scale
    )
