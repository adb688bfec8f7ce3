"""
Command-line front end: estimate, simulate, design and sweep.

    starkphase estimate --config run.ini
    starkphase simulate --config run.ini --switch both --out out/
    starkphase design   --config run.ini --bandwidths 25,50,100,200 --out out/
    starkphase sweep    --config run.ini --param switch.photons --values 0,1000,2000 --out out/

Without ``--config`` the built-in reference configuration is used.
Exit codes: 0 ok, 2 configuration error, 3 numerical instability,
4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import json
import math
import multiprocessing as mp
import os
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import TWO_PI_MHZ, RunConfig, default_config, parse_config, serialize_config
from .errors import (
    ConfigError,
    DomainError,
    NumericalInstabilityError,
    SingularityError,
    StarkPhaseError,
    UsageError,
    ValidityWarning,
)
from .physics import apply_design, design_for_bandwidth, estimate_cps_absorption, resolve_photons
from .propagation import PropagationResult, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INSTABILITY = 3
EXIT_PARTIAL = 4

SIG = 12
ENVELOPE_COLUMNS = ("t_ns", "re_omega_p_mhz", "im_omega_p_mhz", "re_omega_s_mhz", "im_omega_s_mhz")
PHASE_COLUMNS = ("z_mm", "phase_off_rad", "phase_on_rad", "cps_rad")
DESIGN_COLUMNS = (
    "bandwidth_mhz", "tau_ns", "detuning_gamma", "density_length_cm2",
    "cps_rad", "absorption", "transmission_p",
)
SWEEP_COLUMNS = ("index", "value", "cps_rad", "transmission_p", "transmission_s", "error")


def fmt(x) -> str:
    """Fixed 12-significant-digit rendering; None becomes an empty cell."""
    if x is None:
        return ""
    x = float(x)
    if x == 0:
        return "0"  # no "-0"
    return f"{x:.{SIG}g}"


def _round(x):
    if isinstance(x, float):
        return float(fmt(x)) if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


class OutputSet:
    """Files written by one command; all of them are removed on failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.paths: list[Path] = []

    def __enter__(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            for p in self.paths:
                p.unlink(missing_ok=True)
        return False

    def _path(self, name: str) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def csv(self, name: str, columns: Sequence[str], rows) -> Path:
        p = self._path(name)
        lines = [",".join(columns)]
        lines += [",".join(cell if isinstance(cell, str) else fmt(cell) for cell in row) for row in rows]
        p.write_text("\n".join(lines) + "\n")
        return p

    def json(self, name: str, record: dict) -> Path:
        p = self._path(name)
        p.write_text(json.dumps(_round(record), indent=2, sort_keys=True) + "\n")
        return p


def _capture_warnings(fn, *args, **kw):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ValidityWarning)
        value = fn(*args, **kw)
    msgs = []
    for w in caught:
        if issubclass(w.category, ValidityWarning) and str(w.message) not in msgs:
            msgs.append(str(w.message))
    return value, msgs


# -- estimate -----------------------------------------------------------------


def cmd_estimate(cfg: RunConfig) -> dict:
    """Closed-form CPS and absorption for the configured operating point."""
    medium, probe, switch, _, _ = cfg.build()
    est, msgs = _capture_warnings(estimate_cps_absorption, medium, probe, switch)
    return {
        "cps_rad": est.cps,
        "absorption": est.absorption,
        "transmission_p": est.transmission,
        "phi1_rad": est.phi1,
        "stark_shift_mhz": est.stark_shift / TWO_PI_MHZ,
        "switch_photons": resolve_photons(switch, medium.mu13, medium.lambda13),
        "warnings": msgs,
        "derived": cfg.derived(),
    }


# -- simulate -----------------------------------------------------------------


def _envelope_rows(t, p, s):
    scale = 1.0 / TWO_PI_MHZ
    return zip(t * 1e9, p.real * scale, p.imag * scale, s.real * scale, s.imag * scale)


def _write_envelopes(out: OutputSet, tag: str, res: PropagationResult) -> None:
    out.csv(f"envelopes_{tag}_z0.csv", ENVELOPE_COLUMNS, _envelope_rows(res.t, res.input_p, res.input_s))
    out.csv(f"envelopes_{tag}_zL.csv", ENVELOPE_COLUMNS, _envelope_rows(res.t, res.output_p, res.output_s))


def cmd_simulate(cfg: RunConfig, switch_mode: str = "both", out_dir: Path = Path("out")) -> dict:
    """Run the propagation (switch on, off or both) and write CSVs plus summary.json."""
    if switch_mode not in ("on", "off", "both"):
        raise UsageError(f"switch mode must be on, off or both, got {switch_mode!r}")
    medium, probe, switch, grid, relax = cfg.build()
    msgs: list = []
    off = on = None
    with OutputSet(out_dir) as out:
        if switch_mode in ("off", "both"):
            off, w = _capture_warnings(simulate, medium, probe, None, grid, relax, False)
            msgs += [m for m in w if m not in msgs]
            _write_envelopes(out, "off", off)
        if switch_mode in ("on", "both"):
            on, w = _capture_warnings(simulate, medium, probe, switch, grid, relax, False)
            msgs += [m for m in w if m not in msgs]
            _write_envelopes(out, "on", on)

        z_mm = grid.z * 1e3
        rows = []
        for i, z in enumerate(z_mm):
            ph_off = off.phase_vs_z[i] if off is not None else None
            ph_on = on.phase_vs_z[i] if on is not None else None
            cps = ph_on - ph_off if (on is not None and off is not None) else None
            rows.append((z, ph_off, ph_on, cps))
        out.csv("phase.csv", PHASE_COLUMNS, rows)

        main = on if on is not None else off
        summary = {
            "switch_mode": switch_mode,
            "cps_rad": rows[-1][3],
            "transmission_p": main.transmission_p,
            "transmission_s": on.transmission_s if on is not None else None,
            "transmission_p_off": off.transmission_p if off is not None else None,
            "transmission_p_on": on.transmission_p if on is not None else None,
            "phase_off_rad": rows[-1][1],
            "phase_on_rad": rows[-1][2],
            "grid": {"nz": grid.nz, "nt": grid.nt, "t_window_ns": grid.t_window * 1e9, "z_max_mm": grid.z_max * 1e3},
            "relaxation": relax.mode.value,
            "warnings": msgs,
            "derived": cfg.derived(),
        }
        out.json("summary.json", summary)
    return summary


# -- design -------------------------------------------------------------------


def design_config(cfg: RunConfig, bandwidth_mhz: float) -> RunConfig:
    """Configuration rescaled to pulse bandwidth 1/tau (given in MHz)."""
    medium, probe, switch, _, _ = cfg.build()
    n_s = resolve_photons(switch, medium.mu13, medium.lambda13)
    point = design_for_bandwidth(bandwidth_mhz * 1e6, n_s, medium, probe, switch)
    _, new_probe, new_switch = apply_design(point, n_s, medium, probe, switch)
    g2 = medium.gamma2
    return replace(
        cfg,
        medium=replace(cfg.medium, density_length_cm2=point.density_length * 1e-4, density_m3=None,
                       length_mm=medium.length * 1e3),
        probe=replace(cfg.probe, detuning_gamma=point.delta_p / g2, tau_ns=point.tau * 1e9,
                      photons=new_probe.photon_count, peak_rabi_mhz=None,
                      center_ns=new_probe.center_time * 1e9),
        switch=replace(cfg.switch, detuning_gamma=point.delta_s / g2, tau_ns=point.tau * 1e9,
                       photons=new_switch.photon_count, peak_rabi_mhz=None,
                       center_ns=new_switch.center_time * 1e9),
    )


def cmd_design(cfg: RunConfig, bandwidths_mhz: Sequence[float], out_dir: Optional[Path] = None) -> list:
    """Design table with the closed-form estimate re-run at every point."""
    rows = []
    for bw in bandwidths_mhz:
        dcfg = design_config(cfg, bw)
        est = cmd_estimate(dcfg)
        rows.append({
            "bandwidth_mhz": bw,
            "tau_ns": dcfg.probe.tau_ns,
            "detuning_gamma": dcfg.probe.detuning_gamma,
            "density_length_cm2": dcfg.medium.density_length_cm2,
            "cps_rad": est["cps_rad"],
            "absorption": est["absorption"],
            "transmission_p": est["transmission_p"],
        })
    if out_dir is not None:
        with OutputSet(out_dir) as out:
            out.csv("design.csv", DESIGN_COLUMNS, [[r[c] for c in DESIGN_COLUMNS] for r in rows])
    return rows


# -- sweep --------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("sweep values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_range(cls, param: str, start: float, stop: float, count: int, log: bool = False) -> "SweepSpec":
        if count < 1:
            raise ConfigError("sweep count must be >= 1")
        if count > 1 and start == stop:
            raise ConfigError("ranged sweep must be strictly monotone")
        if log:
            if start <= 0 or stop <= 0:
                raise ConfigError("log sweep needs positive bounds")
            vals = np.geomspace(start, stop, count)
        else:
            vals = np.linspace(start, stop, count)
        return cls(param, tuple(float(v) for v in vals))


def _run_point(cfg_text: str, param: str, index: int, value: float, kind: str, switch_mode: str, point_dir: str):
    """Worker body; returns a plain dict so it pickles cleanly."""
    row = {"index": index, "value": value, "cps_rad": None, "transmission_p": None,
           "transmission_s": None, "error": ""}
    try:
        cfg = parse_config(cfg_text).with_value(param, value)
        if kind == "estimate":
            summary = cmd_estimate(cfg)
            with OutputSet(Path(point_dir)) as out:
                out.json("summary.json", summary)
        else:
            summary = cmd_simulate(cfg, switch_mode, Path(point_dir))
            row["transmission_s"] = summary["transmission_s"]
        row["cps_rad"] = summary["cps_rad"]
        row["transmission_p"] = summary["transmission_p"]
    except StarkPhaseError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    return row


def cmd_sweep(
    cfg: RunConfig,
    sweep: SweepSpec,
    out_dir: Path,
    kind: str = "estimate",
    switch_mode: str = "both",
    workers: int = 1,
) -> list:
    """Independent runs per sweep value in ``out_dir/point_NNNN``; aggregate in sweep.csv."""
    if kind not in ("estimate", "simulate"):
        raise UsageError(f"sweep kind must be estimate or simulate, got {kind!r}")
    cfg.with_value(sweep.param, sweep.values[0])  # validate the path up front
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = serialize_config(cfg)
    jobs = [
        (text, sweep.param, i, v, kind, switch_mode, str(out_dir / f"point_{i:04d}"))
        for i, v in enumerate(sweep.values)
    ]
    if workers <= 1:
        rows = [_run_point(*job) for job in jobs]
    else:
        ctx = mp.get_context("spawn")
        with cf.ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            rows = list(pool.map(_run_point, *zip(*jobs)))
    rows.sort(key=lambda r: (r["value"], r["index"]))
    with OutputSet(out_dir) as out:
        out.csv(
            "sweep.csv",
            SWEEP_COLUMNS,
            [[str(r["index"]), r["value"], r["cps_rad"], r["transmission_p"], r["transmission_s"], r["error"]]
             for r in rows],
        )
    return rows


# -- entry point --------------------------------------------------------------


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        return default_config()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _print_record(record: dict, prefix: str = "") -> None:
    for key in sorted(record):
        v = record[key]
        if isinstance(v, dict):
            _print_record(v, prefix + key + ".")
        elif isinstance(v, list):
            for m in v:
                print(f"warning: {m}", file=sys.stderr)
        else:
            print(f"{prefix}{key} = {fmt(v) if isinstance(v, float) else v}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starkphase", description="ac-Stark conditional phase shift simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="INI configuration (default: built-in reference point)")
        if out:
            p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("estimate", help="closed-form CPS and absorption")
    common(p, out=False)
    p = sub.add_parser("simulate", help="full Maxwell-Bloch propagation")
    common(p)
    p.add_argument("--switch", choices=("on", "off", "both"), default="both")
    p = sub.add_parser("design", help="scale the operating point to other bandwidths")
    common(p)
    p.add_argument("--bandwidths", required=True, help="comma-separated 1/tau values in MHz")
    p = sub.add_parser("sweep", help="run a parameter sweep")
    common(p)
    p.add_argument("--param", required=True, help="section.key, e.g. switch.photons")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--values", help="comma-separated values")
    g.add_argument("--range", nargs=3, metavar=("START", "STOP", "COUNT"))
    p.add_argument("--log", action="store_true", help="geometric spacing for --range")
    p.add_argument("--kind", choices=("estimate", "simulate"), default="estimate")
    p.add_argument("--switch", choices=("on", "off", "both"), default="both")
    p.add_argument("--workers", type=int, default=1)
    sub.add_parser("default-config", help="print the built-in configuration")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "default-config":
            sys.stdout.write(serialize_config(default_config()))
            return EXIT_OK
        cfg = load_config(args.config)
        if args.command == "estimate":
            _print_record(cmd_estimate(cfg))
        elif args.command == "simulate":
            _print_record(cmd_simulate(cfg, args.switch, Path(args.out)))
        elif args.command == "design":
            rows = cmd_design(cfg, _floats(args.bandwidths), Path(args.out))
            print(",".join(DESIGN_COLUMNS))
            for r in rows:
                print(",".join(fmt(r[c]) for c in DESIGN_COLUMNS))
        elif args.command == "sweep":
            if args.values is not None:
                spec = SweepSpec(args.param, tuple(_floats(args.values)))
            else:
                start, stop, count = args.range
                try:
                    spec = SweepSpec.from_range(args.param, float(start), float(stop), int(count), args.log)
                except ValueError:
                    raise ConfigError("--range expects START STOP COUNT numbers") from None
            rows = cmd_sweep(cfg, spec, Path(args.out), args.kind, args.switch, args.workers)
            failed = [r for r in rows if r["error"]]
            for r in failed:
                print(f"point {r['index']} (value {fmt(r['value'])}) failed: {r['error']}", file=sys.stderr)
            print(f"wrote {Path(args.out) / 'sweep.csv'} ({len(rows) - len(failed)}/{len(rows)} points ok)")
            if failed:
                return EXIT_PARTIAL
    except NumericalInstabilityError as exc:
        print(f"error: numerical instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except (ConfigError, DomainError, SingularityError, UsageError, StarkPhaseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
