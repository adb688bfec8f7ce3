import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starkphase.bloch import RelaxationMode
from starkphase.config import (
    DEFAULT_CONFIG_TEXT,
    BeamSection,
    GridSection,
    MediumSection,
    ModelSection,
    RunConfig,
    default_config,
    parse_config,
    serialize_config,
)
from starkphase.errors import ConfigError

G = 2 * math.pi * 6e6


def test_default_config_is_reference_point():
    medium, probe, switch, grid, relax = default_config().build()
    assert medium.density_length * 1e-4 == pytest.approx(1.5e13)
    assert medium.length == pytest.approx(10e-3)
    assert medium.lambda12 == pytest.approx(780e-9)
    assert medium.gamma2 == pytest.approx(G)
    assert probe.detuning == pytest.approx(160 * G)
    assert switch.detuning == pytest.approx(160 * G)
    assert probe.tau == pytest.approx(20e-9) and switch.tau == pytest.approx(20e-9)
    assert switch.photon_count == 5000 and probe.photon_count == 500
    assert switch.area == pytest.approx(780e-9**2)
    assert grid.t_window == pytest.approx(16 * 20e-9)
    assert relax.mode is RelaxationMode.AS_WRITTEN


def test_derived_quantities_echoed():
    d = default_config().derived()
    assert d["mu12_cm"] == pytest.approx(2.519e-29, rel=1e-3)
    assert d["switch_peak_rabi_mhz"] == pytest.approx(253.59, rel=1e-4)
    assert d["density_m3"] == pytest.approx(1.5e19)


def test_default_round_trip():
    cfg = default_config()
    assert parse_config(serialize_config(cfg)) == cfg


def test_empty_document_names_first_missing_key():
    with pytest.raises(ConfigError, match=r"missing required key \[medium\] lambda12_nm"):
        parse_config("")


def test_missing_key_in_present_section():
    text = DEFAULT_CONFIG_TEXT.replace("tau_ns = 20\nphotons = 5000", "photons = 5000")
    with pytest.raises(ConfigError, match=r"missing required key \[switch\] tau_ns"):
        parse_config(text)


def test_unknown_key_reports_line():
    text = DEFAULT_CONFIG_TEXT.replace("[grid]\n", "[grid]\nnzz = 4\n")
    line = text.splitlines().index("nzz = 4") + 1
    with pytest.raises(ConfigError, match=rf"\[grid\] unknown key 'nzz' \(line {line}\)"):
        parse_config(text)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(DEFAULT_CONFIG_TEXT + "\n[extra]\na = 1\n")


def test_non_numeric_value_reports_location():
    text = DEFAULT_CONFIG_TEXT.replace("tau_ns = 20\nphotons = 500", "tau_ns = fast\nphotons = 500")
    line = text.splitlines().index("tau_ns = fast") + 1
    with pytest.raises(ConfigError, match=rf"\[probe\] tau_ns \(line {line}\): expected a number"):
        parse_config(text)


def test_photons_and_rabi_conflict():
    text = DEFAULT_CONFIG_TEXT.replace("photons = 5000", "photons = 5000\npeak_rabi_mhz = 100")
    with pytest.raises(ConfigError, match=r"\[switch\].*mutually exclusive"):
        parse_config(text)


@pytest.mark.parametrize(
    "old,new,match",
    [
        ("relaxation = as_written", "relaxation = lossy", "relaxation must be one of"),
        ("t_window_tau = 16", "t_window_tau = 8", "t_window_tau must be >= 12"),
        ("nz = 1024", "nz = 1", "nz must be >= 2"),
        ("area = lambda2\n\n[switch]", "area = lambda3\n\n[switch]", "area must be"),
        ("gamma2_mhz = 6", "gamma2_mhz = -6", "gamma2_mhz must be positive"),
        ("density_length_cm2 = 1.5e13", "density_length_cm2 = 1.5e13\ndensity_m3 = 1e19", "not both"),
    ],
)
def test_invariant_violations(old, new, match):
    assert old in DEFAULT_CONFIG_TEXT
    with pytest.raises(ConfigError, match=match):
        parse_config(DEFAULT_CONFIG_TEXT.replace(old, new, 1))


def test_density_with_explicit_length():
    text = DEFAULT_CONFIG_TEXT.replace("density_length_cm2 = 1.5e13\nlength_mm = 10", "density_m3 = 3e19\nlength_mm = 5")
    medium = parse_config(text).build()[0]
    assert medium.density == 3e19 and medium.length == pytest.approx(5e-3)
    with pytest.raises(ConfigError, match="length_mm"):
        parse_config(DEFAULT_CONFIG_TEXT.replace("density_length_cm2 = 1.5e13\nlength_mm = 10", "density_m3 = 3e19"))


def test_length_defaults_to_ten_mm():
    cfg = parse_config(DEFAULT_CONFIG_TEXT.replace("length_mm = 10\n", ""))
    assert cfg.build()[0].length == pytest.approx(10e-3)


def test_peak_rabi_and_explicit_area():
    text = DEFAULT_CONFIG_TEXT.replace("photons = 5000\narea = lambda2", "peak_rabi_mhz = 100\narea = 1e-12")
    _, _, switch, _, _ = parse_config(text).build()
    assert switch.peak_rabi == pytest.approx(2 * math.pi * 100e6)
    assert switch.area == 1e-12


def test_comments_and_case_sensitivity():
    text = DEFAULT_CONFIG_TEXT.replace("nz = 1024", "nz = 64   # coarse")
    assert parse_config(text).grid.nz == 64
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(DEFAULT_CONFIG_TEXT.replace("nz = 1024", "NZ = 1024"))


def test_with_value_swaps_exclusive_keys():
    cfg = default_config()
    c2 = cfg.with_value("switch.peak_rabi_mhz", 50.0)
    assert c2.switch.photons is None and c2.switch.peak_rabi_mhz == 50.0
    assert cfg.with_value("grid.nz", 64.0).grid.nz == 64
    with pytest.raises(ConfigError):
        cfg.with_value("switch.photns", 1.0)
    with pytest.raises(ConfigError):
        cfg.with_value("photons", 1.0)


pos = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)
beams = st.builds(
    BeamSection,
    detuning_gamma=pos(-1e3, 1e3),
    tau_ns=pos(1e-3, 1e3),
    photons=pos(0, 1e6),
    area=st.one_of(st.just("lambda2"), pos(1e-15, 1e-8)),
    center_ns=pos(-100, 100),
) | st.builds(
    BeamSection,
    detuning_gamma=pos(-1e3, 1e3),
    tau_ns=pos(1e-3, 1e3),
    peak_rabi_mhz=pos(0, 1e4),
)
media = st.builds(
    MediumSection,
    lambda12_nm=pos(100, 3000),
    lambda13_nm=pos(100, 3000),
    gamma2_mhz=pos(1e-3, 100),
    gamma3_mhz=pos(1e-3, 100),
    density_length_cm2=pos(0, 1e16),
    length_mm=st.one_of(st.none(), pos(1e-3, 1e3)),
    mu12=st.one_of(st.none(), pos(1e-31, 1e-27)),
)
configs = st.builds(
    RunConfig,
    medium=media,
    probe=beams,
    switch=beams,
    grid=st.builds(GridSection, nz=st.integers(2, 5000), nt=st.integers(16, 10**6), t_window_tau=pos(12, 100)),
    model=st.builds(ModelSection, relaxation=st.sampled_from(["as_written", "repopulating"])),
)


@settings(max_examples=200, deadline=None)
@given(cfg=configs)
def test_round_trip_random_configs(cfg):
    assert parse_config(serialize_config(cfg)) == cfg
