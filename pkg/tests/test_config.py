import pytest
from hypothesis import given, settings, strategies as st

from cacc_sim.config import PRESETS, ConfigError, parse_config, preset, serialize
from cacc_sim.scenario import ACC, CACC


def test_presets():
    spec = preset("braking-dry-acc")
    assert (spec.n_vehicles, spec.mu, spec.controller, spec.h) == (3, 0.8, ACC, 1.1)
    spec = preset("oscillatory-1-cacc")
    assert (spec.n_vehicles, spec.lead.period, spec.controller, spec.h) == (8, 40.0, CACC, 0.6)
    with pytest.raises(ConfigError, match="unknown preset"):
        preset("nope")


@pytest.mark.parametrize("name", list(PRESETS))
def test_round_trip(name):
    spec = preset(name)
    assert parse_config(serialize(spec)).spec == spec


def test_negative_time_gap():
    with pytest.raises(ConfigError, match="h must be positive"):
        parse_config("[run]\npreset = braking-dry-acc\n[acc]\nh = -1\n")


def test_time_gap_rederives_controller_constants():
    spec = parse_config("[run]\npreset = braking-dry-acc\n[acc]\nh = 0.8\n").spec
    assert spec.acc.tau_v == 0.8 and spec.acc.tau_d == pytest.approx(20 / 0.8)


def test_overrides_applied():
    cfg = parse_config("[run]\npreset = braking-wet-cacc\nseed = 9\nout = somewhere\n"
                       "[scenario]\nduration = 30\n[channel]\npacket_loss_prob = 0.05\n")
    spec = cfg.resolved_spec()
    assert spec.duration == 30 and spec.channel.packet_loss_prob == 0.05 and spec.seed == 9
    assert cfg.out_dir == "somewhere"


@pytest.mark.parametrize("text,match", [
    ("[run]\npreset = braking-dry-acc\n[bogus]\nx = 1\n", "unknown section"),
    ("[run]\npreset = braking-dry-acc\n[acc]\nfoo = 1\n", "foo"),
    ("[run]\npreset = braking-dry-acc\nbar = 1\n", "unknown key"),
    ("[scenario]\nmu = 0.8\n", "missing required key"),
    ("this is not ini\n", "syntax error"),
    ("[run]\npreset = braking-dry-acc\n[acc]\nh = fast\n", r"acc\.h"),
    ("[run]\npreset = braking-dry-acc\n[run]\nseed = 1\n", "syntax error"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match=r"line\s+3"):
        parse_config("[run]\npreset = braking-dry-acc\nbroken line\n")


def test_sweep_product():
    cfg = parse_config("[run]\npreset = braking-dry-acc\n[sweep]\nh = 0.6, 1.1\ncontroller = acc, cacc\n")
    runs = cfg.expand()
    assert len(runs) == 4
    combos = {(s.h, s.controller) for _, s in runs}
    assert combos == {(0.6, ACC), (0.6, CACC), (1.1, ACC), (1.1, CACC)}
    assert all(s.acc.tau_v == s.h for _, s in runs)
    assert len({label for label, _ in runs}) == 4


@settings(max_examples=30, deadline=None)
@given(h=st.floats(0.2, 3.0), mu=st.floats(0.1, 1.0), gap=st.floats(5, 300), seed=st.integers(0, 2**31))
def test_round_trip_property(h, mu, gap, seed):
    text = f"[run]\npreset = braking-dry-cacc\n[acc]\nh = {h!r}\n[scenario]\nmu = {mu!r}\ninitial_gap = {gap!r}\n" \
           f"[channel]\nseed = {seed}\n"
    spec = parse_config(text).spec
    assert parse_config(serialize(spec)).spec == spec
