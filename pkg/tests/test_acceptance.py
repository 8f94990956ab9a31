"""Acceptance criteria for the platoon simulator.

Each ``criterion_*`` function returns ``(passed, detail)``. The pytest tests
assert on them and a one-line PASS/FAIL verdict per criterion is printed in
the terminal summary. Running this file directly prints the same lines.
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy import stats

from cacc_sim.addons import (AddOnConfig, GripConfig, braking_critical_distance, friction_scaling,
                             rdot_mod_basic, ttc_inverse)
from cacc_sim.config import PRESETS, preset
from cacc_sim.connectivity import ChannelConfig, V2vMessage, sample_latency, transmit
from cacc_sim.controller import AccConfig, ControlMode, desired_headway, spacing_control_accel
from cacc_sim.io import write_trace_csv
from cacc_sim.metrics import OSCILLATION_WINDOW, rms_acceleration, string_stability_ratios, traffic_flow_capacity
from cacc_sim.scenario import run

try:
    from conftest import simulate
except ImportError:  # run as a script from elsewhere
    sys.path.insert(0, str(Path(__file__).parent))
    from conftest import simulate

G = 9.81
REFERENCE_RMS = {  # last follower, window [130, 210] s
    ("oscillatory-1-acc"): 0.121, ("oscillatory-1-cacc"): 0.101,
    ("oscillatory-2-acc"): 0.248, ("oscillatory-2-cacc"): 0.170,
}
RESULTS = {}


def _record(key, passed, detail):
    RESULTS[key] = (passed, detail)
    return passed, detail


def criterion_1_unit_oracles():
    notes = []
    ok = friction_scaling(0.2) == 4.5 and friction_scaling(0.9) == 1.0
    ok &= abs(friction_scaling(0.5) - 3.0) <= 1e-12
    cfg = AccConfig()
    d_set = desired_headway(25.0, cfg)
    a_cut_in = spacing_control_accel(d_set - 20, 0.0, 25.0, cfg)
    ok &= abs(a_cut_in + 1.0) <= 1e-9
    ok &= abs(ttc_inverse(5, 50) - 0.1) <= 1e-12
    notes.append(f"f(0.5)={friction_scaling(0.5):.12g} cut-in a={a_cut_in:.10g}")
    # quadrant table: closing on a closing leader or opening on a departing one magnifies
    add = AddOnConfig()
    bad = 0
    for Rdot in (-5.0, -1.0, -0.2, 0.2, 1.0, 5.0):
        for dv in (-6.0, -0.5, 0.5, 6.0):
            out = rdot_mod_basic(Rdot, dv, add)
            magnify = (Rdot < 0) == (dv > 0)
            want = abs(Rdot) * (1 + abs(dv) / add.n1 if magnify else 1 - abs(dv) / add.n1)
            bad += not (math.copysign(1, out) == math.copysign(1, Rdot) and math.isclose(abs(out), want))
    ok &= bad == 0
    notes.append(f"quadrant mismatches={bad}")
    return _record(1, bool(ok), "; ".join(notes))


def criterion_2_string_stability():
    r = {name: string_stability_ratios(simulate(name), "a", OSCILLATION_WINDOW).ratios
         for name in ("oscillatory-1-acc", "oscillatory-1-acc-h0.6", "oscillatory-1-cacc")}
    acc11 = max(r["oscillatory-1-acc"]) <= 1.02
    acc06 = max(r["oscillatory-1-acc-h0.6"]) > 1.05
    cacc06 = max(r["oscillatory-1-cacc"]) <= 1.02
    detail = (f"max ratio ACC h=1.1 {max(r['oscillatory-1-acc']):.4f} (<=1.02 {acc11}); "
              f"ACC h=0.6 {max(r['oscillatory-1-acc-h0.6']):.4f} (>1.05 {acc06}); "
              f"Connected h=0.6 {max(r['oscillatory-1-cacc']):.4f} (<=1.02 {cacc06})")
    return _record(2, acc11 and acc06 and cacc06, detail)


def _last_rms(name):
    trace = simulate(name)
    return rms_acceleration(trace, trace.n_vehicles - 1, OSCILLATION_WINDOW)


def criterion_3_comfort():
    ok, parts = True, []
    for variant, min_cut in ((1, 0.05), (2, 0.10)):
        acc, cacc = _last_rms(f"oscillatory-{variant}-acc"), _last_rms(f"oscillatory-{variant}-cacc")
        cut = 1 - cacc / acc
        ok &= cacc < acc and cut >= min_cut
        parts.append(f"osc{variant} ACC {acc:.4f} Connected {cacc:.4f} reduction {100 * cut:.1f}% (need >= {100 * min_cut:.0f}%)")
    for name, ref in REFERENCE_RMS.items():
        value = _last_rms(name)
        within = abs(value - ref) <= 0.5 * ref
        ok &= within
        if not within:
            parts.append(f"{name} {value:.4f} outside +-50% of {ref}")
    return _record(3, bool(ok), "; ".join(parts))


def _onset(trace, vehicle, after):
    idx = np.nonzero((trace.t > after) & (trace.a[:, vehicle] < -0.5))[0]
    return float(trace.t[idx[0]]) if len(idx) else math.inf


def criterion_4_braking_safety():
    collided = [name for name in PRESETS if simulate(name).collision is not None]
    acc, cacc = simulate("braking-dry-acc"), simulate("braking-dry-cacc")
    t0 = acc.spec.lead.t_start
    ego = acc.n_vehicles - 1  # Leading, Preceding, Ego
    onset_acc, onset_cacc = _onset(acc, ego, t0), _onset(cacc, ego, t0)
    during = cacc.t >= t0
    e_cacc = float(np.nanmin(cacc.spacing_error[during, ego]))
    e_acc = float(np.nanmin(acc.spacing_error[acc.t >= t0, ego]))
    ok = not collided and onset_cacc < onset_acc and e_cacc >= 0 and e_acc < 0
    detail = (f"collisions={collided or 'none'}; onset Connected {onset_cacc:.2f}s vs ACC {onset_acc:.2f}s; "
              f"min spacing error Connected {e_cacc:.2f} m (need >= 0), ACC {e_acc:.2f} m (need < 0)")
    return _record(4, ok, detail)


def criterion_5_low_friction():
    acc, cacc = simulate("braking-wet-acc"), simulate("braking-wet-cacc")
    mu_g = 0.5 * G
    t0 = cacc.spec.lead.t_start
    followers = slice(1, None)
    cacc_min = float(np.nanmin(cacc.a_des[:, followers]))
    acc_min = float(np.nanmin(acc.a_des[:, followers]))
    lim_ok = cacc_min >= -mu_g - 1e-6
    acc_ok = acc_min < -mu_g
    # independent inflation check: where d_brak exceeds RH(h), h_eff must exceed h
    spec, grip = cacc.spec, GripConfig()
    h = spec.h
    during = cacc.t >= t0
    h_ok, inflated, missed = True, 0, 0
    for i in range(1, cacc.n_vehicles):
        h_eff = cacc.h_eff[during, i]
        h_ok &= bool(np.all(h_eff >= h - 1e-12))
        for k in np.nonzero(during)[0]:
            rdot_mod = cacc.Rdot_mod[k, i]
            if cacc.mode[k, i] != list(ControlMode).index(ControlMode.SPACING) or not math.isfinite(rdot_mod):
                continue
            v = cacc.v[k, i]
            d_brak = braking_critical_distance(v, rdot_mod, spec.mu, -mu_g, grip)
            if d_brak > spec.acc.d_min + h * v:
                inflated += cacc.h_eff[k, i] > h
                missed += not cacc.h_eff[k, i] > h
    ok = lim_ok and acc_ok and h_ok and inflated > 0 and missed == 0
    detail = (f"Connected min a_des {cacc_min:.4f} (floor -{mu_g:.3f}, ok {lim_ok}); ACC min a_des {acc_min:.4f} "
              f"(need < -{mu_g:.3f}, ok {acc_ok}); h_eff >= {h} {h_ok}; inflated steps {inflated}, missed {missed}; "
              f"max h_eff {np.nanmax(cacc.h_eff[during, 1:]):.2f}")
    return _record(5, ok, detail)


def criterion_6_throughput():
    grid = np.arange(30, 131, 5) / 3.6
    ordered = all(traffic_flow_capacity(v, 0.6) > traffic_flow_capacity(v, 1.1) for v in grid)
    v = 80 / 3.6
    oracle = {h: 3600 * v / (2.0 + h * v + 4.3) for h in (0.6, 1.1)}
    close = all(abs(traffic_flow_capacity(v, h) - oracle[h]) <= 1 for h in oracle)
    anchors = abs(oracle[0.6] - 4074) <= 1 and abs(oracle[1.1] - 2602) <= 1
    detail = f"TFC@80km/h h=0.6 {traffic_flow_capacity(v, 0.6):.1f}, h=1.1 {traffic_flow_capacity(v, 1.1):.1f}"
    return _record(6, ordered and close and anchors, detail)


def criterion_7_channel():
    cfg = ChannelConfig()
    rng = np.random.default_rng(2024)
    n = 100_000
    delays, lost = np.empty(n), 0
    for k in range(n):
        when, was_lost = transmit(V2vMessage(0, 0.0, 0, 0, 0), cfg, rng)
        lost += was_lost
        delays[k] = when - (cfg.loss_penalty if was_lost else 0.0)
    a = (cfg.latency_min - cfg.latency_mean) / cfg.latency_std
    b = (cfg.latency_max - cfg.latency_mean) / cfg.latency_std
    N, phi = stats.norm.cdf, stats.norm.pdf
    oracle = (cfg.latency_min * N(a) + cfg.latency_max * (1 - N(b))
              + cfg.latency_mean * (N(b) - N(a)) + cfg.latency_std * (phi(a) - phi(b)))
    mc = float(np.clip(np.random.default_rng(99).normal(cfg.latency_mean, cfg.latency_std, 10 ** 6),
                       cfg.latency_min, cfg.latency_max).mean())
    mean_ok = abs(delays.mean() - oracle) <= 0.1 * oracle and abs(mc - oracle) <= 0.01 * oracle
    frac = lost / n
    loss_ok = abs(frac - cfg.packet_loss_prob) <= 0.002
    with tempfile.TemporaryDirectory() as tmp:
        spec = preset("braking-dry-cacc")
        paths = [write_trace_csv(run(spec), Path(tmp) / f"t{i}.csv") for i in range(2)]
        identical = paths[0].read_bytes() == paths[1].read_bytes()
    detail = (f"mean latency {1000 * delays.mean():.3f} ms vs oracle {1000 * oracle:.3f} ms; "
              f"penalised {100 * frac:.3f}% vs {100 * cfg.packet_loss_prob:.1f}%; byte-identical reruns {identical}")
    return _record(7, mean_ok and loss_ok and identical, detail)


def criterion_8_convergence():
    worst = []
    ok = True
    for name in PRESETS:
        trace = simulate(name)
        k = int(np.nonzero(trace.t < trace.spec.lead.t_start)[0][-1])
        e = float(np.max(np.abs(trace.spacing_error[k, 1:])))
        rd = float(np.max(np.abs(trace.Rdot[k, 1:])))
        ok &= e < 0.5 and rd < 0.1
        worst.append((e, rd, name))
    e, rd, name = max(worst)
    return _record(8, bool(ok), f"{len(PRESETS)} presets; worst |e|={e:.3f} m, |Rdot|={rd:.4f} m/s ({name})")


CRITERIA = [criterion_1_unit_oracles, criterion_2_string_stability, criterion_3_comfort,
            criterion_4_braking_safety, criterion_5_low_friction, criterion_6_throughput,
            criterion_7_channel, criterion_8_convergence]


def verdict_line(number):
    passed, detail = RESULTS[number]
    return f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"


def test_criterion_1_unit_oracles():
    passed, detail = criterion_1_unit_oracles()
    assert passed, detail


def test_criterion_2_string_stability():
    passed, detail = criterion_2_string_stability()
    assert passed, detail


def test_criterion_3_comfort_ordering():
    passed, detail = criterion_3_comfort()
    assert passed, detail


def test_criterion_4_braking_safety():
    passed, detail = criterion_4_braking_safety()
    assert passed, detail


def test_criterion_5_low_friction():
    passed, detail = criterion_5_low_friction()
    assert passed, detail


def test_criterion_6_throughput():
    passed, detail = criterion_6_throughput()
    assert passed, detail


def test_criterion_7_channel_statistics():
    passed, detail = criterion_7_channel()
    assert passed, detail


def test_criterion_8_convergence():
    passed, detail = criterion_8_convergence()
    assert passed, detail


if __name__ == "__main__":
    failed = 0
    for check in CRITERIA:
        passed, _ = check()
        failed += not passed
    for number in sorted(RESULTS):
        print(verdict_line(number))
    sys.exit(1 if failed else 0)
