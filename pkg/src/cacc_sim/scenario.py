"""Scenario definitions and the closed-loop platoon simulation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import dynamics
from .addons import (AddOnConfig, GripConfig, GripEstimate, Snapshot, braking_critical_distance,
                     connected_rdot, grip_accel_limits, modified_time_gap)
from .connectivity import Channel, ChannelConfig, V2vMessage
from .controller import AccConfig, AccController, ControlMode, RangeMeasurement, desired_headway

log = logging.getLogger(__name__)

KMH = 1 / 3.6

BRAKING = "braking"
OSCILLATORY = "oscillatory"
ACC = "acc"
CACC = "cacc"

MODE_CODES = {m: i for i, m in enumerate(ControlMode)}
MODES = list(ControlMode)


class ScenarioError(ValueError):
    """Inconsistent scenario description."""


@dataclass(frozen=True)
class LeadProfile:
    """Imposed motion of the platoon head.

    ``braking``: cruise at ``v0`` then decelerate at ``decel`` from
    ``t_start`` until ``v_target``. ``oscillatory``: cruise at ``v0`` then
    ``v0 + amplitude*sin(2*pi*(t - t_start)/period)``.
    """

    kind: str = BRAKING
    v0: float = 90 * KMH
    t_start: float = 150.0
    v_target: float = 30 * KMH
    decel: float = -4.5
    amplitude: float = 4 * KMH
    period: float = 40.0

    def __post_init__(self):
        if self.kind not in (BRAKING, OSCILLATORY):
            raise ScenarioError(f"unknown lead profile kind {self.kind!r}")
        if self.v0 <= 0:
            raise ScenarioError("lead v0 must be positive")
        if self.kind == BRAKING:
            if not self.decel < 0:
                raise ScenarioError("braking deceleration must be negative")
            if not 0 <= self.v_target <= self.v0:
                raise ScenarioError("braking target speed must lie in [0, v0]")
        else:
            if self.amplitude < 0:
                raise ScenarioError("amplitude must be non-negative")
            if not self.period > 0:
                raise ScenarioError("period must be positive")
            if self.amplitude > self.v0:
                raise ScenarioError("amplitude exceeds mean speed")

    @property
    def t_end(self) -> float:
        """End of the braking phase (braking profiles only)."""
        return self.t_start + (self.v0 - self.v_target) / -self.decel

    def kinematics(self, t: float) -> tuple[float, float, float]:
        """Displacement since t=0, speed and acceleration at ``t``."""
        v0, ts = self.v0, self.t_start
        if t < ts:
            return v0 * t, v0, 0.0
        tau = t - ts
        if self.kind == BRAKING:
            t_brk = self.t_end - ts
            if tau < t_brk:
                return v0 * t + 0.5 * self.decel * tau * tau, v0 + self.decel * tau, self.decel
            s_brk = v0 * t_brk + 0.5 * self.decel * t_brk * t_brk
            return v0 * ts + s_brk + self.v_target * (tau - t_brk), self.v_target, 0.0
        w = 2 * math.pi / self.period
        A = self.amplitude
        return (v0 * t + A / w * (1 - math.cos(w * tau)),
                v0 + A * math.sin(w * tau), A * w * math.cos(w * tau))


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = BRAKING
    n_vehicles: int = 3
    controller: str = ACC
    mu: float = 0.8
    initial_gap: float = 140.0
    lead: LeadProfile = field(default_factory=LeadProfile)
    acc: AccConfig = field(default_factory=AccConfig)
    addons: AddOnConfig = field(default_factory=AddOnConfig)
    grip: GripConfig = field(default_factory=GripConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    duration: float = 200.0
    dt: float = 0.01
    tau_lag: float = 0.5
    vehicle_length: float = 4.3
    # grip estimate known from t=0; otherwise it appears after the first
    # deceleration beyond grip_gate_decel
    grip_known: bool = True
    grip_gate_decel: float = 2.0
    extra_mass: float = 160.0  # metadata only; no effect on the lag model
    name: str = ""

    def __post_init__(self):
        if self.kind not in (BRAKING, OSCILLATORY):
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.kind != self.lead.kind:
            raise ScenarioError("lead profile kind does not match scenario kind")
        if self.controller not in (ACC, CACC):
            raise ScenarioError(f"unknown controller {self.controller!r}")
        if self.n_vehicles < 2:
            raise ScenarioError("n_vehicles must be at least 2")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if not self.mu > 0:
            raise ScenarioError("mu must be positive")
        if not self.initial_gap > 0:
            raise ScenarioError("initial_gap must be positive")
        if not self.tau_lag > 0:
            raise ScenarioError("tau_lag must be positive")
        if not self.vehicle_length > 0:
            raise ScenarioError("vehicle_length must be positive")

    @property
    def h(self) -> float:
        return self.acc.h

    @property
    def seed(self) -> int:
        return self.channel.seed

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def build_braking_scenario(mu: float = 0.8, controller: str = ACC, h: float = 1.1,
                           **overrides) -> ScenarioSpec:
    """Three-car approach and sudden lead braking (90 -> 30 km/h at -4.5 m/s^2 from t=150 s)."""
    spec = ScenarioSpec(
        kind=BRAKING, n_vehicles=3, controller=controller, mu=mu, initial_gap=140.0,
        lead=LeadProfile(kind=BRAKING, v0=90 * KMH, t_start=150.0, v_target=30 * KMH, decel=-4.5),
        acc=AccConfig(v_user=100 * KMH, h=h),
        addons=AddOnConfig(n1=100 * KMH),
        duration=200.0,
        name=f"braking-mu{mu:g}-{controller}-h{h:g}",
    )
    return replace(spec, **overrides) if overrides else spec


def build_oscillatory_scenario(variant: int = 1, controller: str = ACC, h: float = 1.1,
                               **overrides) -> ScenarioSpec:
    """Eight-car string behind a lead oscillating 80 +/- 4 km/h (T = 40 s or 20 s)."""
    if variant not in (1, 2):
        raise ScenarioError(f"oscillatory variant must be 1 or 2, got {variant}")
    period = 40.0 if variant == 1 else 20.0
    spec = ScenarioSpec(
        kind=OSCILLATORY, n_vehicles=8, controller=controller, mu=0.8, initial_gap=60.0,
        lead=LeadProfile(kind=OSCILLATORY, v0=80 * KMH, t_start=130.0,
                         amplitude=4 * KMH, period=period),
        acc=AccConfig(v_user=100 * KMH, h=h),
        addons=AddOnConfig(n1=100 * KMH),
        duration=210.0,
        name=f"oscillatory-{variant}-{controller}-h{h:g}",
    )
    return replace(spec, **overrides) if overrides else spec


TRACE_COLUMNS = ("t", "vehicle", "x", "v", "a", "a_des", "mode", "R", "Rdot", "Rdot_mod",
                 "RH", "h_eff", "spacing_error")


@dataclass
class CollisionEvent:
    step: int
    t: float
    follower: int
    R: float


@dataclass
class SimTrace:
    """Per-step, per-vehicle time series. Arrays are shaped (steps, vehicles)."""

    spec: ScenarioSpec
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    a_des: np.ndarray
    mode: np.ndarray  # index into MODES; -1 for the lead
    R: np.ndarray
    Rdot: np.ndarray
    Rdot_mod: np.ndarray
    RH: np.ndarray
    h_eff: np.ndarray
    spacing_error: np.ndarray
    collision: Optional[CollisionEvent] = None

    @property
    def n_vehicles(self) -> int:
        return self.x.shape[1]

    @property
    def n_steps(self) -> int:
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def mode_names(self, vehicle: int) -> list[str]:
        return [MODES[m].value if m >= 0 else "Imposed" for m in self.mode[:, vehicle]]


def _radar(prev: dynamics.VehicleState, ego: dynamics.VehicleState, R_s: float) -> RangeMeasurement:
    R = prev.rear - ego.x
    Rdot = prev.v - ego.v
    return RangeMeasurement(R, Rdot, 0 < R <= R_s)


def _snapshot(inbox, sender: int, now: float) -> Optional[Snapshot]:
    if sender < 0:
        return None
    inbox.drain(now)
    msg = inbox.latest.get(sender)
    if msg is None:
        return None
    return Snapshot(msg.x, msg.v, msg.a, now - msg.t_sent)


def run(spec: ScenarioSpec) -> SimTrace:
    """Simulate the platoon at a fixed step.

    Per step and follower: radar measurement of the vehicle ahead, V2V inbox
    drain (connected controller), grip-aware limits and time gap, controller
    update, state broadcast, then the lag-model integration. Vehicle ``i``
    listens to ``i-1`` and ``i-2``. The run stops at the first step where a
    gap closes to zero.
    """
    n, dt, N = spec.n_vehicles, spec.dt, spec.n_steps
    acc_cfg = spec.acc
    if acc_cfg.R_s <= desired_headway(max(acc_cfg.v_user, spec.lead.v0), acc_cfg):
        raise ScenarioError("radar range shorter than the desired headway at set speed")
    lag = dynamics.LagModel(spec.tau_lag)
    connected = spec.controller == CACC
    L = spec.vehicle_length

    lead0 = (n - 1) * (spec.initial_gap + L)
    states = [dynamics.VehicleState(lead0 - i * (spec.initial_gap + L), spec.lead.v0, 0.0, L)
              for i in range(n)]
    ctrls = [None] + [AccController(acc_cfg) for _ in range(n - 1)]
    channel = Channel(spec.channel) if connected else None
    grip_seen = [spec.grip_known] * n
    # broadcast cadence in whole steps; a period shorter than dt sends every step
    send_every = max(1, int(round(spec.channel.msg_period / dt))) if connected else 1

    shape = (N, n)
    cols = {c: np.full(shape, np.nan) for c in
            ("x", "v", "a", "a_des", "R", "Rdot", "Rdot_mod", "RH", "h_eff", "spacing_error")}
    mode_arr = np.full(shape, -1, dtype=np.int8)
    t_arr = np.arange(N) * dt
    collision = None
    last = N

    for k in range(N):
        t = float(t_arr[k])
        dx, v_lead, a_lead = spec.lead.kinematics(t)
        states[0] = dynamics.VehicleState(lead0 + dx, v_lead, a_lead, L)
        a_cmd = [a_lead] + [0.0] * (n - 1)

        for i in range(1, n):
            ego = states[i]
            meas = _radar(states[i - 1], ego, acc_cfg.R_s)
            if meas.R <= 0:
                collision = CollisionEvent(k, t, i, meas.R)
                cols["R"][k, i] = meas.R
                break
            ctrl = ctrls[i]
            h = acc_cfg.h
            limits = None
            rdot_mod = meas.Rdot
            if connected:
                inbox = channel.inbox(i)
                prec = _snapshot(inbox, i - 1, t)
                lead = _snapshot(inbox, i - 2, t)
                if meas.valid:
                    rdot_mod = connected_rdot(ego.x, ego.v, prec, lead, meas, spec.addons,
                                              has_leading=i >= 2)
                if not grip_seen[i] and ego.a <= -spec.grip_gate_decel:
                    grip_seen[i] = True
                grip = GripEstimate(spec.mu if grip_seen[i] else spec.grip.mu_reference, True)
                limits = grip_accel_limits(grip, spec.grip) if grip_seen[i] else \
                    grip_accel_limits(GripEstimate(available=False), spec.grip)
                rdot_brk = rdot_mod if ctrl.mode is ControlMode.SPACING else meas.Rdot
                if meas.valid:
                    d_brak = braking_critical_distance(ego.v, rdot_brk, grip.mu, limits[0], spec.grip)
                    h = modified_time_gap(d_brak, desired_headway(ego.v, acc_cfg), ego.v,
                                          acc_cfg.h, acc_cfg.d_min)
            a_des = ctrl.update(meas, ego.v, dt, h_eff=h, limits=limits,
                                rdot_spacing=rdot_mod if connected else None)
            a_cmd[i] = a_des
            RH = desired_headway(ego.v, acc_cfg, h)
            row = cols
            row["a_des"][k, i] = a_des
            row["R"][k, i] = meas.R
            row["Rdot"][k, i] = meas.Rdot
            row["Rdot_mod"][k, i] = rdot_mod if ctrl.mode is ControlMode.SPACING else meas.Rdot
            row["RH"][k, i] = RH
            row["h_eff"][k, i] = h
            row["spacing_error"][k, i] = meas.R - RH
            mode_arr[k, i] = MODE_CODES[ctrl.mode]

        for i in range(n):
            s = states[i]
            cols["x"][k, i] = s.x
            cols["v"][k, i] = s.v
            cols["a"][k, i] = s.a
        cols["a_des"][k, 0] = a_lead
        if collision is not None:
            last = k + 1
            log.warning("collision at t=%.2f s between vehicles %d and %d", t,
                        collision.follower - 1, collision.follower)
            break

        if connected and k % send_every == 0:
            for i in range(n):
                s = states[i]
                receivers = [j for j in (i + 1, i + 2) if j < n]
                if receivers:
                    channel.send(V2vMessage(i, t, s.x, s.v, s.a), receivers)
        for i in range(1, n):
            states[i] = dynamics.step(states[i], a_cmd[i], lag, dt)

    if last < N:
        t_arr = t_arr[:last]
        cols = {c: arr[:last] for c, arr in cols.items()}
        mode_arr = mode_arr[:last]
    return SimTrace(spec, t_arr, mode=mode_arr, collision=collision, **cols)
