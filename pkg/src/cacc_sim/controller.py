"""Upper-level ACC controller.

Four-mode state machine working in the range / range-rate plane:
velocity control (PI on set speed), a linear transitional manoeuvre along
the switching line, a parabolic (constant-deceleration) transitional
manoeuvre for hard closings, and constant-time-gap spacing control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

G = 9.81


class GeometryError(ValueError):
    """Raised for degenerate geometry (radar range below headway, bad ordering)."""


class ControlMode(str, Enum):
    VELOCITY = "VelocityControl"
    LINEAR = "LinearTransition"
    PARABOLIC = "ParabolicTransition"
    SPACING = "SpacingControl"


@dataclass(frozen=True)
class AccConfig:
    v_user: float = 100 / 3.6
    h: float = 1.1
    d_min: float = 2.0
    a_min_des: float = -5.0
    a_max_des: float = 2.0
    kp_vc: float = 0.4
    ki_vc: float = 0.05
    kp_lin: float = 0.3
    kp_par: float = 0.5
    tol_speed_linear: float = 0.5
    tol_linear_parabolic: float = -30.0
    tol_transitional_spacing: float = 0.5
    R_s: float = 150.0
    D: float = 0.04 * G
    # None means derived: tau_v = h, tau_d = gamma / tau_v
    tau_v: Optional[float] = None
    tau_d: Optional[float] = None
    gamma: float = 20.0
    R_amn: float = 5.0
    # spacing control is left once its command has exceeded the
    # velocity-control command for exit_hold seconds
    exit_hold: float = 1.0
    # ACC switches off below this speed; None disables the check
    min_active_speed: Optional[float] = None

    def __post_init__(self):
        if self.tau_v is None:
            object.__setattr__(self, "tau_v", self.h)
        if self.tau_d is None:
            object.__setattr__(self, "tau_d", self.gamma / self.tau_v)
        self.validate()

    def validate(self):
        checks = [
            (self.h > 0, "h must be positive"),
            (self.v_user > 0, "v_user must be positive"),
            (self.d_min > 0, "d_min must be positive"),
            (self.a_min_des < 0, "a_min_des must be negative"),
            (self.a_max_des > 0, "a_max_des must be positive"),
            (self.R_s > self.d_min, "R_s must exceed d_min"),
            (self.D > 0, "D must be positive"),
            (self.tau_v > 0, "tau_v must be positive"),
            (self.tau_d > 0, "tau_d must be positive"),
            (self.R_amn > 0, "R_amn must be positive"),
            (self.exit_hold >= 0, "exit_hold must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(msg)

    def with_time_gap(self, h: float) -> "AccConfig":
        """Copy with a new time gap, re-deriving tau_v/tau_d from it."""
        return replace(self, h=h, tau_v=None, tau_d=None)


class RangeMeasurement(NamedTuple):
    R: float
    Rdot: float
    valid: bool

    @classmethod
    def none(cls) -> "RangeMeasurement":
        return cls(math.inf, 0.0, False)


def _clamp(a: float, lo: float, hi: float) -> float:
    return lo if a < lo else hi if a > hi else a


def speed_control(v: float, cfg: AccConfig, integral: float, dt: float) -> tuple[float, float]:
    """PI law on the set speed, with conditional-integration anti-windup.

    Returns ``(a_des, integral')``; the integral is frozen whenever the
    output would sit on an acceleration bound.
    """
    err = cfg.v_user - v
    candidate = integral + err * dt
    raw = cfg.kp_vc * err + cfg.ki_vc * candidate
    if cfg.a_min_des <= raw <= cfg.a_max_des:
        return raw, candidate
    raw = cfg.kp_vc * err + cfg.ki_vc * integral
    return _clamp(raw, cfg.a_min_des, cfg.a_max_des), integral


def desired_headway(v: float, cfg: AccConfig, h: Optional[float] = None) -> float:
    return cfg.d_min + (cfg.h if h is None else h) * v


def switching_line_slope(cfg: AccConfig, RH: float) -> float:
    if cfg.R_s <= RH:
        raise GeometryError(f"radar range {cfg.R_s} m does not exceed desired headway {RH} m")
    return math.sqrt((cfg.R_s - RH) / (2 * cfg.D))


def switching_line(Rdot: float, RH: float, T: float) -> float:
    return -T * Rdot + RH


def linear_transition_accel(R: float, R_line: float, cfg: AccConfig) -> float:
    # Positive when the gap is larger than the line allows at this closing speed.
    return _clamp(cfg.kp_lin * (R - R_line), cfg.a_min_des, cfg.a_max_des)


def parabola_range(Rdot: float, cfg: AccConfig) -> float:
    return cfg.R_amn + Rdot * Rdot / (2 * abs(cfg.a_min_des))


def parabolic_transition_accel(R: float, R_parabola: float, cfg: AccConfig) -> float:
    return _clamp(cfg.kp_par * (R - R_parabola), cfg.a_min_des, cfg.a_max_des)


def spacing_control_accel(R: float, Rdot: float, v: float, cfg: AccConfig,
                          h_eff: Optional[float] = None) -> float:
    d_set = desired_headway(v, cfg, h_eff)
    a = Rdot / cfg.tau_v - (d_set - R) / (cfg.tau_v * cfg.tau_d)
    return _clamp(a, cfg.a_min_des, cfg.a_max_des)


def _safe_slope(cfg: AccConfig, RH: float) -> float:
    # Headways past the radar range collapse the line onto Rdot = 0.
    return switching_line_slope(cfg, RH) if cfg.R_s > RH else 0.0


def mode_transition(mode: ControlMode, meas: RangeMeasurement, v: float, cfg: AccConfig,
                    far_time: float = 0.0, h_eff: Optional[float] = None) -> ControlMode:
    """Next controller mode.

    ``far_time`` is how long the spacing-control exit condition has held
    continuously: the preceding vehicle no longer limits the ego, i.e. the
    spacing law asks for more acceleration than velocity control would.
    """
    if not meas.valid:
        return ControlMode.VELOCITY
    if cfg.min_active_speed is not None and v < cfg.min_active_speed:
        return ControlMode.VELOCITY

    RH = desired_headway(v, cfg, h_eff)
    R_line = switching_line(meas.Rdot, RH, _safe_slope(cfg, RH))
    off_line = meas.R - R_line
    near_target = abs(meas.R - RH) < cfg.tol_transitional_spacing

    if mode is ControlMode.VELOCITY:
        if off_line < cfg.tol_speed_linear:
            return ControlMode.LINEAR
    elif mode is ControlMode.LINEAR:
        if off_line < cfg.tol_linear_parabolic:
            return ControlMode.PARABOLIC
        if near_target:
            return ControlMode.SPACING
    elif mode is ControlMode.PARABOLIC:
        if near_target:
            return ControlMode.SPACING
        if off_line >= 0 and meas.Rdot > 0:
            return ControlMode.LINEAR
    elif mode is ControlMode.SPACING:
        if far_time >= cfg.exit_hold:
            return ControlMode.VELOCITY
    return mode


@dataclass(frozen=True)
class StabilityVerdict:
    winner_ok: bool
    winner_margin: float  # h*(1 + h/(2 tau_d)) - tau_v
    ctg_ok: bool
    ctg_margin: float  # h - 2 tau_lag

    @property
    def stable(self) -> bool:
        return self.winner_ok and self.ctg_ok


def string_stability_check(cfg: AccConfig, tau_lag: float) -> StabilityVerdict:
    bound = cfg.h * (1 + cfg.h / (2 * cfg.tau_d))
    w_margin = bound - cfg.tau_v
    c_margin = cfg.h - 2 * tau_lag
    return StabilityVerdict(w_margin >= 0, w_margin, c_margin >= 0, c_margin)


@dataclass
class AccController:
    """Per-vehicle controller state (mode, PI integral, exit timer)."""

    cfg: AccConfig
    mode: ControlMode = ControlMode.VELOCITY
    integral: float = 0.0
    far_time: float = 0.0
    last_a_des: float = field(default=0.0, repr=False)
    _limited: dict = field(default_factory=dict, repr=False, compare=False)

    def update(self, meas: RangeMeasurement, v: float, dt: float,
               h_eff: Optional[float] = None,
               limits: Optional[tuple[float, float]] = None,
               rdot_spacing: Optional[float] = None) -> float:
        """One control step; returns the desired acceleration.

        ``limits`` overrides the static acceleration bounds (grip-aware
        limits); ``rdot_spacing`` replaces the radar range rate in spacing
        control only.
        """
        cfg = self.cfg
        if limits is not None and limits != (cfg.a_min_des, cfg.a_max_des):
            cfg = self._limited.get(limits)
            if cfg is None:
                cfg = self._limited[limits] = replace(self.cfg, a_min_des=limits[0], a_max_des=limits[1])

        h = cfg.h if h_eff is None else h_eff
        RH = desired_headway(v, cfg, h)
        rdot = meas.Rdot if rdot_spacing is None else rdot_spacing
        if meas.valid and self.mode is ControlMode.SPACING:
            a_sc = spacing_control_accel(meas.R, rdot, v, cfg, h)
            a_vc, _ = speed_control(v, cfg, self.integral, dt)
            self.far_time = self.far_time + dt if a_sc > a_vc else 0.0
        else:
            self.far_time = 0.0

        new_mode = mode_transition(self.mode, meas, v, cfg, self.far_time, h)
        if new_mode is ControlMode.VELOCITY and self.mode is not ControlMode.VELOCITY:
            # bumpless transfer into the PI loop
            err = cfg.v_user - v
            self.integral = (self.last_a_des - cfg.kp_vc * err) / cfg.ki_vc if cfg.ki_vc else 0.0
        self.mode = new_mode

        if new_mode is ControlMode.VELOCITY:
            a, self.integral = speed_control(v, cfg, self.integral, dt)
        elif new_mode is ControlMode.LINEAR:
            R_line = switching_line(meas.Rdot, RH, _safe_slope(cfg, RH))
            a = linear_transition_accel(meas.R, R_line, cfg)
        elif new_mode is ControlMode.PARABOLIC:
            a = parabolic_transition_accel(meas.R, parabola_range(meas.Rdot, cfg), cfg)
        else:
            a = spacing_control_accel(meas.R, rdot, v, cfg, h)
        self.last_a_des = a
        return a
