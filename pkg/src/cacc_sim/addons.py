"""Connected add-ons layered on the unmodified ACC.

Inverse time-to-collision against the vehicle two ahead, range-rate
modification from V2V data, grip-aware acceleration limits, the
friction-scaled braking distance and the time-gap inflation it drives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .controller import G, GeometryError, RangeMeasurement


@dataclass(frozen=True)
class AddOnConfig:
    ttc_lim: float = 6.0  # (s)
    n1: float = 100 / 3.6  # road speed limit (m/s)
    n2: Optional[float] = None  # defaults to 1/ttc_lim (1/s)

    def __post_init__(self):
        if self.n2 is None:
            object.__setattr__(self, "n2", 1.0 / self.ttc_lim)
        for name in ("ttc_lim", "n1", "n2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def ttc_inv_lim(self) -> float:
        return 1.0 / self.ttc_lim


@dataclass(frozen=True)
class GripConfig:
    mu_min: float = 0.2
    mu_norm: float = 0.9
    f_at_min: float = 4.5
    f_at_norm: float = 1.0
    tau_s_delay: float = 0.2  # brake actuator delay estimate (s)
    g: float = G
    a_min_static: float = -5.0
    a_max_static: float = 2.0
    mu_reference: float = 0.9  # assumed grip before any estimate exists

    def __post_init__(self):
        if not 0 < self.mu_min < self.mu_norm:
            raise ValueError("need 0 < mu_min < mu_norm")
        if not self.f_at_min > self.f_at_norm > 0:
            raise ValueError("need f_at_min > f_at_norm > 0")
        if self.tau_s_delay < 0:
            raise ValueError("tau_s_delay must be non-negative")


@dataclass(frozen=True)
class GripEstimate:
    mu: float = 0.9
    available: bool = True

    def __post_init__(self):
        if self.available and not 0 < self.mu <= 1.2:
            raise ValueError(f"grip estimate out of range: {self.mu}")


def _sgn(x: float) -> float:
    return float((x > 0) - (x < 0))


def ttc_inverse(dv_EL: float, dx_EL: float) -> float:
    """Inverse TTC of the ego against the leading vehicle (1/s).

    ``dv_EL = v_ego - v_lead`` and ``dx_EL = x_lead - x_ego``.
    """
    if dx_EL <= 0:
        raise GeometryError(f"leading vehicle not ahead of ego (dx_EL={dx_EL})")
    return dv_EL / dx_EL


def rdot_mod_basic(Rdot: float, dv_EL: float, cfg: AddOnConfig) -> float:
    return (1 - _sgn(Rdot) * dv_EL / cfg.n1) * Rdot


def rdot_mod_ttc(Rdot: float, dv_EL: float, ttc_inv: float, cfg: AddOnConfig) -> float:
    factor = 1 - _sgn(Rdot) * dv_EL / cfg.n1 + (ttc_inv - cfg.ttc_inv_lim) / cfg.n2
    return factor * Rdot


def select_rdot_single_predecessor(radar_rdot: float, v2v_rdot: float) -> float:
    """Worst case of the two range-rate sources; ties go to the radar."""
    return v2v_rdot if abs(v2v_rdot) > abs(radar_rdot) else radar_rdot


def friction_scaling(mu: float, cfg: GripConfig = GripConfig()) -> float:
    if mu <= cfg.mu_min:
        return cfg.f_at_min
    if mu >= cfg.mu_norm:
        return cfg.f_at_norm
    slope = (cfg.f_at_norm - cfg.f_at_min) / (cfg.mu_norm - cfg.mu_min)
    return cfg.f_at_min + slope * (mu - cfg.mu_min)


def braking_critical_distance(v_ego: float, Rdot_mod: float, mu: float, a_min_eff: float,
                              cfg: GripConfig = GripConfig()) -> float:
    if not a_min_eff < 0:
        raise ValueError(f"a_min_eff must be negative, got {a_min_eff}")
    stopping = (v_ego ** 2 - (v_ego + Rdot_mod) ** 2) / (2 * abs(a_min_eff))
    return friction_scaling(mu, cfg) * stopping - cfg.tau_s_delay * Rdot_mod


def modified_time_gap(d_brak: float, RH: float, v_ego: float, h: float, d_min: float) -> float:
    if d_brak <= RH or v_ego <= 0:
        return h
    return (d_brak - d_min) / v_ego


def grip_accel_limits(grip: GripEstimate, cfg: GripConfig = GripConfig()) -> tuple[float, float]:
    if not grip.available:
        return cfg.a_min_static, cfg.a_max_static
    mu_g = grip.mu * cfg.g
    return max(cfg.a_min_static, -mu_g), min(cfg.a_max_static, mu_g)


@dataclass(frozen=True)
class Snapshot:
    """Latest V2V state of another vehicle as seen by the receiver."""

    x: float
    v: float
    a: float
    age: float = 0.0


def connected_rdot(ego_x: float, ego_v: float, preceding: Optional[Snapshot],
                   leading: Optional[Snapshot], radar: RangeMeasurement,
                   cfg: AddOnConfig, has_leading: bool = True) -> float:
    """Range rate fed to spacing control when V2V data is available.

    With two predecessors the radar range rate is reshaped from the ego's
    inverse TTC against the leading vehicle. With a single predecessor the
    worst of the radar and V2V range rates is used. Missing snapshots fall
    back to the radar value.
    """
    if has_leading:
        if leading is None:
            return radar.Rdot
        dv_EL = ego_v - leading.v
        dx_EL = leading.x - ego_x
        if dx_EL <= 0:
            return radar.Rdot
        ttc_inv = ttc_inverse(dv_EL, dx_EL)
        if ttc_inv > cfg.ttc_inv_lim:
            return rdot_mod_ttc(radar.Rdot, dv_EL, ttc_inv, cfg)
        return rdot_mod_basic(radar.Rdot, dv_EL, cfg)
    if preceding is None:
        return radar.Rdot
    return select_rdot_single_predecessor(radar.Rdot, preceding.v - ego_v)
