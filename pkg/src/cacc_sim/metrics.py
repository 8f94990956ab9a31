"""Comfort, safety and throughput metrics computed from simulation traces."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .scenario import OSCILLATORY, SimTrace

log = logging.getLogger(__name__)

OSCILLATION_WINDOW = (130.0, 210.0)
STABILITY_SLACK = 0.02


class MetricsError(ValueError):
    pass


def _window_mask(trace: SimTrace, window: Optional[Sequence[float]]) -> np.ndarray:
    if window is None:
        return np.ones(trace.n_steps, dtype=bool)
    t0, t1 = window
    if t0 > t1:
        raise MetricsError(f"window start {t0} after end {t1}")
    # half-step slack so float time stamps on the boundary are kept
    eps = 1e-9
    mask = (trace.t >= t0 - eps) & (trace.t <= t1 + eps)
    if not mask.any():
        raise MetricsError(f"window [{t0}, {t1}] contains no samples")
    return mask


def rms(samples: np.ndarray) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise MetricsError("empty sample set")
    return float(np.sqrt(np.mean(samples ** 2)))


def amplitude(samples: np.ndarray) -> float:
    """Half the peak-to-peak excursion."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise MetricsError("empty sample set")
    return float((samples.max() - samples.min()) / 2)


def rms_acceleration(trace: SimTrace, vehicle: int, window: Optional[Sequence[float]] = None) -> float:
    return rms(trace.a[_window_mask(trace, window), vehicle])


def spacing_error(trace: SimTrace, vehicle: int) -> np.ndarray:
    """Actual gap minus desired gap (active time gap); positive is a surplus."""
    if vehicle < 1:
        raise MetricsError("the lead vehicle has no predecessor")
    return trace.R[:, vehicle] - trace.RH[:, vehicle]


def oscillation_amplitude(trace: SimTrace, vehicle: int, signal: str = "a",
                          window: Optional[Sequence[float]] = None) -> float:
    if signal not in ("a", "v"):
        raise MetricsError(f"signal must be 'a' or 'v', got {signal!r}")
    return amplitude(trace.column(signal)[_window_mask(trace, window), vehicle])


@dataclass
class StabilityResult:
    ratios: list  # per follower i: amplitude(i) / amplitude(i-1); nan if undefined
    string_stable: bool
    slack: float = STABILITY_SLACK

    @property
    def max_ratio(self) -> float:
        finite = [r for r in self.ratios if not math.isnan(r)]
        return max(finite) if finite else math.nan


def string_stability_ratios(trace: SimTrace, signal: str = "a",
                            window: Optional[Sequence[float]] = None,
                            slack: float = STABILITY_SLACK) -> StabilityResult:
    if trace.n_vehicles < 3:
        raise MetricsError("string stability needs at least three vehicles")
    amps = [oscillation_amplitude(trace, i, signal, window) for i in range(trace.n_vehicles)]
    ratios = []
    for i in range(1, trace.n_vehicles):
        if amps[i - 1] == 0:
            log.warning("zero %s amplitude upstream of vehicle %d; ratio excluded", signal, i)
            ratios.append(math.nan)
        else:
            ratios.append(amps[i] / amps[i - 1])
    stable = all(r <= 1 + slack for r in ratios if not math.isnan(r))
    return StabilityResult(ratios, stable, slack)


def traffic_flow_capacity(v: float, h: float, d_min: float = 2.0, L_c: float = 4.3) -> float:
    """Vehicles per lane per hour at platoon speed ``v`` under a constant time gap."""
    if not v > 0:
        raise MetricsError("speed must be positive")
    return 3600 * v / (d_min + h * v + L_c)


@dataclass
class VehicleMetrics:
    vehicle: int
    rms_accel: float
    min_R: float
    min_spacing_error: float
    accel_amplitude: float
    velocity_amplitude: float


@dataclass
class MetricsReport:
    scenario: str
    controller: str
    h: float
    window: tuple
    vehicles: list = field(default_factory=list)
    amplification_ratios: list = field(default_factory=list)
    velocity_ratios: list = field(default_factory=list)
    string_stable: Optional[bool] = None
    tfc: float = math.nan
    collision: bool = False

    @property
    def last(self) -> VehicleMetrics:
        return self.vehicles[-1]

    def to_dict(self) -> dict:
        return asdict(self)


def default_window(trace: SimTrace) -> tuple:
    spec = trace.spec
    if spec.kind == OSCILLATORY:
        return OSCILLATION_WINDOW
    return (spec.lead.t_start, float(trace.t[-1]))


def evaluate(trace: SimTrace, window: Optional[Sequence[float]] = None) -> MetricsReport:
    spec = trace.spec
    window = tuple(window) if window is not None else default_window(trace)
    if trace.t[-1] < window[0]:
        window = (float(trace.t[0]), float(trace.t[-1]))
    window = (window[0], min(window[1], float(trace.t[-1])))
    report = MetricsReport(
        scenario=spec.name or spec.kind, controller=spec.controller, h=spec.h,
        window=window, collision=trace.collision is not None,
        tfc=traffic_flow_capacity(spec.lead.v0, spec.h, spec.acc.d_min, spec.vehicle_length),
    )
    for i in range(1, trace.n_vehicles):
        report.vehicles.append(VehicleMetrics(
            vehicle=i,
            rms_accel=rms_acceleration(trace, i, window),
            min_R=float(np.nanmin(trace.R[:, i])),
            min_spacing_error=float(np.nanmin(spacing_error(trace, i))),
            accel_amplitude=oscillation_amplitude(trace, i, "a", window),
            velocity_amplitude=oscillation_amplitude(trace, i, "v", window),
        ))
    if trace.n_vehicles >= 3:
        acc_res = string_stability_ratios(trace, "a", window)
        report.amplification_ratios = acc_res.ratios
        report.string_stable = acc_res.string_stable
        report.velocity_ratios = string_stability_ratios(trace, "v", window).ratios
    return report
