"""Longitudinal vehicle model: first-order lag from commanded to actual acceleration."""

from __future__ import annotations

import math
from dataclasses import dataclass


class InvalidStateError(ValueError):
    """Raised when a vehicle state or command is not finite."""


@dataclass(frozen=True)
class VehicleState:
    x: float  # front bumper position (m)
    v: float  # speed (m/s)
    a: float = 0.0  # actual acceleration (m/s^2)
    length: float = 4.3  # (m)

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.v) and math.isfinite(self.a)):
            raise InvalidStateError(f"non-finite state: x={self.x}, v={self.v}, a={self.a}")
        if self.length <= 0:
            raise InvalidStateError(f"vehicle length must be positive, got {self.length}")
        if self.v < 0:
            raise InvalidStateError(f"speed must be non-negative, got {self.v}")

    @property
    def rear(self) -> float:
        return self.x - self.length


@dataclass(frozen=True)
class LagModel:
    tau_lag: float = 0.5  # actuator time constant (s)

    def __post_init__(self):
        if not self.tau_lag > 0:
            raise ValueError(f"tau_lag must be positive, got {self.tau_lag}")


def step(state: VehicleState, a_des: float, model: LagModel, dt: float) -> VehicleState:
    """Advance one vehicle by ``dt`` under commanded acceleration ``a_des``.

    The lag is discretised exactly (zero-order hold on the command), so the
    update is stable for any step size. Speed is clamped at zero; when the
    clamp engages the reported acceleration is zeroed as well.
    """
    if not dt > 0:
        raise InvalidStateError(f"dt must be positive, got {dt}")
    if not math.isfinite(a_des):
        raise InvalidStateError(f"non-finite command a_des={a_des}")

    a_new = a_des + (state.a - a_des) * math.exp(-dt / model.tau_lag)
    v_new = state.v + 0.5 * (state.a + a_new) * dt
    if v_new <= 0.0:
        v_new = 0.0
        a_new = 0.0
    x_new = state.x + 0.5 * (state.v + v_new) * dt
    return VehicleState(x_new, v_new, a_new, state.length)
