"""V2V channel: latency-delayed, loss-penalised delivery of state broadcasts."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class V2vMessage:
    sender: int
    t_sent: float
    x: float
    v: float
    a: float


@dataclass(frozen=True)
class ChannelConfig:
    latency_mean: float = 0.020
    latency_min: float = 0.005
    latency_max: float = 0.050
    latency_std: float = 0.010
    packet_loss_prob: float = 0.01
    loss_penalty: Optional[float] = None  # defaults to one msg_period
    msg_period: float = 0.01
    seed: int = 0
    drop_on_loss: bool = False

    def __post_init__(self):
        if self.loss_penalty is None:
            object.__setattr__(self, "loss_penalty", self.msg_period)
        if not 0 <= self.latency_min <= self.latency_mean <= self.latency_max:
            raise ValueError("need 0 <= latency_min <= latency_mean <= latency_max")
        if self.latency_std < 0:
            raise ValueError("latency_std must be non-negative")
        if not 0 <= self.packet_loss_prob <= 1:
            raise ValueError("packet_loss_prob must lie in [0, 1]")
        if not self.msg_period > 0:
            raise ValueError("msg_period must be positive")
        if self.loss_penalty < 0:
            raise ValueError("loss_penalty must be non-negative")


def sample_latency(cfg: ChannelConfig, rng: np.random.Generator) -> float:
    """Gaussian latency clamped to ``[latency_min, latency_max]``."""
    if cfg.latency_std == 0:
        return min(max(cfg.latency_mean, cfg.latency_min), cfg.latency_max)
    draw = rng.normal(cfg.latency_mean, cfg.latency_std)
    return min(max(draw, cfg.latency_min), cfg.latency_max)


def transmit(msg: V2vMessage, cfg: ChannelConfig, rng: np.random.Generator) -> tuple[Optional[float], bool]:
    """Schedule one message.

    Returns ``(delivery_time, lost)``. A lost packet is delayed by
    ``loss_penalty``; with ``drop_on_loss`` it is discarded instead and the
    delivery time is None.
    """
    lost = rng.random() >= 1 - cfg.packet_loss_prob if cfg.packet_loss_prob > 0 else False
    delay = sample_latency(cfg, rng)
    if lost:
        if cfg.drop_on_loss:
            return None, True
        delay += cfg.loss_penalty
    return msg.t_sent + delay, lost


class DelayedInbox:
    """Pending deliveries for one receiver plus the freshest snapshot per sender."""

    def __init__(self):
        self._pending: list[tuple[float, int, V2vMessage]] = []
        self._seq = itertools.count()
        self.latest: dict[int, V2vMessage] = {}

    def push(self, msg: V2vMessage, delivery_time: float) -> None:
        heapq.heappush(self._pending, (delivery_time, next(self._seq), msg))

    def drain(self, now: float) -> None:
        while self._pending and self._pending[0][0] <= now:
            _, _, msg = heapq.heappop(self._pending)
            held = self.latest.get(msg.sender)
            # stale arrivals never replace a fresher snapshot
            if held is None or msg.t_sent > held.t_sent:
                self.latest[msg.sender] = msg

    def __len__(self) -> int:
        return len(self._pending)


def latest_snapshot(inbox: DelayedInbox, sender: int, now: float) -> Optional[tuple[V2vMessage, float]]:
    inbox.drain(now)
    msg = inbox.latest.get(sender)
    if msg is None:
        return None
    return msg, now - msg.t_sent


class Channel:
    """Broadcast medium: per-receiver inboxes fed with independent draws."""

    def __init__(self, cfg: ChannelConfig, rng: Optional[np.random.Generator] = None):
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng(cfg.seed)
        self.inboxes: dict[int, DelayedInbox] = {}
        self.sent = 0
        self.penalised = 0

    def inbox(self, receiver: int) -> DelayedInbox:
        return self.inboxes.setdefault(receiver, DelayedInbox())

    def send(self, msg: V2vMessage, receivers) -> None:
        for r in receivers:
            when, lost = transmit(msg, self.cfg, self.rng)
            self.sent += 1
            self.penalised += lost
            if when is not None:
                self.inbox(r).push(msg, when)
