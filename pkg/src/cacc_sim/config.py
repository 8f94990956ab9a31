"""Experiment files: INI-style sections of ``key = value`` pairs.

Grammar
-------
Sections and keys (all quantities SI: m, s, m/s, m/s^2)::

    [run]       preset, out, formats, seed
    [scenario]  kind, n_vehicles, controller, mu, initial_gap, duration, dt,
                tau_lag, vehicle_length, grip_known, grip_gate_decel,
                extra_mass, name
    [lead]      LeadProfile fields
    [acc]       AccConfig fields
    [addons]    AddOnConfig fields
    [grip]      GripConfig fields
    [channel]   ChannelConfig fields
    [sweep]     <key> = v1, v2, ...   (key is ``section.field`` or one of
                h, controller, mu, seed)

``preset`` picks a base scenario; every other key overrides it. Optional
numeric fields accept ``none``. Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import itertools
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .addons import AddOnConfig, GripConfig
from .connectivity import ChannelConfig
from .controller import AccConfig
from .scenario import (ACC, BRAKING, CACC, OSCILLATORY, LeadProfile, ScenarioError, ScenarioSpec,
                       build_braking_scenario, build_oscillatory_scenario)

FORMATS = ("trace-csv", "summary", "plot-data")

SUBSECTIONS = {"lead": LeadProfile, "acc": AccConfig, "addons": AddOnConfig,
               "grip": GripConfig, "channel": ChannelConfig}
SCENARIO_KEYS = tuple(f.name for f in dataclasses.fields(ScenarioSpec) if f.name not in SUBSECTIONS)
RUN_KEYS = ("preset", "out", "formats", "seed")
SWEEP_ALIASES = {"h": "acc.h", "controller": "scenario.controller", "mu": "scenario.mu",
                 "seed": "channel.seed"}
# derived from other fields unless given explicitly
DERIVED = {"acc": ("tau_v", "tau_d"), "addons": ("n2",), "channel": ("loss_penalty",)}


class ConfigError(ValueError):
    """Invalid experiment file; the message names the line or key at fault."""


PRESETS = {
    "braking-dry-acc": lambda: build_braking_scenario(0.8, ACC, 1.1),
    "braking-dry-cacc": lambda: build_braking_scenario(0.8, CACC, 0.6),
    "braking-wet-acc": lambda: build_braking_scenario(0.5, ACC, 1.1),
    "braking-wet-cacc": lambda: build_braking_scenario(0.5, CACC, 0.6),
    "oscillatory-1-acc": lambda: build_oscillatory_scenario(1, ACC, 1.1),
    "oscillatory-1-cacc": lambda: build_oscillatory_scenario(1, CACC, 0.6),
    "oscillatory-2-acc": lambda: build_oscillatory_scenario(2, ACC, 1.1),
    "oscillatory-2-cacc": lambda: build_oscillatory_scenario(2, CACC, 0.6),
    # string-unstable references
    "braking-dry-acc-h0.6": lambda: build_braking_scenario(0.8, ACC, 0.6),
    "oscillatory-1-acc-h0.6": lambda: build_oscillatory_scenario(1, ACC, 0.6),
    "oscillatory-2-acc-h0.6": lambda: build_oscillatory_scenario(2, ACC, 0.6),
}


def preset(name: str) -> ScenarioSpec:
    try:
        spec = PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; see list-presets") from None
    return replace(spec, name=name)


@dataclass
class RunConfig:
    spec: ScenarioSpec
    out_dir: str = "runs"
    formats: tuple = FORMATS
    seed: Optional[int] = None
    sweep: list = field(default_factory=list)  # [(dotted key, [values])]

    def resolved_spec(self) -> ScenarioSpec:
        if self.seed is None:
            return self.spec
        return replace(self.spec, channel=replace(self.spec.channel, seed=self.seed))

    def expand(self) -> list[tuple[str, ScenarioSpec]]:
        """Cartesian product of the sweep axes as ``(label, spec)`` pairs."""
        base = self.resolved_spec()
        if not self.sweep:
            return [(base.name or "run", base)]
        keys = [k for k, _ in self.sweep]
        runs = []
        for combo in itertools.product(*(vals for _, vals in self.sweep)):
            label = "_".join(f"{k.split('.')[-1]}={v}" for k, v in zip(keys, combo))
            tree = spec_to_dict(base)
            for key, raw in zip(keys, combo):
                section, name = key.split(".")
                tree[section][name] = raw
                if section == "acc" and name == "h":
                    for d in DERIVED["acc"]:
                        tree["acc"].pop(d, None)
            spec = dict_to_spec(tree)
            runs.append((label, replace(spec, name=f"{base.name}/{label}" if base.name else label)))
        return runs


# -- conversion ---------------------------------------------------------------

def _fmt(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(raw: str, like: Any, key: str) -> Any:
    text = raw.strip()
    if text.lower() == "none":
        return None
    try:
        if isinstance(like, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float) or like is None:
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(like).__name__ if like is not None else 'float'}") from None
    return text


def spec_to_dict(spec: ScenarioSpec) -> dict[str, dict[str, Any]]:
    tree: dict[str, dict[str, Any]] = {"scenario": {k: getattr(spec, k) for k in SCENARIO_KEYS}}
    for section in SUBSECTIONS:
        obj = getattr(spec, section)
        values = dataclasses.asdict(obj)
        # drop derived values that match what derivation would produce
        if section in DERIVED:
            derived = type(obj)(**{k: v for k, v in values.items() if k not in DERIVED[section]})
            for d in DERIVED[section]:
                if getattr(derived, d) == values[d]:
                    values.pop(d)
        tree[section] = values
    return tree


def dict_to_spec(tree: dict[str, dict[str, Any]]) -> ScenarioSpec:
    parts = {}
    for section, cls in SUBSECTIONS.items():
        try:
            parts[section] = cls(**tree.get(section, {}))
        except (ValueError, ScenarioError) as exc:
            raise ConfigError(f"[{section}] {exc}") from None
    try:
        return ScenarioSpec(**tree.get("scenario", {}), **parts)
    except (ValueError, ScenarioError) as exc:
        raise ConfigError(f"[scenario] {exc}") from None


def _template(section: str) -> dict[str, Any]:
    if section == "scenario":
        base = ScenarioSpec()
        return {k: getattr(base, k) for k in SCENARIO_KEYS}
    return dataclasses.asdict(SUBSECTIONS[section]())


def _lookup_like(section: str, key: str, base_tree: dict) -> Any:
    template = _template(section)
    if key not in template:
        raise ConfigError(f"unknown key {key!r} in section [{section}]")
    like = base_tree.get(section, {}).get(key, template[key])
    return template[key] if like is None else like


def serialize(spec: ScenarioSpec, run: Optional[dict[str, Any]] = None) -> str:
    lines = []
    if run:
        lines.append("[run]")
        lines += [f"{k} = {_fmt(v)}" for k, v in run.items()]
        lines.append("")
    for section, values in spec_to_dict(spec).items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {_fmt(v)}" for k, v in values.items()]
        lines.append("")
    return "\n".join(lines)


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None

    known = {"run", "scenario", "sweep", *SUBSECTIONS}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")

    run = dict(parser["run"]) if parser.has_section("run") else {}
    for key in run:
        if key not in RUN_KEYS:
            raise ConfigError(f"unknown key {key!r} in section [run]")

    if "preset" in run:
        base = preset(run["preset"].strip())
    else:
        if not parser.has_section("scenario") or "kind" not in parser["scenario"]:
            raise ConfigError("missing required key: [run] preset or [scenario] kind")
        kind = parser["scenario"]["kind"].strip()
        if kind == BRAKING:
            base = build_braking_scenario()
        elif kind == OSCILLATORY:
            base = build_oscillatory_scenario()
        else:
            raise ConfigError(f"scenario.kind: unknown kind {kind!r}")

    tree = spec_to_dict(base)
    for section in ("scenario", *SUBSECTIONS):
        if not parser.has_section(section):
            continue
        for key, raw in parser[section].items():
            like = _lookup_like(section, key, tree)
            tree[section][key] = _coerce(raw, like, f"{section}.{key}")
            if section == "acc" and key == "h":
                for d in DERIVED["acc"]:
                    if d not in parser[section]:
                        tree["acc"].pop(d, None)
    # a changed scenario kind must carry a matching lead profile
    if tree["scenario"]["kind"] != tree["lead"]["kind"] and not (
            parser.has_section("lead") and "kind" in parser["lead"]):
        tree["lead"]["kind"] = tree["scenario"]["kind"]
    spec = dict_to_spec(tree)

    sweep = []
    if parser.has_section("sweep"):
        for key, raw in parser["sweep"].items():
            dotted = SWEEP_ALIASES.get(key, key)
            if "." not in dotted:
                raise ConfigError(f"sweep key {key!r} must be 'section.field'")
            section, name = dotted.split(".", 1)
            if section not in ("scenario", *SUBSECTIONS):
                raise ConfigError(f"sweep key {key!r}: unknown section {section!r}")
            like = _lookup_like(section, name, tree)
            values = [_coerce(v, like, f"sweep.{key}") for v in raw.split(",") if v.strip()]
            if not values:
                raise ConfigError(f"sweep key {key!r} has no values")
            sweep.append((f"{section}.{name}", values))

    formats = FORMATS
    if "formats" in run:
        formats = tuple(f.strip() for f in run["formats"].split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad:
            raise ConfigError(f"run.formats: unknown format(s) {bad}; choose from {list(FORMATS)}")
    seed = None
    if "seed" in run:
        seed = _coerce(run["seed"], 0, "run.seed")

    cfg = RunConfig(spec=spec, out_dir=run.get("out", "runs").strip(), formats=formats,
                    seed=seed, sweep=sweep)
    cfg.expand()  # surface sweep-induced validation errors now
    return cfg
