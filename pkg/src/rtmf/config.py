"""TOML run configurations, presets and ``--set`` overrides.

A simulation config holds a ``[scenario]`` table whose keys mirror
:class:`~rtmf.simharness.Scenario`; a synthesis config holds
``[synthesis.plant]``, ``[synthesis.model]`` (or ``[synthesis.model.pid]``)
and optionally ``[synthesis.surface]``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .plantlib import NotHurwitzError, pid_to_model
from .simharness import Scenario, ScenarioError
from .synthesis import ReferenceModel, UncertainLti

SCENARIO_PRESETS = ("sto-sine", "sto-trapezoid", "hosmo-sine", "hosmo-trapezoid", "generic-sta")
SYNTHESIS_PRESETS = ("maglev",)


class ConfigError(ValueError):
    """Configuration cannot be read or does not validate."""


def preset_names() -> tuple[str, ...]:
    return SCENARIO_PRESETS + SYNTHESIS_PRESETS


def preset_text(name: str) -> str:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return resources.files("rtmf.presets").joinpath(f"{name}.toml").read_text()


def load_document(path=None, preset: str | None = None) -> dict:
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of a config path or a preset name")
    if preset is not None:
        text = preset_text(preset)
        source = f"preset {preset}"
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text()
        source = str(p)
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from exc


def parse_value(raw: str):
    """Interpret an override value as a TOML literal, else as a bare string."""
    try:
        return tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        return raw


def apply_overrides(doc: dict, overrides, root: str) -> dict:
    """Apply ``key.path=value`` overrides below ``doc[root]``."""
    out = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        parts = [p for p in key.strip().split(".") if p]
        if not parts:
            raise ConfigError(f"override {item!r} has an empty key")
        node = out.setdefault(root, {})
        for p in parts[:-1]:
            nxt = node.setdefault(p, {})
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r}: {p!r} is not a section")
            node = nxt
        node[parts[-1]] = parse_value(raw.strip())
    return out


def scenario_from_document(doc: dict) -> Scenario:
    if "scenario" not in doc:
        raise ConfigError("config has no [scenario] section")
    try:
        return Scenario.from_dict(doc["scenario"])
    except ScenarioError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def scenario_to_toml(scn: Scenario) -> str:
    return tomli_w.dumps({"scenario": scn.to_dict()})


def load_scenario(path=None, preset=None, overrides=(), dt=None, t_end=None) -> Scenario:
    doc = load_document(path, preset)
    extra = list(overrides or ())
    if dt is not None:
        extra.append(f"dt={dt!r}")
    if t_end is not None:
        extra.append(f"t_end={t_end!r}")
    return scenario_from_document(apply_overrides(doc, extra, "scenario"))


@dataclass(frozen=True)
class SynthesisConfig:
    plant: UncertainLti
    model: ReferenceModel
    poles: tuple[float, ...] | None


def _matrix(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"[{where}] is missing {key!r}")
    try:
        return np.array(section[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}] {key!r} is not a numeric matrix: {exc}") from exc


def synthesis_from_document(doc: dict) -> SynthesisConfig:
    syn = doc.get("synthesis")
    if not isinstance(syn, dict):
        raise ConfigError("config has no [synthesis] section")
    try:
        p = syn.get("plant") or {}
        plant = UncertainLti(
            A=_matrix(p, "A", "synthesis.plant"),
            B=_matrix(p, "B", "synthesis.plant"),
            C=_matrix(p, "C", "synthesis.plant"),
            theta_M=float(p.get("theta_M", 0.0)),
            theta_dot_M=float(p.get("theta_dot_M", 0.0)),
        )
        m = syn.get("model") or {}
        if "pid" in m:
            pid = m["pid"]
            model = pid_to_model(
                float(pid["Kp"]), float(pid["Ki"]), float(pid["Kd"]),
                c1=float(pid.get("c1", 3518.85)), c2=float(pid.get("c2", 2180.0)),
                full_numerator=bool(pid.get("full_numerator", False)),
                x_r0=m.get("x_r0"),
            )
        else:
            model = ReferenceModel(
                A_r=_matrix(m, "A_r", "synthesis.model"),
                C_r=_matrix(m, "C_r", "synthesis.model"),
                B_r=np.array(m["B_r"], dtype=float) if "B_r" in m else None,
                x_r0=m.get("x_r0"),
            )
    except (ConfigError, NotHurwitzError):
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid synthesis config: {exc}") from exc
    poles = (syn.get("surface") or {}).get("poles")
    return SynthesisConfig(plant, model, None if poles is None else tuple(float(x) for x in poles))


def load_synthesis(path=None, preset=None, overrides=()) -> SynthesisConfig:
    doc = load_document(path, preset)
    return synthesis_from_document(apply_overrides(doc, overrides, "synthesis"))
