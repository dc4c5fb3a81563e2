"""TOML scenario files and the bundled presets.

A scenario file looks like::

    preset = "fig7"            # optional base preset

    [scenario]                 # any subset when a preset is given
    tau_c = 4.0
    profile = { v_max = 0.05 }

    [output]
    dir = "out"
    prefix = "run"

Unknown keys are rejected at every level.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .admittance import AdmittanceParams
from .errors import ConfigError, DomainError
from .sim import ScenarioConfig, TrapezoidProfile

PRESET_NAMES = ("fig7", "fig8-compare", "exp-0.15", "exp-0.09", "exp-0.045")

_SCENARIO_KEYS = {"robot", "crane", "tau_r", "tau_c", "K_e", "profile", "duration", "dt", "mode"}
_REQUIRED = ("robot", "crane", "tau_r", "tau_c", "K_e")
_ADM_KEYS = {"M", "B", "K"}
_PROFILE_KEYS = {"v_max", "t_ramp", "t_cruise", "t_start"}
_TOP_KEYS = {"preset", "scenario", "output"}
_OUTPUT_KEYS = {"dir", "prefix"}


@dataclass(frozen=True)
class OutputConfig:
    dir: Path = Path(".")
    prefix: str = ""


@dataclass(frozen=True)
class CliConfig:
    scenario: ScenarioConfig
    output: OutputConfig = OutputConfig()
    preset: str | None = None


def _line_of(text: str | None, key: str) -> str:
    if not text:
        return ""
    pat = re.compile(rf'^\s*"?{re.escape(key)}"?\s*=|[{{,]\s*"?{re.escape(key)}"?\s*=')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return f" (line {i})"
    return ""


def _reject_unknown(table: Mapping[str, Any], allowed: set[str], where: str, text: str | None) -> None:
    for key in table:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {where}{_line_of(text, key)}; allowed: {sorted(allowed)}"
            )


def _number(table: Mapping[str, Any], key: str, where: str, text: str | None) -> float:
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}{_line_of(text, key)}")
    return float(v)


def _merge(base: dict[str, Any], over: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = _merge(dict(out[k]), v)
        else:
            out[k] = v
    return out


def scenario_from_dict(d: Mapping[str, Any], text: str | None = None) -> ScenarioConfig:
    _reject_unknown(d, _SCENARIO_KEYS, "scenario", text)
    for key in _REQUIRED:
        if key not in d:
            raise ConfigError(f"scenario is missing required key {key!r}")
    adms = {}
    for side in ("robot", "crane"):
        t = d[side]
        if not isinstance(t, Mapping):
            raise ConfigError(f"scenario.{side} must be a table{_line_of(text, side)}")
        _reject_unknown(t, _ADM_KEYS, f"scenario.{side}", text)
        missing = _ADM_KEYS - set(t)
        if missing:
            raise ConfigError(f"scenario.{side} is missing {sorted(missing)}")
        adms[side] = {k: _number(t, k, f"scenario.{side}", text) for k in ("M", "B", "K")}
    prof = d.get("profile", {})
    if not isinstance(prof, Mapping):
        raise ConfigError(f"scenario.profile must be a table{_line_of(text, 'profile')}")
    _reject_unknown(prof, _PROFILE_KEYS, "scenario.profile", text)
    scalars = {
        k: _number(d, k, "scenario", text) for k in ("tau_r", "tau_c", "K_e", "duration", "dt") if k in d
    }
    mode = d.get("mode", "collaborative")
    try:
        return ScenarioConfig(
            robot_adm=AdmittanceParams(**adms["robot"]),
            crane_adm=AdmittanceParams(**adms["crane"]),
            profile=TrapezoidProfile(**{k: _number(prof, k, "scenario.profile", text) for k in prof}),
            mode=mode,
            **scalars,
        )
    except DomainError as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def scenario_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    p = cfg.profile
    return {
        "tau_r": cfg.tau_r,
        "tau_c": cfg.tau_c,
        "K_e": cfg.K_e,
        "duration": cfg.duration,
        "dt": cfg.dt,
        "mode": cfg.mode,
        "robot": cfg.robot_adm.as_dict(),
        "crane": cfg.crane_adm.as_dict(),
        "profile": {"v_max": p.v_max, "t_ramp": p.t_ramp, "t_cruise": p.t_cruise, "t_start": p.t_start},
    }


def _preset_tables() -> dict[str, Any]:
    text = resources.files("robocrane").joinpath("presets.toml").read_text()
    return tomllib.loads(text)["presets"]


def preset_dict(name: str) -> dict[str, Any]:
    tables = _preset_tables()
    if name not in tables:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(tables)}")
    return tables[name]


def load_preset(name: str) -> ScenarioConfig:
    return scenario_from_dict(preset_dict(name))


def loads_config(text: str) -> CliConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    _reject_unknown(doc, _TOP_KEYS, "config", text)
    preset = doc.get("preset")
    base = preset_dict(preset) if preset is not None else {}
    scen = doc.get("scenario", {})
    if not isinstance(scen, Mapping):
        raise ConfigError("[scenario] must be a table")
    _reject_unknown(scen, _SCENARIO_KEYS, "scenario", text)
    cfg = scenario_from_dict(_merge(base, scen), text)
    out = doc.get("output", {})
    _reject_unknown(out, _OUTPUT_KEYS, "output", text)
    output = OutputConfig(dir=Path(out.get("dir", ".")), prefix=str(out.get("prefix", "")))
    return CliConfig(cfg, output, preset)


def load_config(path: str | Path) -> CliConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return loads_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dumps_config(cfg: ScenarioConfig, output: OutputConfig | None = None) -> str:
    doc: dict[str, Any] = {"scenario": scenario_to_dict(cfg)}
    if output is not None:
        doc["output"] = {"dir": str(output.dir), "prefix": output.prefix}
    return tomli_w.dumps(doc)
