"""JSON experiment configuration: parsing, validation, defaults.

Unknown keys anywhere in the document are rejected so typos fail fast.
The optional ``meta`` section is ignored on input, which lets the run
sidecar written by the CLI be fed back in as a config.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ensemble import OBSERVABLES, STATE_KINDS, EnsembleSpec, ProtocolSpec, StageSpec
from .hilbert import ModelParams


class ConfigError(Exception):
    """Invalid experiment configuration."""


_SECTION_KEYS = {
    "model": {"L", "gamma_sym", "gamma_asym", "mu", "W", "periodic"},
    "state": {"kind", "theta_over_pi"},
    "grid": {"kind", "t_min", "t_max", "points"},
    "observe": {"observables", "subsystem_size", "pe_bins"},
    "ensemble": {"n_realizations", "master_seed"},
    "output": {"directory", "format"},
}
_TOP_KEYS = set(_SECTION_KEYS) | {"protocols", "meta"}


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def _get(mapping, key, kind, where, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"missing required key {where}.{key}")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key} must be {kind.__name__}, got {value!r}")
    return value


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Validated, fully-defaulted experiment description."""

    model: dict
    state: dict
    protocols: list
    grid: dict
    observe: dict
    ensemble: dict
    output: dict

    def resolved(self) -> dict:
        """JSON-ready copy of every resolved section (sidecar payload)."""
        return {
            "model": dict(self.model),
            "state": dict(self.state),
            "protocols": [
                {"name": p["name"], "stages": [dict(s) for s in p["stages"]]}
                for p in self.protocols
            ],
            "grid": dict(self.grid),
            "observe": dict(self.observe),
            "ensemble": dict(self.ensemble),
            "output": dict(self.output),
        }

    def grid_times(self) -> np.ndarray:
        g = self.grid
        if g["kind"] == "geometric":
            return np.geomspace(g["t_min"], g["t_max"], g["points"])
        return np.linspace(g["t_min"], g["t_max"], g["points"])

    def model_params(self, gamma: float) -> ModelParams:
        m = self.model
        return ModelParams(
            L=m["L"], gamma=gamma, mu=m["mu"], W=m["W"], fields=None, periodic=m["periodic"]
        )

    def ensemble_spec(self) -> EnsembleSpec:
        protocols = tuple(
            ProtocolSpec(
                name=p["name"],
                stages=tuple(
                    StageSpec(gamma=s["gamma"], duration=s["duration"], kind=s["kind"])
                    for s in p["stages"]
                ),
            )
            for p in self.protocols
        )
        return EnsembleSpec(
            model=self.model_params(self.model["gamma_sym"]),
            state_kind=self.state["kind"],
            theta_over_pi=self.state["theta_over_pi"],
            protocols=protocols,
            grid=tuple(float(t) for t in self.grid_times()),
            observables=tuple(self.observe["observables"]),
            subsystem_size=self.observe["subsystem_size"],
            pe_bins=self.observe["pe_bins"],
            n_realizations=self.ensemble["n_realizations"],
            master_seed=self.ensemble["master_seed"],
        )


def _parse_model(raw) -> dict:
    _check_keys(raw, _SECTION_KEYS["model"], "model")
    model = {
        "L": _get(raw, "L", int, "model", default=12),
        "gamma_sym": _get(raw, "gamma_sym", float, "model", default=1.0),
        "gamma_asym": _get(raw, "gamma_asym", float, "model", default=0.2),
        "mu": _get(raw, "mu", float, "model", default=-0.5),
        "W": _get(raw, "W", float, "model", default=1.0),
        "periodic": _get(raw, "periodic", bool, "model", default=True),
    }
    if model["L"] < 3:
        raise ConfigError(f"model.L must be >= 3, got {model['L']}")
    if model["W"] < 0:
        raise ConfigError("model.W must be >= 0")
    return model


def _parse_state(raw) -> dict:
    _check_keys(raw, _SECTION_KEYS["state"], "state")
    state = {
        "kind": _get(raw, "kind", str, "state", default="ferro"),
        "theta_over_pi": _get(raw, "theta_over_pi", float, "state", required=True),
    }
    if state["kind"] not in STATE_KINDS:
        raise ConfigError(f"state.kind must be one of {STATE_KINDS}, got {state['kind']!r}")
    if not 0.0 <= state["theta_over_pi"] <= 1.0:
        raise ConfigError("state.theta_over_pi must lie in [0, 1]")
    return state


def _parse_protocols(raw) -> list:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("protocols must be a nonempty list")
    protocols = []
    names = set()
    for i, entry in enumerate(raw):
        where = f"protocols[{i}]"
        _check_keys(entry, {"name", "stages"}, where)
        name = _get(entry, "name", str, where, required=True)
        if name in names:
            raise ConfigError(f"duplicate protocol name {name!r}")
        names.add(name)
        raw_stages = entry.get("stages")
        if not isinstance(raw_stages, list) or not raw_stages:
            raise ConfigError(f"{where}.stages must be a nonempty list")
        stages = []
        for j, s in enumerate(raw_stages):
            sw = f"{where}.stages[{j}]"
            _check_keys(s, {"gamma", "duration", "kind"}, sw)
            stage = {
                "gamma": _get(s, "gamma", float, sw, required=True),
                "duration": _get(s, "duration", float, sw, required=True),
                "kind": _get(s, "kind", str, sw, required=True),
            }
            if stage["kind"] not in ("real", "imaginary"):
                raise ConfigError(f"{sw}.kind must be 'real' or 'imaginary'")
            if stage["duration"] < 0:
                raise ConfigError(f"{sw}.duration must be >= 0")
            stages.append(stage)
        protocols.append({"name": name, "stages": stages})
    return protocols


def _parse_grid(raw) -> dict:
    _check_keys(raw, _SECTION_KEYS["grid"], "grid")
    grid = {
        "kind": _get(raw, "kind", str, "grid", default="geometric"),
        "t_min": _get(raw, "t_min", float, "grid", required=True),
        "t_max": _get(raw, "t_max", float, "grid", required=True),
        "points": _get(raw, "points", int, "grid", required=True),
    }
    if grid["kind"] not in ("geometric", "linear"):
        raise ConfigError("grid.kind must be 'geometric' or 'linear'")
    if grid["points"] < 1:
        raise ConfigError("grid.points must be >= 1")
    if grid["t_min"] > grid["t_max"]:
        raise ConfigError("grid.t_min must not exceed grid.t_max")
    if grid["kind"] == "geometric" and grid["t_min"] <= 0:
        raise ConfigError("geometric grids need t_min > 0")
    if grid["points"] > 1 and grid["t_min"] == grid["t_max"]:
        raise ConfigError("grid with several points needs t_min < t_max")
    return grid


def _parse_observe(raw, L: int) -> dict:
    _check_keys(raw, _SECTION_KEYS["observe"], "observe")
    observe = {
        "observables": list(raw.get("observables", ["ea", "energy", "cv"])),
        "subsystem_size": _get(raw, "subsystem_size", int, "observe", default=max(1, round(L / 3))),
        "pe_bins": _get(raw, "pe_bins", int, "observe", default=60),
    }
    obs = observe["observables"]
    if not isinstance(obs, list) or not obs or not all(isinstance(o, str) for o in obs):
        raise ConfigError("observe.observables must be a nonempty list of names")
    for o in obs:
        if o not in OBSERVABLES:
            raise ConfigError(f"unknown observable {o!r}; expected subset of {OBSERVABLES}")
    if not 1 <= observe["subsystem_size"] < L:
        raise ConfigError(f"observe.subsystem_size must lie in [1, {L - 1}]")
    if observe["pe_bins"] < 1:
        raise ConfigError("observe.pe_bins must be >= 1")
    return observe


def _parse_ensemble(raw) -> dict:
    _check_keys(raw, _SECTION_KEYS["ensemble"], "ensemble")
    ens = {
        "n_realizations": _get(raw, "n_realizations", int, "ensemble", default=500),
        "master_seed": _get(raw, "master_seed", int, "ensemble", default=0),
    }
    if ens["n_realizations"] < 1:
        raise ConfigError("ensemble.n_realizations must be >= 1")
    return ens


def _parse_output(raw) -> dict:
    _check_keys(raw, _SECTION_KEYS["output"], "output")
    out = {
        "directory": _get(raw, "directory", str, "output", default="out"),
        "format": _get(raw, "format", str, "output", default="csv"),
    }
    if out["format"] != "csv":
        raise ConfigError(f"output.format must be 'csv', got {out['format']!r}")
    return out


def parse_config(document: dict) -> ExperimentConfig:
    _check_keys(document, _TOP_KEYS, "config")
    model = _parse_model(document.get("model", {}))
    cfg = ExperimentConfig(
        model=model,
        state=_parse_state(document.get("state", {"theta_over_pi": 0.0})),
        protocols=_parse_protocols(document.get("protocols", [{"name": "direct", "stages": [{"gamma": model["gamma_sym"], "duration": 0.0, "kind": "imaginary"}]}])),
        grid=_parse_grid(document.get("grid", {"kind": "linear", "t_min": 0.0, "t_max": 0.0, "points": 1})),
        observe=_parse_observe(document.get("observe", {}), model["L"]),
        ensemble=_parse_ensemble(document.get("ensemble", {})),
        output=_parse_output(document.get("output", {})),
    )
    grid = cfg.grid_times()
    for proto in cfg.protocols:
        total = sum(s["duration"] for s in proto["stages"])
        if grid[-1] > total + 1e-9:
            raise ConfigError(
                f"grid extends to {grid[-1]:g} but protocol {proto['name']!r} lasts {total:g}"
            )
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            document = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(document)
