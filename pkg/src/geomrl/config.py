"""Experiment configuration: strict JSON schema, defaults and seed splitting.

Config files are UTF-8 JSON objects::

    {
      "env":       {"kind": "quat_wahba", "size": 10, "reward_kind": "exp-neg-dist"},
      "algorithm": {"name": "power", "init_std": 0.3},
      "adapter":   "grl",
      "budget":    1000,
      "seeds":     [1, 2, 3, 4, 5]
    }

Unknown keys anywhere are errors.  Missing keys take the defaults below;
:meth:`ExperimentConfig.to_dict` returns the fully resolved form.

Randomness: every stream is a :class:`numpy.random.SeedSequence` with entropy
``master_seed`` and a spawn key starting with the run seed:

* ``(seed, 0)``     -- environment targets (unless ``env.seed`` pins them; then
  ``SeedSequence(env.seed)`` is used for every run seed),
* ``(seed, 1)``     -- optimizer sampling (CMA-ES candidates),
* ``(seed, 2, i)``  -- exploration noise of rollout ``i``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .composite import S3, SPD
from .envs import ENV_KINDS, REWARD_KINDS
from .errors import ConfigError
from .policy import ADAPTER_MODES, check_adapter_supports

ENV_DEFAULTS: dict[str, dict[str, Any]] = {
    "quat_wahba": {"size": 10, "n_obs": 10, "reward_kind": "exp-neg-dist", "noise_std": 0.0},
    "spd_wahba": {"size": 3, "n_obs": 10, "d": 3, "spread": 1.0, "reward_kind": "neg-dist"},
    "quat_traj": {"horizon": 50, "amplitude": 0.025},
    "spd_traj": {"horizon": 50, "d": 3, "spread": 1.0},
}

ALGO_DEFAULTS: dict[str, dict[str, Any]] = {
    "power": {"init_std": 0.3, "decay": 0.999, "n_elites": 10},
    "cmaes": {"sigma0": 0.3, "popsize": None},
}

POLICY_DEFAULTS: dict[str, Any] = {
    "features": "auto",
    "n_basis": 10,
    "rbf_width": None,
    "hemisphere": True,
    "base_p": None,
}

TOP_DEFAULTS: dict[str, Any] = {
    "adapter": "grl",
    "budget": 1000,
    "eval_interval": 10,
    "seeds": [1, 2, 3, 4, 5],
    "master_seed": 0,
    "output": "out",
}


def _int(path: str, v, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _num(path: str, v, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if not np.isfinite(v):
        raise ConfigError(f"{path}: must be finite")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {v}")
    if nonneg and v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {v}")
    return v


def _check_keys(path: str, given: dict, allowed) -> None:
    if not isinstance(given, dict):
        raise ConfigError(f"{path or 'config'}: expected a JSON object")
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{unknown[0]}: unknown key")


@dataclass(frozen=True)
class EnvConfig:
    kind: str
    params: dict[str, Any]
    seed: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("env.kind: required")
        kind = d["kind"]
        if kind not in ENV_KINDS:
            raise ConfigError(f"env.kind: unknown env kind {kind!r}; expected one of {list(ENV_KINDS)}")
        defaults = ENV_DEFAULTS[kind]
        _check_keys("env", d, {"kind", "seed", *defaults})
        params = dict(defaults)
        for key in defaults:
            if key in d:
                params[key] = d[key]
        for key in ("size", "n_obs", "horizon"):
            if key in params:
                params[key] = _int(f"env.{key}", params[key], 1)
        if "d" in params:
            params["d"] = _int("env.d", params["d"])
            if params["d"] not in (2, 3, 6):
                raise ConfigError(f"env.d: SPD dimension must be 2, 3 or 6, got {params['d']}")
        for key in ("spread", "amplitude", "noise_std"):
            if key in params:
                params[key] = _num(f"env.{key}", params[key], nonneg=True)
        if "reward_kind" in params and params["reward_kind"] not in REWARD_KINDS:
            raise ConfigError(f"env.reward_kind: expected one of {list(REWARD_KINDS)}")
        seed = d.get("seed")
        if seed is not None:
            seed = _int("env.seed", seed, 0)
        return cls(kind, params, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params, "seed": self.seed}


@dataclass(frozen=True)
class AlgoConfig:
    name: str
    params: dict[str, Any]

    @classmethod
    def from_dict(cls, d: dict) -> "AlgoConfig":
        if not isinstance(d, dict) or "name" not in d:
            raise ConfigError("algorithm.name: required")
        name = d["name"]
        if name not in ALGO_DEFAULTS:
            raise ConfigError(f"algorithm.name: unknown algorithm {name!r}; expected one of {list(ALGO_DEFAULTS)}")
        defaults = ALGO_DEFAULTS[name]
        _check_keys("algorithm", d, {"name", *defaults})
        params = {**defaults, **{k: d[k] for k in defaults if k in d}}
        if name == "power":
            params["init_std"] = _num("algorithm.init_std", params["init_std"], positive=True)
            params["decay"] = _num("algorithm.decay", params["decay"], positive=True)
            if params["decay"] > 1:
                raise ConfigError("algorithm.decay: must be <= 1")
            params["n_elites"] = _int("algorithm.n_elites", params["n_elites"], 1)
        else:
            params["sigma0"] = _num("algorithm.sigma0", params["sigma0"], positive=True)
            if params["popsize"] is not None:
                params["popsize"] = _int("algorithm.popsize", params["popsize"], 2)
        return cls(name, params)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass(frozen=True)
class PolicyConfig:
    features: str = "auto"
    n_basis: int = 10
    rbf_width: float | None = None
    hemisphere: bool = True
    base_p: list | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        _check_keys("policy", d, POLICY_DEFAULTS)
        p = {**POLICY_DEFAULTS, **d}
        if p["features"] not in ("auto", "constant", "time-rbf", "state-linear"):
            raise ConfigError(f"policy.features: unknown feature kind {p['features']!r}")
        n_basis = _int("policy.n_basis", p["n_basis"], 1)
        width = None if p["rbf_width"] is None else _num("policy.rbf_width", p["rbf_width"], positive=True)
        if not isinstance(p["hemisphere"], bool):
            raise ConfigError("policy.hemisphere: expected true or false")
        if p["base_p"] is not None and not isinstance(p["base_p"], list):
            raise ConfigError("policy.base_p: expected a list with one point per factor")
        return cls(p["features"], n_basis, width, p["hemisphere"], p["base_p"])

    def to_dict(self) -> dict:
        return {"features": self.features, "n_basis": self.n_basis, "rbf_width": self.rbf_width,
                "hemisphere": self.hemisphere, "base_p": self.base_p}


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig
    algorithm: AlgoConfig
    adapter: str = "grl"
    budget: int = 1000
    eval_interval: int = 10
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    master_seed: int = 0
    output: str = "out"
    policy: PolicyConfig = field(default_factory=PolicyConfig)

    @classmethod
    def from_dict(cls, d: dict, allow_zero_budget: bool = False) -> "ExperimentConfig":
        _check_keys("", d, {"env", "algorithm", "policy", *TOP_DEFAULTS})
        if "env" not in d:
            raise ConfigError("env: required")
        if "algorithm" not in d:
            raise ConfigError("algorithm: required")
        env = EnvConfig.from_dict(d["env"])
        algo = AlgoConfig.from_dict(d["algorithm"])
        policy = PolicyConfig.from_dict(d.get("policy", {}))
        top = {**TOP_DEFAULTS, **{k: d[k] for k in TOP_DEFAULTS if k in d}}
        if top["adapter"] not in ADAPTER_MODES:
            raise ConfigError(f"adapter: unknown adapter {top['adapter']!r}; expected one of {list(ADAPTER_MODES)}")
        budget = _int("budget", top["budget"], 0 if allow_zero_budget else 1)
        interval = _int("eval_interval", top["eval_interval"], 1)
        seeds = top["seeds"]
        if not isinstance(seeds, list) or not seeds:
            raise ConfigError("seeds: expected a non-empty list of integers")
        seeds = tuple(_int(f"seeds[{i}]", s, 0) for i, s in enumerate(seeds))
        if len(set(seeds)) != len(seeds):
            raise ConfigError("seeds: entries must be distinct")
        master = _int("master_seed", top["master_seed"], 0)
        if not isinstance(top["output"], str):
            raise ConfigError("output: expected a path string")
        cfg = cls(env, algo, top["adapter"], budget, interval, seeds, master, top["output"], policy)
        kinds = [S3()] if env.kind.startswith("quat") else [SPD(env.params["d"])]
        try:
            check_adapter_supports(cfg.adapter, kinds)
        except ConfigError as exc:
            raise ConfigError(f"adapter: {exc}") from None
        return cfg

    def to_dict(self) -> dict:
        return {
            "env": self.env.to_dict(),
            "algorithm": self.algorithm.to_dict(),
            "policy": self.policy.to_dict(),
            "adapter": self.adapter,
            "budget": self.budget,
            "eval_interval": self.eval_interval,
            "seeds": list(self.seeds),
            "master_seed": self.master_seed,
            "output": self.output,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def hash(self) -> str:
        body = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def load_config(path, allow_zero_budget: bool = False) -> ExperimentConfig:
    """Parse a config file; JSON syntax errors report line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return ExperimentConfig.from_dict(data, allow_zero_budget=allow_zero_budget)


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Random stream for spawn key ``key`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))
