"""Outer policy-improvement loop: rollouts, optimizer updates, evaluations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..composite import CompositePoint, default_point
from ..config import ExperimentConfig, stream
from ..envs import make_env
from ..errors import ConfigError
from ..policy import (
    TRAJECTORY,
    ActionAdapter,
    FeatureMap,
    PolicyParams,
    TangentFrame,
    initial_theta,
)
from .cmaes import cmaes_ask, cmaes_init, cmaes_tell
from .power import PowerState, power_update
from .rollout import Rollout, run_episode


@dataclass(frozen=True)
class CurveRecord:
    seed: int
    rollout_index: int
    return_: float
    evaluation_return: float | None = None


@dataclass
class SeedStats:
    actions: int = 0
    repairs: int = 0
    repaired_actions: int = 0
    failures: int = 0
    initial_eval_return: float = math.nan
    final_eval_return: float = math.nan
    final_eval_distance: float = math.nan
    final_theta: np.ndarray | None = None

    def absorb(self, rollout: Rollout) -> None:
        self.actions += len(rollout.steps)
        self.repairs += rollout.repairs
        self.repaired_actions += sum(1 for s in rollout.steps if s.repairs)
        self.failures += int(rollout.failed)


@dataclass
class LearningCurve:
    records: list[CurveRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    stats: dict[int, SeedStats] = field(default_factory=dict)

    def for_seed(self, seed: int) -> list[CurveRecord]:
        return [r for r in self.records if r.seed == seed]

    def evaluations(self, seed: int) -> list[CurveRecord]:
        return [r for r in self.records if r.seed == seed and r.evaluation_return is not None]

    def extend(self, other: "LearningCurve") -> None:
        self.records.extend(other.records)
        self.stats.update(other.stats)
        if not self.metadata:
            self.metadata = dict(other.metadata)


@dataclass(frozen=True)
class Setup:
    """Everything a run needs besides the optimizer state."""

    env: object
    adapter: ActionAdapter
    features: FeatureMap
    frame0: TangentFrame
    theta0: np.ndarray


def _base_point(cfg: ExperimentConfig, factors) -> CompositePoint:
    if cfg.policy.base_p is None:
        return default_point(factors)
    pts = cfg.policy.base_p
    if len(pts) != len(factors):
        raise ConfigError(f"policy.base_p: expected {len(factors)} points, got {len(pts)}")
    try:
        return CompositePoint(tuple(factors), tuple(np.asarray(p, dtype=float) for p in pts))
    except ValueError as exc:
        raise ConfigError(f"policy.base_p: {exc}") from None


def build(cfg: ExperimentConfig, seed: int, adapter_mode: str | None = None) -> Setup:
    env_rng = stream(cfg.env.seed, 0) if cfg.env.seed is not None else stream(cfg.master_seed, seed, 0)
    env = make_env(cfg.env.kind, env_rng, **cfg.env.params)
    adapter = ActionAdapter(adapter_mode or cfg.adapter, hemisphere=cfg.policy.hemisphere)
    factors = env.factors
    kind = cfg.policy.features
    if kind == "auto":
        kind = "time-rbf" if env.frame_mode == TRAJECTORY else "constant"
    state_dim = sum(f.tangent_size for f in factors) if kind == "state-linear" else 0
    features = FeatureMap(kind, cfg.policy.n_basis, cfg.policy.rbf_width, state_dim)
    base_p = _base_point(cfg, factors)
    start = env.reset()
    if env.frame_mode == TRAJECTORY:
        frame0 = TangentFrame(base_p, start, TRAJECTORY)
    else:
        frame0 = TangentFrame.at(base_p)
    theta0 = initial_theta(adapter, features, start, base_p, env.frame_mode)
    return Setup(env, adapter, features, frame0, theta0)


def _episode(setup: Setup, params: PolicyParams, rng=None, noise=None) -> Rollout:
    return run_episode(setup.env, params, setup.adapter, setup.frame0, rng,
                       features=setup.features, noise=noise)


class _Bookkeeper:
    """Fills in failed-rollout returns and collects records."""

    def __init__(self, seed: int):
        self.seed = seed
        self.records: list[CurveRecord] = []
        self.stats = SeedStats()
        self.worst = math.inf

    def score(self, rollout: Rollout) -> float:
        self.stats.absorb(rollout)
        if rollout.failed or not math.isfinite(rollout.return_):
            return (self.worst if math.isfinite(self.worst) else 0.0) - 1.0
        self.worst = min(self.worst, rollout.return_)
        return rollout.return_

    def evaluate(self, setup: Setup, params: PolicyParams) -> tuple[float, Rollout]:
        ro = _episode(setup, params)
        ret = self.score(ro)
        self.stats.final_eval_return = ret
        self.stats.final_eval_distance = ro.mean_distance
        self.stats.final_theta = params.theta.copy()
        return ret, ro


def train_seed(cfg: ExperimentConfig, seed: int, adapter_mode: str | None = None,
               setup: Setup | None = None) -> LearningCurve:
    """Run one seed of ``cfg``; evaluations happen at rollout 0 and every ``eval_interval``."""
    setup = setup or build(cfg, seed, adapter_mode)
    book = _Bookkeeper(seed)
    algo = cfg.algorithm
    factors = setup.env.factors
    interval = cfg.eval_interval

    if algo.name == "power":
        params = PolicyParams.isotropic(factors, setup.theta0, algo.params["init_std"])
        state = PowerState(params, (), algo.params["n_elites"], algo.params["decay"])
        ev, _ = book.evaluate(setup, state.params)
        book.stats.initial_eval_return = ev
        book.records.append(CurveRecord(seed, 0, ev, ev))
        for i in range(1, cfg.budget + 1):
            ro = _episode(setup, state.params, stream(cfg.master_seed, seed, 2, i))
            ret = book.score(ro)
            state = power_update(state, ro, ret)
            ev = book.evaluate(setup, state.params)[0] if i % interval == 0 else None
            book.records.append(CurveRecord(seed, i, ret, ev))
    elif algo.name == "cmaes":
        shape = setup.theta0.shape
        zero = np.zeros(shape)

        def as_params(x):
            return PolicyParams(factors, np.asarray(x).reshape(shape), zero)

        es = cmaes_init(setup.theta0.ravel(), algo.params["sigma0"], algo.params["popsize"])
        ev, _ = book.evaluate(setup, as_params(es.mean))
        book.stats.initial_eval_return = ev
        book.records.append(CurveRecord(seed, 0, ev, ev))
        opt_rng = stream(cfg.master_seed, seed, 1)
        i = 0
        while i < cfg.budget:
            cands = cmaes_ask(es, opt_rng)
            told = []
            for x in cands:
                if i >= cfg.budget:
                    break
                i += 1
                ret = book.score(_episode(setup, as_params(x)))
                told.append((x, ret))
                ev = book.evaluate(setup, as_params(es.mean))[0] if i % interval == 0 else None
                book.records.append(CurveRecord(seed, i, ret, ev))
            if len(told) == es.lam:
                es = cmaes_tell(es, told)
    else:
        raise ConfigError(f"algorithm.name: unknown algorithm {algo.name!r}")

    meta = {
        "algorithm": algo.name,
        "adapter": setup.adapter.mode,
        "env": cfg.env.kind,
        "config_hash": cfg.hash(),
    }
    return LearningCurve(book.records, meta, {seed: book.stats})


def train(cfg: ExperimentConfig, adapter_mode: str | None = None) -> LearningCurve:
    """Run every seed of ``cfg`` sequentially and merge the curves."""
    curve = LearningCurve()
    for seed in cfg.seeds:
        curve.extend(train_seed(cfg, seed, adapter_mode))
    return curve
