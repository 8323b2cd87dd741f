"""One episode of the geometric policy loop."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import repair
from ..composite import CompositePoint, CompositeTangent, composite_log
from ..errors import AntipodalError, NotPositiveDefinite
from ..policy import (
    ActionAdapter,
    FeatureMap,
    PolicyParams,
    TangentFrame,
    frame_update,
    policy_mean,
    sample_noise,
)


@dataclass(frozen=True)
class Step:
    state: CompositePoint
    tangent_action: CompositeTangent
    manifold_action: CompositePoint
    reward: float
    distance: float
    repairs: int


@dataclass
class Rollout:
    steps: list[Step]
    return_: float
    noise: np.ndarray | None = None
    failed: bool = False
    horizon: int = 0

    @property
    def repairs(self) -> int:
        return sum(s.repairs for s in self.steps)

    @property
    def mean_distance(self) -> float:
        if not self.steps:
            return math.nan
        return float(np.mean([s.distance for s in self.steps]))


def run_episode(env, params: PolicyParams, adapter: ActionAdapter, frame0: TangentFrame,
                rng: np.random.Generator | None = None, *,
                features: FeatureMap | None = None,
                noise: np.ndarray | None = None,
                penalty: float | None = None) -> Rollout:
    """Execute one rollout of ``env.horizon`` steps.

    Exploration is a single parameter perturbation ``eps`` per rollout, drawn
    from ``rng`` (or passed in as ``noise``); with neither, the rollout is the
    noise-free evaluation of ``params.theta``.

    A geometric failure (antipodal log/transport in the adapter, or an action
    too ill-conditioned for the SPD distance) stops the rollout early and sets
    ``failed``; its return is ``penalty`` or NaN when no penalty is given.
    """
    features = features or FeatureMap("constant")
    if noise is None and rng is not None:
        noise = sample_noise(params, rng)
    theta = params.theta if noise is None else params.theta + noise
    acting = params.with_theta(theta)

    state = env.reset()
    frame = frame0
    horizon = env.horizon
    steps: list[Step] = []
    total = 0.0
    for t in range(horizon):
        tau = t / (horizon - 1) if horizon > 1 else 0.0
        svec = composite_log(frame.base_p, state).flat if features.kind == "state-linear" else None
        a_p = policy_mean(acting, features(tau, svec))
        try:
            with repair.counting() as counter:
                action = adapter(frame, a_p)
            result = env.step(action)
        except (AntipodalError, NotPositiveDefinite):
            ret = math.nan if penalty is None else float(penalty)
            return Rollout(steps, ret, noise, failed=True, horizon=horizon)
        steps.append(Step(state, a_p, action, result.reward, result.distance,
                          sum(counter.values())))
        total += result.reward
        state = result.next_state
        frame = frame_update(frame, state)
        if result.done:
            break
    return Rollout(steps, total, noise, horizon=horizon)
