"""PoWER: reward-weighted averaging of the best parameter perturbations."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..policy import PolicyParams

WEIGHT_FLOOR = 1e-10


@dataclass(frozen=True)
class Elite:
    return_: float
    theta: np.ndarray  # the perturbed parameters that produced ``return_``


@dataclass(frozen=True)
class PowerState:
    params: PolicyParams
    elite_buffer: tuple[Elite, ...] = field(default_factory=tuple)
    k: int = 10
    decay: float = 0.999


def power_update(state: PowerState, rollout, return_: float | None = None) -> PowerState:
    """Insert the rollout into the elite buffer and re-estimate ``theta``.

    Elites are stored as the absolute parameters they were sampled with, so the
    update is ``theta += sum_k w_k (theta_k - theta) / sum_k w_k``.  Weights are
    the elite returns shifted by the buffer minimum plus a 1e-10 floor.  The
    exploration standard deviation is then multiplied by ``decay``.

    ``return_`` overrides ``rollout.return_`` (used to penalize failed rollouts).
    """
    params = state.params
    ret = rollout.return_ if return_ is None else return_
    eps = np.zeros_like(params.theta) if rollout.noise is None else rollout.noise
    new = Elite(float(ret), params.theta + eps)
    buf = sorted(state.elite_buffer + (new,), key=lambda e: -e.return_)[: state.k]

    rets = np.array([e.return_ for e in buf])
    w = rets - rets.min() + WEIGHT_FLOOR
    step = sum(wk * (e.theta - params.theta) for wk, e in zip(w, buf)) / w.sum()
    params = params.with_theta(params.theta + step).scaled_sigma(state.decay ** 2)
    return replace(state, params=params, elite_buffer=tuple(buf))
