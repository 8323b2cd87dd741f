"""Simulated benchmarks: quaternion/SPD Wahba problems and trajectory tracking.

Every environment exposes the same small interface used by the rollout loop:

* ``factors``   -- action/state manifold factors,
* ``horizon``   -- episode length ``T``,
* ``frame_mode``-- ``"single-step"`` or ``"trajectory"``,
* ``reset()``   -- returns the initial :class:`CompositePoint` state,
* ``step(a)``   -- returns a :class:`StepResult`.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import manifolds as mf
from .composite import S3, SPD, CompositePoint, Factor, composite_distances
from .errors import BadLength, ConfigError, NotPositiveDefinite
from .policy import SINGLE_STEP, TRAJECTORY

NEG_DIST = "neg-dist"
EXP_NEG_DIST = "exp-neg-dist"
REWARD_KINDS = (NEG_DIST, EXP_NEG_DIST)


@dataclass(frozen=True)
class StepResult:
    reward: float
    done: bool
    next_state: CompositePoint
    distance: float  # mean geodesic distance to the target(s) at this step


def _reward(kind: str, dists: np.ndarray) -> float:
    if kind == NEG_DIST:
        return -float(np.mean(dists))
    return float(np.mean(np.exp(-dists)))


def _check_reward_kind(kind: str) -> str:
    if kind not in REWARD_KINDS:
        raise ConfigError(f"unknown reward_kind {kind!r}; expected one of {REWARD_KINDS}")
    return kind


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Wahba problems
# ---------------------------------------------------------------------------

def wahba_cost(q: np.ndarray, y: np.ndarray, z: np.ndarray,
               weights: np.ndarray | None = None) -> float:
    """Wahba loss ``1/2 sum_k a_k ||z_k - R(q) y_k||^2`` (``a_k = 1`` by default)."""
    y = np.atleast_2d(y)
    z = np.atleast_2d(z)
    a = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    resid = z - y @ mf.quat_to_rotmat(q).T
    return 0.5 * float(np.sum(a * np.sum(resid ** 2, axis=1)))


def _unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class QuatWahbaEnv:
    """``size`` independent rotations to recover from ``n_obs`` vector pairs each.

    One episode is a single step whose action holds one quaternion per target.
    The reward averages ``-d`` or ``exp(-d)`` over the targets.
    """

    frame_mode = SINGLE_STEP
    horizon = 1

    def __init__(self, targets: np.ndarray, y: np.ndarray, z: np.ndarray,
                 reward_kind: str = EXP_NEG_DIST):
        self.targets = np.asarray(targets, dtype=float).reshape(-1, 4)
        self.y = np.asarray(y, dtype=float).reshape(len(self.targets), -1, 3)
        self.z = np.asarray(z, dtype=float).reshape(self.y.shape)
        self.reward_kind = _check_reward_kind(reward_kind)
        self.factors: tuple[Factor, ...] = tuple(S3() for _ in self.targets)
        self._t = 0

    @classmethod
    def generate(cls, rng, size: int = 10, n_obs: int = 10,
                 reward_kind: str = EXP_NEG_DIST, noise_std: float = 0.0) -> "QuatWahbaEnv":
        rng = _rng(rng)
        targets = np.stack([mf.random_quaternion(rng) for _ in range(size)])
        y = np.stack([_unit_vectors(rng, n_obs) for _ in range(size)])
        z = np.einsum("kij,knj->kni", np.stack([mf.quat_to_rotmat(q) for q in targets]), y)
        if noise_std > 0:
            z = z + noise_std * rng.standard_normal(z.shape)
        return cls(targets, y, z, reward_kind)

    @property
    def size(self) -> int:
        return len(self.targets)

    def target_point(self) -> CompositePoint:
        return CompositePoint(self.factors, tuple(self.targets))

    def observation(self) -> np.ndarray:
        """Flattened ``(Y, Z)`` pair handed to the policy as state."""
        return np.concatenate([self.y.ravel(), self.z.ravel()])

    def reset(self) -> CompositePoint:
        self._t = 0
        return CompositePoint(self.factors, tuple(mf.IDENTITY_QUAT.copy() for _ in self.factors))

    def step(self, action: CompositePoint) -> StepResult:
        return quat_wahba_step(self, action)

    def clone(self) -> "QuatWahbaEnv":
        return copy.deepcopy(self)


def quat_wahba_step(env: QuatWahbaEnv, action: CompositePoint) -> StepResult:
    d = composite_distances(env.target_point(), action)
    env._t = 1
    return StepResult(_reward(env.reward_kind, d), True, action, float(np.mean(d)))


class SpdWahbaEnv:
    """``size`` stiffness matrices to recover from displacement/force pairs."""

    frame_mode = SINGLE_STEP
    horizon = 1

    def __init__(self, targets: np.ndarray, y: np.ndarray, z: np.ndarray | None = None,
                 reward_kind: str = NEG_DIST):
        self.targets = np.asarray(targets, dtype=float)
        if self.targets.ndim == 2:
            self.targets = self.targets[None]
        d = self.targets.shape[-1]
        self.y = np.asarray(y, dtype=float).reshape(len(self.targets), -1, d)
        self.z = np.einsum("kij,knj->kni", self.targets, self.y) if z is None else np.asarray(z, dtype=float)
        self.reward_kind = _check_reward_kind(reward_kind)
        self.factors: tuple[Factor, ...] = tuple(SPD(d) for _ in self.targets)
        self._t = 0

    @classmethod
    def generate(cls, rng, size: int = 3, n_obs: int = 10, d: int = 3,
                 spread: float = 1.0, reward_kind: str = NEG_DIST) -> "SpdWahbaEnv":
        rng = _rng(rng)
        targets = np.stack([mf.random_spd(rng, d, spread) for _ in range(size)])
        y = rng.standard_normal((size, n_obs, d))
        return cls(targets, y, reward_kind=reward_kind)

    @property
    def size(self) -> int:
        return len(self.targets)

    def target_point(self) -> CompositePoint:
        return CompositePoint(self.factors, tuple(self.targets))

    def observation(self) -> np.ndarray:
        return np.concatenate([self.y.ravel(), self.z.ravel()])

    def reset(self) -> CompositePoint:
        self._t = 0
        d = self.targets.shape[-1]
        return CompositePoint(self.factors, tuple(np.eye(d) for _ in self.factors))

    def step(self, action: CompositePoint) -> StepResult:
        return spd_wahba_step(self, action)

    def clone(self) -> "SpdWahbaEnv":
        return copy.deepcopy(self)


def spd_wahba_step(env: SpdWahbaEnv, action: CompositePoint) -> StepResult:
    d = composite_distances(env.target_point(), action)
    env._t = 1
    return StepResult(_reward(env.reward_kind, d), True, action, float(np.mean(d)))


# ---------------------------------------------------------------------------
# Trajectory tracking
# ---------------------------------------------------------------------------

class TrajEnv:
    """Track a target trajectory; the action at step ``t`` becomes the next state.

    The per-step reward is ``exp(-d(target_t, action_t))`` so the episode return
    lies in ``(0, T]``.
    """

    frame_mode = TRAJECTORY

    def __init__(self, factor: Factor, targets: Sequence[np.ndarray], start: np.ndarray):
        self.factors: tuple[Factor, ...] = (factor,)
        self.targets = [np.asarray(p, dtype=float) for p in targets]
        self.start = np.asarray(start, dtype=float)
        self._t = 0
        self._state = CompositePoint(self.factors, (self.start.copy(),))

    @property
    def horizon(self) -> int:
        return len(self.targets)

    def reset(self) -> CompositePoint:
        self._t = 0
        self._state = CompositePoint(self.factors, (self.start.copy(),))
        return self._state

    def step(self, action: CompositePoint) -> StepResult:
        return traj_step(self, action)

    def clone(self) -> "TrajEnv":
        return copy.deepcopy(self)


class QuatTrajEnv(TrajEnv):
    def __init__(self, targets: Sequence[np.ndarray], start: np.ndarray | None = None):
        super().__init__(S3(), targets, mf.IDENTITY_QUAT if start is None else start)

    @classmethod
    def generate(cls, rng, horizon: int = 50, amplitude: float = 0.025) -> "QuatTrajEnv":
        return cls(gen_quat_traj(rng, horizon, amplitude))


class SpdTrajEnv(TrajEnv):
    def __init__(self, targets: Sequence[np.ndarray], start: np.ndarray | None = None):
        targets = list(targets)
        d = targets[0].shape[0]
        super().__init__(SPD(d), targets, np.eye(d) if start is None else start)

    @classmethod
    def generate(cls, rng, horizon: int = 50, d: int = 3, spread: float = 1.0) -> "SpdTrajEnv":
        start, targets = _spd_curve(_rng(rng), horizon, d, spread)
        return cls(targets, start)


def traj_step(env: TrajEnv, action: CompositePoint) -> StepResult:
    if env._t >= env.horizon:
        raise RuntimeError("episode already finished; call reset()")
    target = CompositePoint(env.factors, (env.targets[env._t],))
    d = float(composite_distances(target, action)[0])
    env._t += 1
    env._state = action
    return StepResult(math.exp(-d), env._t >= env.horizon, action, d)


def gen_quat_traj(seed, horizon: int, amplitude: float, n_waves: int = 3) -> list[np.ndarray]:
    """Smooth orientation trajectory starting next to the identity.

    Each step applies an exp-map increment of norm ``<= amplitude`` whose
    direction varies smoothly (a random sum of sinusoids per axis), expressed in
    the identity tangent space and transported to the current point.
    """
    rng = _rng(seed)
    tau = np.linspace(0.0, 1.0, horizon)
    freq = rng.uniform(0.3, 1.5, size=(n_waves, 3))
    phase = rng.uniform(0.0, 2 * np.pi, size=(n_waves, 3))
    amp = rng.standard_normal((n_waves, 3))
    vel = np.sum(amp[None] * np.sin(2 * np.pi * freq[None] * tau[:, None, None] + phase[None]), axis=1)
    peak = np.max(np.linalg.norm(vel, axis=1))
    vel = vel * (amplitude / peak) if peak > 0 else np.zeros_like(vel)
    q = mf.IDENTITY_QUAT.copy()
    out = []
    for v in vel:
        inc = np.concatenate([[0.0], v])
        q = mf.s3_exp(q, mf.s3_transport(mf.IDENTITY_QUAT, q, inc))
        q = mf.hemisphere_flip(q / np.linalg.norm(q))
        out.append(q)
    return out


def _spd_curve(rng: np.random.Generator, horizon: int, d: int, spread: float,
               n_ctrl: int = 4) -> tuple[np.ndarray, list[np.ndarray]]:
    ctrl = [mf.random_spd(rng, d, spread) for _ in range(n_ctrl)]
    logs = [mf.spd_log(ctrl[i], ctrl[i + 1]) for i in range(n_ctrl - 1)]

    def at(s: float) -> np.ndarray:
        seg = min(int(s * (n_ctrl - 1)), n_ctrl - 2)
        u = s * (n_ctrl - 1) - seg
        u = u * u * (3.0 - 2.0 * u)  # smoothstep: zero velocity at control points
        return mf.spd_exp(ctrl[seg], u * logs[seg])

    targets = [at((k + 1) / horizon) for k in range(horizon)]
    return ctrl[0], targets


def gen_spd_traj(seed, horizon: int, d: int = 3, spread: float = 1.0) -> list[np.ndarray]:
    """Piecewise-geodesic SPD trajectory through random control points.

    Control points have eigenvalues in ``[2**-spread, 2**spread]``; ``spread=0``
    gives the constant identity trajectory.  The curve starts at the first
    control point (see :meth:`SpdTrajEnv.generate`).
    """
    return _spd_curve(_rng(seed), horizon, d, spread)[1]


# ---------------------------------------------------------------------------
# Plain-text trajectory tables
# ---------------------------------------------------------------------------

def save_trajectory(path, points: Sequence[np.ndarray]) -> None:
    """Write one point per line: 4 floats (quaternion) or d*d floats row-major (SPD)."""
    rows = np.stack([np.asarray(p, dtype=float).ravel() for p in points])
    np.savetxt(Path(path), rows, fmt="%.17g")


def load_trajectory(path, kind: str) -> list[np.ndarray]:
    rows = np.atleast_2d(np.loadtxt(Path(path), dtype=float, ndmin=2))
    if kind == "S3":
        if rows.shape[1] != 4:
            raise BadLength(f"quaternion table needs 4 columns, got {rows.shape[1]}")
        return [mf.s3_canonicalize(r) for r in rows]
    if kind == "SPD":
        d = int(round(math.sqrt(rows.shape[1])))
        if d * d != rows.shape[1]:
            raise BadLength(f"SPD table needs d*d columns, got {rows.shape[1]}")
        mats = [r.reshape(d, d) for r in rows]
        for m in mats:
            if not mf.is_spd(m):
                raise NotPositiveDefinite("trajectory table contains a non-SPD matrix")
        return mats
    raise ConfigError(f"unknown trajectory kind {kind!r}")


ENV_KINDS = ("quat_wahba", "spd_wahba", "quat_traj", "spd_traj")


def make_env(kind: str, rng, **params):
    """Build a benchmark instance from its kind name and parameters."""
    if kind == "quat_wahba":
        return QuatWahbaEnv.generate(rng, **params)
    if kind == "spd_wahba":
        return SpdWahbaEnv.generate(rng, **params)
    if kind == "quat_traj":
        return QuatTrajEnv.generate(rng, **params)
    if kind == "spd_traj":
        return SpdTrajEnv.generate(rng, **params)
    raise ConfigError(f"unknown env kind {kind!r}; expected one of {ENV_KINDS}")
