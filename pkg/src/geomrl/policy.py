"""Gaussian policies on a fixed tangent space and the action adapters.

A policy predicts a flat vector ``theta @ phi`` whose layout follows the
composite tangent layout of the action manifold.  The :class:`ActionAdapter`
turns that vector into a manifold action, either geometrically (``grl``:
transport from the parameterization base to the local base, then exp) or by
one of the approximation baselines that parameterize the manifold point
directly and repair it afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import manifolds as mf
from .composite import (
    EUCLID_KIND,
    S3_KIND,
    SPD_KIND,
    CompositePoint,
    CompositeTangent,
    Factor,
    composite_exp,
    composite_transport,
    tangent_size,
)
from .errors import BadLength, ConfigError, DimensionMismatch, KindMismatch

GRL = "grl"
NORMALIZE = "normalize"
CHOLESKY = "cholesky"
MANDEL = "mandel"
ADAPTER_MODES = (GRL, NORMALIZE, CHOLESKY, MANDEL)

SINGLE_STEP = "single-step"
TRAJECTORY = "trajectory"

# manifold kinds each baseline knows how to produce
_BASELINE_KINDS = {NORMALIZE: {S3_KIND}, CHOLESKY: {SPD_KIND}, MANDEL: {SPD_KIND}}


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureMap:
    """Feature vector ``phi(t, s)`` fed to the linear policy.

    ``time-rbf`` places ``n_basis`` Gaussians on normalized episode time and
    normalizes them to sum to one.  ``state-linear`` returns the flat state
    tangent followed by a constant 1.  ``constant`` is the single feature 1.
    """

    kind: str = "constant"
    n_basis: int = 10
    width: float | None = None
    state_dim: int = 0

    def __post_init__(self):
        if self.kind not in ("time-rbf", "state-linear", "constant"):
            raise ConfigError(f"unknown feature kind {self.kind!r}")
        if self.kind == "time-rbf" and self.n_basis < 1:
            raise ConfigError("time-rbf needs at least one basis function")

    @property
    def dim(self) -> int:
        if self.kind == "time-rbf":
            return self.n_basis
        if self.kind == "state-linear":
            return self.state_dim + 1
        return 1

    @property
    def centers(self) -> np.ndarray:
        if self.n_basis == 1:
            return np.array([0.5])
        return np.linspace(0.0, 1.0, self.n_basis)

    def __call__(self, tau: float = 0.0, state: np.ndarray | None = None) -> np.ndarray:
        if self.kind == "constant":
            return np.ones(1)
        if self.kind == "state-linear":
            s = np.zeros(self.state_dim) if state is None else np.asarray(state, dtype=float)
            if s.size != self.state_dim:
                raise DimensionMismatch(f"state has {s.size} entries, expected {self.state_dim}")
            return np.append(s, 1.0)
        h = self.width if self.width is not None else 1.0 / self.n_basis
        g = np.exp(-0.5 * ((tau - self.centers) / h) ** 2)
        return g / g.sum()


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolicyParams:
    """Linear-Gaussian policy ``a = (theta + eps) @ phi``, ``eps ~ N(0, sigma)``.

    ``sigma`` is either an array of per-entry variances with the shape of
    ``theta`` (diagonal mode) or a full covariance over ``theta.ravel()``.
    """

    factors: tuple[Factor, ...]
    theta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        theta = np.atleast_2d(np.asarray(self.theta, dtype=float))
        sigma = np.asarray(self.sigma, dtype=float)
        if theta.shape[0] != tangent_size(self.factors):
            raise DimensionMismatch(
                f"theta has {theta.shape[0]} rows, action layout needs {tangent_size(self.factors)}"
            )
        if sigma.shape == theta.shape:
            if np.any(sigma < 0):
                raise DimensionMismatch("diagonal exploration variances must be non-negative")
        elif sigma.shape != (theta.size, theta.size):
            raise DimensionMismatch(f"sigma shape {sigma.shape} does not match theta {theta.shape}")
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)

    @property
    def diagonal(self) -> bool:
        return self.sigma.shape == self.theta.shape

    @property
    def n_features(self) -> int:
        return self.theta.shape[1]

    def with_theta(self, theta: np.ndarray) -> "PolicyParams":
        return replace(self, theta=np.asarray(theta, dtype=float).reshape(self.theta.shape))

    def scaled_sigma(self, factor: float) -> "PolicyParams":
        return replace(self, sigma=self.sigma * factor)

    @classmethod
    def isotropic(cls, factors: Sequence[Factor], theta: np.ndarray, std: float) -> "PolicyParams":
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return cls(tuple(factors), theta, np.full(theta.shape, float(std) ** 2))


def sample_noise(params: PolicyParams, rng: np.random.Generator) -> np.ndarray:
    """Draw one parameter perturbation ``eps`` with the shape of ``theta``."""
    z = rng.standard_normal(params.theta.size)
    if params.diagonal:
        return np.sqrt(params.sigma) * z.reshape(params.theta.shape)
    chol = np.linalg.cholesky(0.5 * (params.sigma + params.sigma.T))
    return (chol @ z).reshape(params.theta.shape)


def policy_mean(params: PolicyParams, features: np.ndarray) -> CompositeTangent:
    phi = np.asarray(features, dtype=float).reshape(-1)
    if phi.size != params.n_features:
        raise DimensionMismatch(f"got {phi.size} features, theta expects {params.n_features}")
    return CompositeTangent(params.factors, params.theta @ phi)


def policy_sample(params: PolicyParams, features: np.ndarray,
                  rng: np.random.Generator) -> CompositeTangent:
    """Perturbed-parameter sample ``(theta + eps) @ phi``."""
    eps = sample_noise(params, rng)
    return policy_mean(params.with_theta(params.theta + eps), features)


# ---------------------------------------------------------------------------
# Frames and adapters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TangentFrame:
    """Parameterization base ``base_p`` (never moves) and local base ``base_l``."""

    base_p: CompositePoint
    base_l: CompositePoint
    mode: str = SINGLE_STEP

    def __post_init__(self):
        if self.base_p.factors != self.base_l.factors:
            raise KindMismatch("base_p and base_l must share factor kinds")
        if self.mode not in (SINGLE_STEP, TRAJECTORY):
            raise ConfigError(f"unknown frame mode {self.mode!r}")

    @classmethod
    def at(cls, base_p: CompositePoint, mode: str = SINGLE_STEP,
           base_l: CompositePoint | None = None) -> "TangentFrame":
        return cls(base_p, base_p if base_l is None else base_l, mode)


def frame_update(frame: TangentFrame, new_state: CompositePoint) -> TangentFrame:
    """Move the local base to ``new_state`` (trajectory mode only)."""
    if new_state.factors != frame.base_p.factors:
        raise KindMismatch("new state has different factor kinds")
    if frame.mode == SINGLE_STEP:
        return frame
    return TangentFrame(frame.base_p, new_state, frame.mode)


def _orthogonalize(frame: TangentFrame, a_p: CompositeTangent) -> CompositeTangent:
    segs = []
    for f, base, seg in zip(a_p.factors, frame.base_p.points, a_p.segments()):
        segs.append(mf.s3_project(base, seg) if f.kind == S3_KIND else seg)
    return CompositeTangent.from_segments(a_p.factors, segs)


def _flip(point: CompositePoint) -> CompositePoint:
    pts = tuple(
        mf.hemisphere_flip(p) if f.kind == S3_KIND else p
        for f, p in zip(point.factors, point.points)
    )
    return CompositePoint(point.factors, pts)


def grl_map_action(frame: TangentFrame, a_p: CompositeTangent,
                   hemisphere: bool = True) -> tuple[CompositePoint, CompositeTangent]:
    """Transport ``a_p`` from ``base_p`` to ``base_l`` and project it with exp.

    S^3 segments are first projected onto the tangent space at ``base_p``.
    With ``hemisphere`` the resulting quaternions are sign-flipped onto the
    canonical hemisphere (no renormalization happens).

    Returns the manifold action and the transported local tangent ``a_l``.
    """
    if a_p.factors != frame.base_p.factors:
        raise KindMismatch("action layout does not match the frame")
    a_p = _orthogonalize(frame, a_p)
    a_l = composite_transport(frame.base_p, frame.base_l, a_p)
    action = composite_exp(frame.base_l, a_l)
    if hemisphere:
        action = _flip(action)
    return action, a_l


def baseline_map_action(mode: str, factors: Sequence[Factor], raw: np.ndarray) -> CompositePoint:
    """Map a raw vector to a manifold point with an approximation baseline.

    ``normalize`` divides each 4-block by its norm (and canonicalizes),
    ``cholesky`` rebuilds ``L^T L`` from an upper-triangular factor, ``mandel``
    unvectorizes a symmetric matrix and projects it to the nearest SPD matrix.
    Euclidean factors are passed through.
    """
    factors = tuple(factors)
    raw = np.asarray(raw, dtype=float).reshape(-1)
    if raw.size != tangent_size(factors):
        raise BadLength(f"raw action has {raw.size} entries, layout needs {tangent_size(factors)}")
    check_adapter_supports(mode, factors)
    pts, i = [], 0
    for f in factors:
        seg = raw[i:i + f.tangent_size]
        i += f.tangent_size
        if f.kind == EUCLID_KIND:
            pts.append(seg.copy())
        elif mode == NORMALIZE:
            pts.append(mf.s3_canonicalize(seg))
        elif mode == CHOLESKY:
            pts.append(mf.chol_unvec(seg))
        else:
            pts.append(mf.nearest_spd(mf.mandel_unvec(seg)))
    return CompositePoint(factors, tuple(pts))


def check_adapter_supports(mode: str, factors: Sequence[Factor]) -> None:
    if mode not in ADAPTER_MODES:
        raise ConfigError(f"unknown adapter mode {mode!r}")
    if mode == GRL:
        return
    allowed = _BASELINE_KINDS[mode] | {EUCLID_KIND}
    bad = sorted({f.kind for f in factors} - allowed)
    if bad:
        raise ConfigError(f"adapter {mode!r} cannot produce {', '.join(bad)} actions")


def applicable_adapters(factors: Sequence[Factor]) -> list[str]:
    """GRL followed by every baseline that supports all factor kinds."""
    out = [GRL]
    for mode in (NORMALIZE, CHOLESKY, MANDEL):
        try:
            check_adapter_supports(mode, factors)
        except ConfigError:
            continue
        out.append(mode)
    return out


@dataclass(frozen=True)
class ActionAdapter:
    mode: str = GRL
    hemisphere: bool = True

    def __post_init__(self):
        if self.mode not in ADAPTER_MODES:
            raise ConfigError(f"unknown adapter mode {self.mode!r}")

    def __call__(self, frame: TangentFrame, raw: CompositeTangent) -> CompositePoint:
        if self.mode == GRL:
            return grl_map_action(frame, raw, hemisphere=self.hemisphere)[0]
        return baseline_map_action(self.mode, raw.factors, raw.flat)

    def encode(self, point: CompositePoint, base_p: CompositePoint) -> np.ndarray:
        """Raw vector that this adapter maps back to ``point`` in single-step mode."""
        segs = []
        for f, p, b in zip(point.factors, point.points, base_p.points):
            if f.kind == EUCLID_KIND:
                segs.append(p - b if self.mode == GRL else p)
            elif self.mode == GRL:
                segs.append(mf.s3_log(b, p) if f.kind == S3_KIND else mf.mandel_vec(mf.spd_log(b, p)))
            elif self.mode == NORMALIZE:
                segs.append(np.asarray(p, dtype=float))
            elif self.mode == CHOLESKY:
                segs.append(mf.chol_vec(p))
            else:
                segs.append(mf.mandel_vec(p))
        return np.concatenate(segs)


def initial_theta(adapter: ActionAdapter, features: FeatureMap, start: CompositePoint,
                  base_p: CompositePoint, frame_mode: str) -> np.ndarray:
    """Parameters whose noise-free output is the constant action ``start``.

    In trajectory mode the GRL policy predicts increments, so staying at the
    start state corresponds to ``theta = 0``.
    """
    m = tangent_size(start.factors)
    theta = np.zeros((m, features.dim))
    if adapter.mode == GRL and frame_mode == TRAJECTORY:
        return theta
    raw = adapter.encode(start, base_p)
    if features.kind == "state-linear":
        theta[:, -1] = raw
    else:
        # time-rbf features sum to one, constant features are one
        theta[:] = raw[:, None]
    return theta
