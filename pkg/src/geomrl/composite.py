"""Product manifolds built from S^3, SPD(d) and Euclidean factors.

A :class:`CompositePoint` holds one point per factor; a
:class:`CompositeTangent` stores the concatenated tangent coordinates in one
flat vector (S^3 -> 4 ambient coordinates, SPD(d) -> d(d+1)/2 Mandel
coordinates, Euclid(n) -> n).  Factors are always processed in declaration
order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import manifolds as mf
from .errors import BadLength, KindMismatch, NotPositiveDefinite

S3_KIND = "S3"
SPD_KIND = "SPD"
EUCLID_KIND = "Euclid"


@dataclass(frozen=True)
class Factor:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind == S3_KIND and self.dim != 4:
            raise KindMismatch("S3 factors have ambient dimension 4")
        if self.kind == SPD_KIND and self.dim not in mf.SUPPORTED_SPD_DIMS:
            raise KindMismatch(f"SPD dimension must be one of {mf.SUPPORTED_SPD_DIMS}")
        if self.kind not in (S3_KIND, SPD_KIND, EUCLID_KIND):
            raise KindMismatch(f"unknown manifold kind {self.kind!r}")
        if self.dim < 1:
            raise KindMismatch("factor dimension must be positive")

    @property
    def tangent_size(self) -> int:
        if self.kind == SPD_KIND:
            return mf.vec_length(self.dim)
        return self.dim

    def __str__(self) -> str:
        if self.kind == S3_KIND:
            return "S3"
        return f"{self.kind}({self.dim})"


def S3() -> Factor:
    return Factor(S3_KIND, 4)


def SPD(d: int = 3) -> Factor:
    return Factor(SPD_KIND, d)


def Euclid(n: int) -> Factor:
    return Factor(EUCLID_KIND, n)


def tangent_size(factors: Sequence[Factor]) -> int:
    return sum(f.tangent_size for f in factors)


def _check_point(factor: Factor, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if factor.kind == SPD_KIND:
        expected: tuple[int, ...] = (factor.dim, factor.dim)
    else:
        expected = (factor.dim,)
    if p.shape != expected:
        raise KindMismatch(f"{factor} point must have shape {expected}, got {p.shape}")
    return p


@dataclass(frozen=True)
class CompositePoint:
    factors: tuple[Factor, ...]
    points: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.factors) != len(self.points):
            raise KindMismatch("one point is required per factor")
        pts = tuple(_check_point(f, p) for f, p in zip(self.factors, self.points))
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "points", pts)

    @classmethod
    def of(cls, *pairs: tuple[Factor, np.ndarray]) -> "CompositePoint":
        return cls(tuple(f for f, _ in pairs), tuple(p for _, p in pairs))

    def __len__(self) -> int:
        return len(self.factors)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.points[i]

    def allclose(self, other: "CompositePoint", atol: float = 1e-9) -> bool:
        return self.factors == other.factors and all(
            np.allclose(a, b, atol=atol, rtol=0) for a, b in zip(self.points, other.points)
        )


@dataclass(frozen=True)
class CompositeTangent:
    factors: tuple[Factor, ...]
    flat: np.ndarray

    def __post_init__(self):
        flat = np.asarray(self.flat, dtype=float).reshape(-1)
        if flat.size != tangent_size(self.factors):
            raise BadLength(
                f"flat tangent has {flat.size} entries, layout needs {tangent_size(self.factors)}"
            )
        object.__setattr__(self, "factors", tuple(self.factors))
        object.__setattr__(self, "flat", flat)

    def segments(self) -> list[np.ndarray]:
        out, i = [], 0
        for f in self.factors:
            out.append(self.flat[i:i + f.tangent_size])
            i += f.tangent_size
        return out

    @classmethod
    def from_segments(cls, factors: Sequence[Factor], segments: Sequence[np.ndarray]) -> "CompositeTangent":
        if len(segments) == 0:
            return cls(tuple(factors), np.zeros(0))
        return cls(tuple(factors), np.concatenate([np.asarray(s, dtype=float).reshape(-1) for s in segments]))

    @classmethod
    def zeros(cls, factors: Sequence[Factor]) -> "CompositeTangent":
        return cls(tuple(factors), np.zeros(tangent_size(factors)))


def default_point(factors: Sequence[Factor]) -> CompositePoint:
    """Identity quaternion / identity matrix / zero vector for every factor."""
    pts = []
    for f in factors:
        if f.kind == S3_KIND:
            pts.append(mf.IDENTITY_QUAT.copy())
        elif f.kind == SPD_KIND:
            pts.append(np.eye(f.dim))
        else:
            pts.append(np.zeros(f.dim))
    return CompositePoint(tuple(factors), tuple(pts))


def _same_kinds(*items) -> tuple[Factor, ...]:
    factors = items[0].factors
    for it in items[1:]:
        if it.factors != factors:
            raise KindMismatch(
                f"factor kinds differ: {[str(f) for f in factors]} vs {[str(f) for f in it.factors]}"
            )
    return factors


def composite_transport(frame_p: CompositePoint, frame_l: CompositePoint,
                        t: CompositeTangent) -> CompositeTangent:
    """Factor-wise parallel transport from ``frame_p`` to ``frame_l``."""
    factors = _same_kinds(frame_p, frame_l, t)
    segs = []
    for f, src, dst, seg in zip(factors, frame_p.points, frame_l.points, t.segments()):
        if f.kind == S3_KIND:
            segs.append(mf.s3_transport(src, dst, seg))
        elif f.kind == SPD_KIND:
            moved = mf.spd_transport(src, dst, mf.mandel_unvec(seg))
            segs.append(mf.mandel_vec(moved))
        else:
            segs.append(seg.copy())
    return CompositeTangent.from_segments(factors, segs)


def composite_exp(frame_l: CompositePoint, t: CompositeTangent) -> CompositePoint:
    factors = _same_kinds(frame_l, t)
    pts = []
    for f, base, seg in zip(factors, frame_l.points, t.segments()):
        if f.kind == S3_KIND:
            pts.append(mf.s3_exp(base, seg))
        elif f.kind == SPD_KIND:
            pts.append(mf.spd_exp(base, mf.mandel_unvec(seg)))
        else:
            pts.append(base + seg)
    return CompositePoint(factors, tuple(pts))


def composite_log(frame_l: CompositePoint, target: CompositePoint) -> CompositeTangent:
    factors = _same_kinds(frame_l, target)
    segs = []
    for f, base, q in zip(factors, frame_l.points, target.points):
        if f.kind == S3_KIND:
            segs.append(mf.s3_log(base, q))
        elif f.kind == SPD_KIND:
            segs.append(mf.mandel_vec(mf.spd_log(base, q)))
        else:
            segs.append(q - base)
    return CompositeTangent.from_segments(factors, segs)


def composite_distances(a: CompositePoint, b: CompositePoint) -> np.ndarray:
    """Per-factor geodesic distances (Euclidean norm for Euclid factors)."""
    factors = _same_kinds(a, b)
    out = np.empty(len(factors))
    for k, (f, p, q) in enumerate(zip(factors, a.points, b.points)):
        if f.kind == S3_KIND:
            out[k] = mf.s3_distance(p, q)
        elif f.kind == SPD_KIND:
            out[k] = mf.spd_distance(p, q)
        else:
            out[k] = float(np.linalg.norm(p - q))
    return out


def riemannian_gaussian_logpdf(mean: CompositePoint, cov: np.ndarray, q: CompositePoint) -> float:
    """Log-density of the Riemannian Gaussian ``N_M(q | mean, cov)``.

    Evaluates ``-1/2 (d log 2pi + log|cov| + l^T cov^-1 l)`` where ``l`` is the
    flat tangent ``composite_log(mean, q)`` and ``d`` its length.
    """
    cov = np.asarray(cov, dtype=float)
    ell = composite_log(mean, q).flat
    d = ell.size
    if cov.shape != (d, d):
        raise BadLength(f"covariance must be {d}x{d}, got {cov.shape}")
    try:
        chol = np.linalg.cholesky(0.5 * (cov + cov.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    z = np.linalg.solve(chol, ell)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (d * math.log(2.0 * math.pi) + logdet + float(z @ z))
