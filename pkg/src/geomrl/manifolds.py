"""Riemannian primitives for unit quaternions (S^3) and SPD matrices.

Quaternions are plain ``(4,)`` float arrays ordered ``(w, x, y, z)``.  S^3
tangent vectors are ambient 4-vectors orthogonal to their base point.  SPD
points and their tangents are ``(d, d)`` symmetric arrays.

Every function here is pure: inputs are never modified and no state is kept.
"""
from __future__ import annotations

import math

import numpy as np

from . import repair
from .errors import AntipodalError, BadLength, NotPositiveDefinite, ZeroNormError

#: Closest approach to the antipode accepted by log/transport (radians).
ANTIPODAL_TOL = 1e-6
#: Below this geodesic distance two quaternions are treated as identical.
SAME_POINT_TOL = 1e-12
#: Tangent norms are clamped below pi by this margin in :func:`s3_exp`.
EXP_CLAMP_MARGIN = 1e-6
#: Eigenvalue floor used by the repair operations.
SPD_EPS = 1e-8
#: Smallest eigenvalue accepted by :func:`sym_logm`.
LOGM_MIN_EIG = 1e-12

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# S^3
# ---------------------------------------------------------------------------

def hemisphere_flip(q: np.ndarray) -> np.ndarray:
    """Return ``q`` or ``-q``, whichever lies on the canonical hemisphere.

    The canonical hemisphere is ``w > 0``; for ``w == 0`` the first nonzero
    component of ``(x, y, z)`` must be positive.  Only the sign is changed, the
    norm is left untouched.
    """
    q = np.asarray(q, dtype=float)
    if q[0] > 0.0:
        return q.copy()
    if q[0] < 0.0:
        return -q
    for c in q[1:]:
        if c != 0.0:
            return q.copy() if c > 0.0 else -q
    return q.copy()


def s3_canonicalize(q: np.ndarray) -> np.ndarray:
    """Normalize ``q`` to unit length and move it to the canonical hemisphere.

    Raises
    ------
    ZeroNormError
        If ``||q|| <= 1e-12``.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise BadLength(f"quaternion must have 4 components, got shape {q.shape}")
    n = float(np.linalg.norm(q))
    if n <= 1e-12:
        raise ZeroNormError(f"cannot normalize quaternion with norm {n:.3g}")
    repair.note("normalize")
    return hemisphere_flip(q / n)


def s3_distance(q1: np.ndarray, q2: np.ndarray) -> float:
    """Geodesic distance ``arccos(<q1, q2>)`` on S^3, in ``[0, pi]``.

    Evaluated as ``atan2(||q2 - <q1, q2> q1||, <q1, q2>)``, which equals the
    arccos for unit inputs but stays accurate when ``q1`` and ``q2`` are close.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    c = min(1.0, max(-1.0, float(np.dot(q1, q2))))
    return math.atan2(float(np.linalg.norm(q2 - c * q1)), c)


def s3_log(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Logarithmic map of ``target`` into the tangent space at ``base``.

    Returns the ambient 4-vector ``d * v / ||v||`` with
    ``v = target - <base, target> base`` and ``d`` the geodesic distance.
    The same point maps to the zero vector.
    """
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    c = float(np.dot(base, target))
    d = math.acos(min(1.0, max(-1.0, c)))
    if d > math.pi - ANTIPODAL_TOL:
        raise AntipodalError(f"points are antipodal (distance {d:.9f})")
    v = target - c * base
    nv = float(np.linalg.norm(v))
    if d < SAME_POINT_TOL or nv == 0.0:
        return np.zeros(4)
    # atan2 keeps full precision for nearby points where arccos does not
    d = math.atan2(nv, c)
    return v * (d / nv)


def s3_exp(base: np.ndarray, tangent: np.ndarray) -> np.ndarray:
    """Exponential map ``cos(|t|) base + sin(|t|) t/|t|``.

    ``|t|`` is clamped to ``pi - 1e-6`` so results stay inside the injectivity
    radius.  A zero tangent returns ``base`` exactly.
    """
    base = np.asarray(base, dtype=float)
    tangent = np.asarray(tangent, dtype=float)
    n = float(np.linalg.norm(tangent))
    if n == 0.0:
        return base.copy()
    theta = min(n, math.pi - EXP_CLAMP_MARGIN)
    return math.cos(theta) * base + (math.sin(theta) / n) * tangent


def s3_transport(src: np.ndarray, dst: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Parallel transport of ``t`` from ``T_src S^3`` to ``T_dst S^3`` along the geodesic.

    Applies ``(-src sin|u| ub^T + ub cos|u| ub^T + (I - ub ub^T)) t`` with
    ``u = log_src(dst)`` and ``ub = u / |u|``.
    """
    src = np.asarray(src, dtype=float)
    t = np.asarray(t, dtype=float)
    u = s3_log(src, dst)
    nu = float(np.linalg.norm(u))
    if nu == 0.0:
        return t.copy()
    ub = u / nu
    a = float(np.dot(ub, t))
    return t + a * ((math.cos(nu) - 1.0) * ub - math.sin(nu) * src)


def s3_project(base: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Remove the component of ambient ``v`` along ``base``."""
    return v - float(np.dot(base, v)) * base


def quat_multiply(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion; ``q`` and ``-q`` give the same matrix."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_quaternion(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation as a canonical unit quaternion."""
    while True:
        q = rng.standard_normal(4)
        n = np.linalg.norm(q)
        if n > 1e-6:
            return hemisphere_flip(q / n)


# ---------------------------------------------------------------------------
# Symmetric matrix functions
# ---------------------------------------------------------------------------

def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def _eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(_sym(np.asarray(a, dtype=float)))


def _from_eig(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return _sym((v * w) @ v.T)


def sym_expm(s: np.ndarray) -> np.ndarray:
    """Matrix exponential of a symmetric matrix via eigendecomposition."""
    w, v = _eigh(s)
    return _from_eig(np.exp(w), v)


def sym_logm(p: np.ndarray) -> np.ndarray:
    """Principal matrix logarithm of an SPD matrix.

    Raises
    ------
    NotPositiveDefinite
        If an eigenvalue is not above ``1e-12``.
    """
    w, v = _eigh(p)
    if w[0] <= LOGM_MIN_EIG:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3g} is not positive")
    return _from_eig(np.log(w), v)


def _sqrt_pair(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, v = _eigh(p)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3g} is not positive")
    r = np.sqrt(w)
    return _from_eig(r, v), _from_eig(1.0 / r, v)


def spd_sqrt(p: np.ndarray) -> np.ndarray:
    return _sqrt_pair(p)[0]


# ---------------------------------------------------------------------------
# SPD(d), affine-invariant metric
# ---------------------------------------------------------------------------

def spd_exp(base: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``base^1/2 expm(base^-1/2 t base^-1/2) base^1/2``."""
    half, ihalf = _sqrt_pair(base)
    return _sym(half @ sym_expm(ihalf @ t @ ihalf) @ half)


def spd_log(base: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``base^1/2 logm(base^-1/2 target base^-1/2) base^1/2``."""
    half, ihalf = _sqrt_pair(base)
    return _sym(half @ sym_logm(ihalf @ target @ ihalf) @ half)


def spd_transport(src: np.ndarray, dst: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Transport ``t`` from ``T_src`` to ``T_dst`` as ``E t E^T`` with ``E = dst^1/2 src^-1/2``."""
    _, ihalf = _sqrt_pair(src)
    half = spd_sqrt(dst)
    e = half @ ihalf
    return _sym(e @ t @ e.T)


def spd_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Affine-invariant distance ``||logm(a^-1/2 b a^-1/2)||_F``."""
    _, ihalf = _sqrt_pair(a)
    w, _ = _eigh(ihalf @ b @ ihalf)
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.3g} is not positive")
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def spd_inner(base: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> float:
    """Affine-invariant inner product ``tr(base^-1 t1 base^-1 t2)``."""
    inv = np.linalg.inv(base)
    return float(np.trace(inv @ t1 @ inv @ t2))


def random_spd(rng: np.random.Generator, d: int, log2_spread: float = 1.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues in ``[2**-log2_spread, 2**log2_spread]``."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    eig = 2.0 ** rng.uniform(-log2_spread, log2_spread, size=d)
    return _sym((q * eig) @ q.T)


def is_spd(p: np.ndarray, sym_tol: float = 1e-10) -> bool:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    if np.linalg.norm(p - p.T) > sym_tol:
        return False
    return bool(np.linalg.eigvalsh(_sym(p))[0] > 0.0)


# ---------------------------------------------------------------------------
# Vectorizations
# ---------------------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
SUPPORTED_SPD_DIMS = (2, 3, 6)


def vec_length(d: int) -> int:
    return d * (d + 1) // 2


def dim_from_length(n: int) -> int:
    """Matrix size ``d`` with ``d(d+1)/2 == n``."""
    d = int(round((math.sqrt(8 * n + 1) - 1) / 2))
    if d < 1 or vec_length(d) != n:
        raise BadLength(f"length {n} is not d(d+1)/2 for any d")
    return d


def mandel_offdiag_order(d: int) -> list[tuple[int, int]]:
    """Off-diagonal ``(i, j)`` pairs, ``i < j``, in reverse column-major order.

    For ``d = 3`` this is ``[(1, 2), (0, 2), (0, 1)]``.
    """
    pairs = [(i, j) for j in range(d) for i in range(j)]
    return pairs[::-1]


def mandel_vec(s: np.ndarray) -> np.ndarray:
    """Mandel vector: diagonal entries, then sqrt(2)-scaled off-diagonals."""
    s = np.asarray(s, dtype=float)
    d = s.shape[0]
    off = mandel_offdiag_order(d)
    out = np.empty(vec_length(d))
    out[:d] = np.diag(s)
    for k, (i, j) in enumerate(off):
        out[d + k] = _SQRT2 * 0.5 * (s[i, j] + s[j, i])
    return out


def mandel_unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise BadLength(f"expected a flat vector, got shape {v.shape}")
    d = dim_from_length(v.size)
    s = np.diag(v[:d])
    for k, (i, j) in enumerate(mandel_offdiag_order(d)):
        s[i, j] = s[j, i] = v[d + k] / _SQRT2
    return s


def chol_vec(p: np.ndarray) -> np.ndarray:
    """Upper-triangular factor ``L`` of ``p = L^T L``, flattened row by row."""
    try:
        lower = np.linalg.cholesky(_sym(np.asarray(p, dtype=float)))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    upper = lower.T
    return upper[np.triu_indices(upper.shape[0])]


def chol_unvec(v: np.ndarray, eps: float = SPD_EPS) -> np.ndarray:
    """Rebuild ``L^T L`` from a flat upper-triangular ``L``.

    The magnitude of each diagonal entry of ``L`` is floored at ``eps`` so the
    result is always SPD.  The sign of a diagonal entry does not matter, so a
    negative entry keeps its size instead of collapsing to ``eps``.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise BadLength(f"expected a flat vector, got shape {v.shape}")
    d = dim_from_length(v.size)
    upper = np.zeros((d, d))
    upper[np.triu_indices(d)] = v
    idx = np.arange(d)
    upper[idx, idx] = np.maximum(np.abs(upper[idx, idx]), eps)
    return _sym(upper.T @ upper)


def nearest_spd(s: np.ndarray, eps: float = SPD_EPS) -> np.ndarray:
    """Frobenius-nearest matrix with eigenvalues ``>= eps``.

    The input is symmetrized, then its eigenvalues are clamped from below.
    Inputs that already satisfy the bound are returned unchanged.
    """
    repair.note("nearest_spd")
    s = _sym(np.asarray(s, dtype=float))
    w, v = np.linalg.eigh(s)
    if w[0] >= eps:
        return s
    return _from_eig(np.maximum(w, eps), v)
