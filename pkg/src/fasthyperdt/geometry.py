"""Lorentz, Beltrami-Klein and Poincare representations of hyperbolic space.

Conventions
-----------
* Curvature ``K < 0`` is passed explicitly to every operation that depends on it.
* Lorentz points live on ``{u : <u,u>_M = 1/K, u_0 > 0}`` with the timelike
  coordinate in column 0.
* Klein coordinates are the plain gnomonic ratios ``u_i / u_0``. They are
  curvature-free and always lie in the open *unit* ball; curvature only rescales
  distances by ``1/sqrt(-K)``.
* Poincare coordinates use the ball of radius ``1/sqrt(-K)``.

All functions accept a single point (1-D array) or a batch of points (rows of a
2-D array) and operate along the last axis.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, DomainError, InvalidPointError

LORENTZ_RTOL = 1e-9
ARCCOSH_TOL = 1e-9


def check_curvature(K) -> float:
    K = float(K)
    if not np.isfinite(K) or K >= 0:
        raise DomainError(f"curvature must be finite and negative, got {K!r}")
    return K


def _first_bad_row(mask) -> int | None:
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None if not mask else 0
    bad = np.flatnonzero(mask.reshape(-1))
    return int(bad[0]) if bad.size else None


def _raise_row(message, mask, batched):
    row = _first_bad_row(mask)
    if row is not None:
        raise InvalidPointError(message, row=row if batched else None)


# -- inner products and validation --------------------------------------------


def _dot(a, b):
    # row-wise dot product; einsum is much faster than sum(axis=-1) on short rows
    return np.einsum("...i,...i->...", a, b)


def minkowski_inner(u, v):
    """Minkowski inner product ``-u_0 v_0 + sum_i u_i v_i`` along the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise DimensionError(f"length mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    if u.shape[-1] < 2:
        raise DimensionError("Minkowski vectors need at least 2 coordinates")
    return _dot(u[..., 1:], v[..., 1:]) - u[..., 0] * v[..., 0]


def hyperboloid_residual(u, K):
    """Relative violation of the hyperboloid constraint, ``|K<u,u> - 1| / scale``."""
    u = np.asarray(u, dtype=float)
    K = check_curvature(K)
    scale = np.maximum(1.0, -K * _dot(u, u))
    return np.abs(K * minkowski_inner(u, u) - 1.0) / scale


def check_lorentz(u, K, rtol=LORENTZ_RTOL):
    """Validate Lorentz points; return them as a float array (unchanged)."""
    u = np.asarray(u, dtype=float)
    K = check_curvature(K)
    if u.ndim not in (1, 2) or u.shape[-1] < 2:
        raise DimensionError(f"expected (..., d+1) with d >= 1, got shape {u.shape}")
    batched = u.ndim == 2
    _raise_row("non-finite coordinates", ~np.all(np.isfinite(u), axis=-1), batched)
    _raise_row("timelike coordinate must be positive", u[..., 0] <= 0, batched)
    _raise_row(
        f"point is off the hyperboloid <u,u> = 1/K (rtol {rtol})",
        hyperboloid_residual(u, K) > rtol,
        batched,
    )
    return u


def as_lorentz(u, K, rtol=LORENTZ_RTOL):
    """Validate and snap points onto the sheet by recomputing ``u_0`` exactly."""
    u = check_lorentz(u, K, rtol).copy()
    return project_to_hyperboloid(u[..., 1:], K)


def project_to_hyperboloid(spacelike, K):
    """Lift spacelike coordinates onto the sheet: ``u_0 = sqrt(|x|^2 - 1/K)``."""
    x = np.asarray(spacelike, dtype=float)
    K = check_curvature(K)
    u0 = np.sqrt(_dot(x, x) - 1.0 / K)
    return np.concatenate([u0[..., None], x], axis=-1)


def _klein_sq(v):
    v = np.asarray(v, dtype=float)
    return v, _dot(v, v)


def check_klein(v):
    """Validate Klein points (open unit ball); return them as a float array."""
    v = np.asarray(v, dtype=float)
    if v.ndim not in (1, 2) or v.shape[-1] < 1:
        raise DimensionError(f"expected (..., d) with d >= 1, got shape {v.shape}")
    batched = v.ndim == 2
    _raise_row("non-finite coordinates", ~np.all(np.isfinite(v), axis=-1), batched)
    _raise_row("point lies outside the open Klein ball", _dot(v, v) >= 1.0, batched)
    return v


def check_poincare(p, K):
    """Validate Poincare points (open ball of squared radius ``-1/K``)."""
    p = np.asarray(p, dtype=float)
    K = check_curvature(K)
    if p.ndim not in (1, 2) or p.shape[-1] < 1:
        raise DimensionError(f"expected (..., d) with d >= 1, got shape {p.shape}")
    batched = p.ndim == 2
    _raise_row("non-finite coordinates", ~np.all(np.isfinite(p), axis=-1), batched)
    _raise_row(
        "point lies outside the open Poincare ball",
        -K * _dot(p, p) >= 1.0,
        batched,
    )
    return p


def _one_minus_sq(norm_sq):
    # (1 - r)(1 + r) keeps relative accuracy as r -> 1
    r = np.sqrt(norm_sq)
    return (1.0 - r) * (1.0 + r)


# -- distances ------------------------------------------------------------------


def _arccosh_clamped(arg):
    arg = np.asarray(arg, dtype=float)
    if np.any(arg < 1.0 - ARCCOSH_TOL) or np.any(np.isnan(arg)):
        raise DomainError("arccosh argument below 1; points are not on one sheet")
    return np.arccosh(np.maximum(arg, 1.0))


def lorentz_distance(u, v, K):
    """Geodesic distance ``arccosh(K <u,v>) / sqrt(-K)`` between Lorentz points.

    The value is computed from the chord ``w = u - v`` through the identity
    ``-K <w,w> = 4 sinh^2(sqrt(-K) d / 2)``, which stays accurate for nearly
    coincident points where arccosh loses half the digits. The arccosh
    argument is still checked (and clamped near 1) as a domain guard.
    """
    K = check_curvature(K)
    u = check_lorentz(u, K)
    v = check_lorentz(v, K)
    _arccosh_clamped(K * minkowski_inner(u, v))
    w = u - v
    chord = np.sqrt(np.maximum(-K * minkowski_inner(w, w), 0.0))
    return 2.0 * np.arcsinh(0.5 * chord) / np.sqrt(-K)


def klein_distance(u, v, K):
    """Geodesic distance between Klein points, via the Lorentz lift."""
    return lorentz_distance(klein_to_lorentz(u, K), klein_to_lorentz(v, K), K)


def cross_ratio_distance(b, c, K):
    """Klein distance from the cross ratio of the chord through ``b`` and ``c``.

    With ``a`` and ``d`` the boundary points of the chord in the order
    ``a, b, c, d`` the distance is ``ln(|ac||bd| / (|ab||cd|)) / (2 sqrt(-K))``.
    """
    K = check_curvature(K)
    b = check_klein(b)
    c = check_klein(c)
    b, c = np.broadcast_arrays(b, c)
    w = c - b
    ww = _dot(w, w)
    bw = _dot(b, w)
    bb = _dot(b, b)
    same = ww == 0.0
    ww_safe = np.where(same, 1.0, ww)
    # roots of |b + s w|^2 = 1; the product of roots is negative so s_a < 0 < 1 < s_d
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(bw * bw - ww_safe * (bb - 1.0))
        q = -(bw + np.copysign(disc, bw))
        r1 = q / ww_safe
        r2 = (bb - 1.0) / np.where(q == 0.0, 1.0, q)
        s_a = np.minimum(r1, r2)
        s_d = np.maximum(r1, r2)
        ratio = ((1.0 - s_a) * s_d) / ((-s_a) * (s_d - 1.0))
        dist = 0.5 * np.log(ratio) / np.sqrt(-K)
    return np.where(same, 0.0, dist)


# -- model conversions --------------------------------------------------------


def lorentz_to_klein(u):
    """Gnomonic projection ``(u_1/u_0, ..., u_d/u_0)``."""
    u = np.asarray(u, dtype=float)
    if u.ndim not in (1, 2) or u.shape[-1] < 2:
        raise DimensionError(f"expected (..., d+1) with d >= 1, got shape {u.shape}")
    _raise_row("timelike coordinate must be positive", u[..., 0] <= 0, u.ndim == 2)
    return u[..., 1:] / u[..., :1]


def klein_to_lorentz(v, K):
    """Inverse gnomonic projection onto the sheet ``<u,u> = 1/K``."""
    K = check_curvature(K)
    v, sq = _klein_sq(check_klein(v))
    u0 = 1.0 / (np.sqrt(-K) * np.sqrt(_one_minus_sq(sq)))
    return np.concatenate([u0[..., None], v * u0[..., None]], axis=-1)


def poincare_to_klein(p, K):
    """Poincare ball (radius ``1/sqrt(-K)``) to Klein coordinates."""
    K = check_curvature(K)
    p = check_poincare(p, K)
    sq = _dot(p, p)
    return (2.0 * np.sqrt(-K) / (1.0 - K * sq))[..., None] * p


def klein_to_poincare(v, K):
    """Klein coordinates to the Poincare ball of radius ``1/sqrt(-K)``."""
    K = check_curvature(K)
    v, sq = _klein_sq(check_klein(v))
    denom = np.sqrt(-K) * (1.0 + np.sqrt(_one_minus_sq(sq)))
    return v / denom[..., None]


def poincare_to_lorentz(p, K):
    K = check_curvature(K)
    p = check_poincare(p, K)
    s = np.sqrt(-K)
    pu = s * p
    sq = _dot(pu, pu)
    denom = s * (1.0 - sq)
    u0 = (1.0 + sq) / denom
    return np.concatenate([u0[..., None], 2.0 * pu / denom[..., None]], axis=-1)


def lorentz_to_poincare(u, K):
    K = check_curvature(K)
    u = check_lorentz(u, K)
    return u[..., 1:] / (1.0 + np.sqrt(-K) * u[..., :1])


# -- midpoints ----------------------------------------------------------------


def gamma(x, K=-1.0):
    """Lorentz factor ``1/sqrt(1 - |x|^2)`` of a Klein point or scalar coordinate.

    Equals ``sqrt(-K)`` times the timelike coordinate of the lifted point, which
    is exactly the timelike coordinate when ``K = -1``.
    """
    check_curvature(K)
    x = np.asarray(x, dtype=float)
    sq = x * x if x.ndim == 0 else _dot(x, x)
    if np.any(~(sq < 1.0)):
        raise InvalidPointError("point lies outside the open Klein ball")
    return 1.0 / np.sqrt(_one_minus_sq(sq))


def einstein_midpoint(u, v, K=-1.0):
    """Geodesic midpoint of two Klein points, ``(g_u u + g_v v) / (g_u + g_v)``."""
    check_curvature(K)
    u = check_klein(u)
    v = check_klein(v)
    gu = gamma(u, K)[..., None]
    gv = gamma(v, K)[..., None]
    return (gu * u + gv * v) / (gu + gv)


def scalar_einstein_midpoint(L, R, K=-1.0):
    """Einstein midpoint of two Klein coordinates on a single axis.

    Works elementwise on arrays. Used to place split thresholds.
    """
    check_curvature(K)
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(~(np.abs(L) < 1.0)) or np.any(~(np.abs(R) < 1.0)):
        raise InvalidPointError("threshold endpoint lies outside the open Klein ball")
    gl = 1.0 / np.sqrt(_one_minus_sq(L * L))
    gr = 1.0 / np.sqrt(_one_minus_sq(R * R))
    m = (gl * L + gr * R) / (gl + gr)
    return m if m.ndim else float(m)


def split_angle(x, axis):
    """Angle ``arccot(x_axis / x_0)`` in ``(0, pi)`` of Lorentz points."""
    x = np.asarray(x, dtype=float)
    return np.arctan2(x[..., 0], x[..., axis])


def angular_midpoint(theta1, theta2):
    """Hyperbolic midpoint of two split angles.

    The returned angle ``m`` satisfies ``cot(m) = scalar_einstein_midpoint(cot t1,
    cot t2)``. Angles must be realisable by hyperboloid points, so their
    cotangents lie in ``(-1, 1)``. ``t1 + t2 == pi`` returns ``pi/2``.
    """
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    for t in (t1, t2):
        if np.any(~((t > 0.0) & (t < np.pi))):
            raise DomainError("split angles must lie in (0, pi)")
    t1, t2 = np.broadcast_arrays(t1, t2)
    total = t1 + t2
    beta = np.sign(total - np.pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = -np.cos(t1 - t2) / np.sin(total)
        gap = (np.abs(alpha) - 1.0) * (np.abs(alpha) + 1.0)
        singular = (beta == 0.0) | (t1 == t2)
        if np.any((gap < -1e-12) & ~singular):
            raise DomainError("angles do not correspond to points of the hyperboloid")
        root = np.sqrt(np.maximum(gap, 0.0))
        # cot m = beta*root - alpha; written as a reciprocal to avoid cancellation
        cot_m = -1.0 / (alpha + beta * root)
    m = np.arctan2(1.0, cot_m)
    m = np.where(beta == 0.0, np.pi / 2, m)
    m = np.where(t1 == t2, t1, m)
    return m if m.ndim else float(m)
