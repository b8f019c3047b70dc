"""Vectorised planar distance primitives shared by validity checking and physics."""

import numpy as np


def wrap_angle(a):
    """Map angles to (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


def _point_segment_xy(px, py, ax, ay, bx, by):
    abx = bx - ax
    aby = by - ay
    apx = px - ax
    apy = py - ay
    denom = abx * abx + aby * aby
    safe = denom > 0.0
    t = np.where(safe, (apx * abx + apy * aby) / np.where(safe, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    cx = ax + t * abx
    cy = ay + t * aby
    return np.hypot(px - cx, py - cy), cx, cy


def point_segment(p, a, b):
    """Distance from points to segments, with the closest segment point.

    All arguments broadcast against each other with a trailing axis of 2.
    Returns ``(dist, closest)``.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d, cx, cy = _point_segment_xy(p[..., 0], p[..., 1], a[..., 0], a[..., 1], b[..., 0], b[..., 1])
    return d, np.stack([cx, cy], axis=-1)


def point_segment_distance(p, a, b):
    """Like :func:`point_segment` but returns only the distance."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return _point_segment_xy(p[..., 0], p[..., 1], a[..., 0], a[..., 1], b[..., 0], b[..., 1])[0]


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def segment_segment(a1, b1, a2, b2):
    """Minimum distance between two families of 2D segments (broadcast)."""
    a1, b1, a2, b2 = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a1, b1, a2, b2)))
    # the four endpoint-to-other-segment distances in one batch
    p = np.stack([a1, b1, a2, b2])
    a = np.stack([a2, a2, a1, a1])
    b = np.stack([b2, b2, b1, b1])
    d = point_segment_distance(p, a, b).min(axis=0)
    r = b1 - a1
    s = b2 - a2
    o1 = _cross(r, a2 - a1)
    o2 = _cross(r, b2 - a1)
    o3 = _cross(s, a1 - a2)
    o4 = _cross(s, b1 - a2)
    crossing = (o1 * o2 < 0.0) & (o3 * o4 < 0.0)
    return np.where(crossing, 0.0, d)


def capsule_disc_clearance(a, b, thickness, center, radius):
    """Signed gap between a capsule (segment ``a-b`` inflated by ``thickness``) and a disc."""
    return point_segment_distance(center, a, b) - thickness - radius
