"""Reference ray/triangle intersector: test every triangle, keep the nearest.

Deliberately independent of the accelerated tracer — classic Moller-Trumbore
with explicit barycentric rejection, vectorized over triangles per ray.
"""
import numpy as np

_DET_EPS = 1e-300
_T_MIN = 1e-9


def nearest_hits(triangles: np.ndarray, origins: np.ndarray, directions: np.ndarray):
    """Exhaustive two-sided nearest-hit query.

    triangles: (T, 3, 3); origins/directions: (R, 3) (directions unit length).
    Returns (t, tri): distance (inf on miss) and triangle row (-1 on miss).
    """
    tris = np.asarray(triangles, dtype=np.float64)
    origins = np.asarray(origins, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0

    n_rays = origins.shape[0]
    t_out = np.full(n_rays, np.inf)
    tri_out = np.full(n_rays, -1, dtype=np.int64)
    for r in range(n_rays):
        d = directions[r]
        pvec = np.cross(d[None, :], e2)
        det = np.einsum("tj,tj->t", e1, pvec)
        ok = np.abs(det) > _DET_EPS
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = origins[r][None, :] - v0
        u = np.einsum("tj,tj->t", tvec, pvec) * inv
        qvec = np.cross(tvec, e1)
        v = np.einsum("j,tj->t", d, qvec) * inv
        t = np.einsum("tj,tj->t", e2, qvec) * inv
        good = ok & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > _T_MIN)
        if good.any():
            cand = np.where(good, t, np.inf)
            best = int(np.argmin(cand))
            t_out[r] = cand[best]
            tri_out[r] = best
    return t_out, tri_out
