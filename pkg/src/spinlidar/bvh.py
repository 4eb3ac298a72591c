"""Bounding-volume hierarchy over world-space triangles.

One structure serves both consumers: the rasterizer (pixel rays) and the
analytic beam caster. Traversal uses a watertight ray/triangle test so rays
crossing shared edges or vertices cannot slip between adjacent triangles.
"""

from __future__ import annotations

import os

import numpy as np

if "NUMBA_THREADING_LAYER" not in os.environ:
    # workqueue is always available; avoids TBB version probing noise
    from numba import config as _numba_config

    _numba_config.THREADING_LAYER = "workqueue"

from numba import njit, prange

_LEAF_SIZE = 4
_STACK_DEPTH = 96
_TINY = 1e-300


class Bvh:
    """Flattened median-split BVH.

    Arrays (all read-only after build):
      node_min, node_max : (N, 3) child-enclosing bounds
      node_left          : (N,) index of the left child, -1 for leaves
                           (the right child is always node_left + 1)
      node_start/count   : leaf triangle slice into the reordered arrays
      tri_v0/v1/v2       : (T, 3) reordered triangle vertices
      tri_index          : (T,) original triangle index per slot
    """

    def __init__(self, triangles: np.ndarray):
        tris = np.ascontiguousarray(triangles, dtype=np.float64)
        if tris.ndim != 3 or tris.shape[1:] != (3, 3) or tris.shape[0] == 0:
            raise ValueError("triangles must be a non-empty (T, 3, 3) array")
        self.triangle_count = tris.shape[0]
        self._build(tris)

    def _build(self, tris: np.ndarray) -> None:
        lo = tris.min(axis=1)
        hi = tris.max(axis=1)
        centroids = tris.mean(axis=1)
        order = np.arange(tris.shape[0], dtype=np.int64)

        node_min, node_max, node_left, node_start, node_count = [], [], [], [], []

        def new_node():
            node_min.append(None)
            node_max.append(None)
            node_left.append(-1)
            node_start.append(0)
            node_count.append(0)
            return len(node_left) - 1

        # iterative build; each stack entry is (node_id, start, end) over `order`
        root = new_node()
        stack = [(root, 0, tris.shape[0])]
        while stack:
            node, start, end = stack.pop()
            idx = order[start:end]
            node_min[node] = lo[idx].min(axis=0)
            node_max[node] = hi[idx].max(axis=0)
            n = end - start
            cmin = centroids[idx].min(axis=0)
            cmax = centroids[idx].max(axis=0)
            axis = int(np.argmax(cmax - cmin))
            if n <= _LEAF_SIZE or cmax[axis] - cmin[axis] <= 0.0:
                node_start[node] = start
                node_count[node] = n
                continue
            half = n // 2
            part = np.argpartition(centroids[idx, axis], half)
            order[start:end] = idx[part]
            left = new_node()
            right = new_node()
            node_left[node] = left
            stack.append((right, start + half, end))
            stack.append((left, start, start + half))

        self.node_min = np.ascontiguousarray(np.stack(node_min))
        self.node_max = np.ascontiguousarray(np.stack(node_max))
        self.node_left = np.asarray(node_left, dtype=np.int32)
        self.node_start = np.asarray(node_start, dtype=np.int32)
        self.node_count = np.asarray(node_count, dtype=np.int32)
        self.tri_index = order.copy()
        reordered = tris[order]
        self.tri_v0 = np.ascontiguousarray(reordered[:, 0, :])
        self.tri_v1 = np.ascontiguousarray(reordered[:, 1, :])
        self.tri_v2 = np.ascontiguousarray(reordered[:, 2, :])

    def trace(self, origins: np.ndarray, directions: np.ndarray):
        """Nearest hit for each ray.

        origins broadcastable to (R, 3); directions (R, 3), need not be unit
        length (returned t is in units of the direction length).

        Returns (t (R,), tri (R,)) with t = inf and tri = -1 for misses; tri
        is the original triangle index.
        """
        directions = np.ascontiguousarray(directions, dtype=np.float64).reshape(-1, 3)
        origins = np.ascontiguousarray(
            np.broadcast_to(np.asarray(origins, dtype=np.float64), directions.shape)
        )
        t = np.empty(directions.shape[0], dtype=np.float64)
        slot = np.empty(directions.shape[0], dtype=np.int64)
        _trace_kernel(
            origins, directions,
            self.node_min, self.node_max, self.node_left, self.node_start, self.node_count,
            self.tri_v0, self.tri_v1, self.tri_v2,
            t, slot,
        )
        tri = np.where(slot >= 0, self.tri_index[np.maximum(slot, 0)], -1)
        return t, tri


@njit(cache=True, inline="always")
def _slab_hit(ox, oy, oz, ix, iy, iz, bmin, bmax, t_best):
    t1 = (bmin[0] - ox) * ix
    t2 = (bmax[0] - ox) * ix
    tmin = min(t1, t2)
    tmax = max(t1, t2)
    t1 = (bmin[1] - oy) * iy
    t2 = (bmax[1] - oy) * iy
    tmin = max(tmin, min(t1, t2))
    tmax = min(tmax, max(t1, t2))
    t1 = (bmin[2] - oz) * iz
    t2 = (bmax[2] - oz) * iz
    tmin = max(tmin, min(t1, t2))
    tmax = min(tmax, max(t1, t2))
    if tmax >= tmin and tmax > 0.0 and tmin < t_best:
        return tmin
    return np.inf


@njit(cache=True, parallel=True)
def _trace_kernel(origins, directions, node_min, node_max, node_left,
                  node_start, node_count, v0, v1, v2, out_t, out_slot):
    n_rays = directions.shape[0]
    for r in prange(n_rays):
        ox = origins[r, 0]
        oy = origins[r, 1]
        oz = origins[r, 2]
        dx = directions[r, 0]
        dy = directions[r, 1]
        dz = directions[r, 2]

        # safe reciprocals for the slab test
        ddx = dx if abs(dx) > _TINY else (_TINY if dx >= 0 else -_TINY)
        ddy = dy if abs(dy) > _TINY else (_TINY if dy >= 0 else -_TINY)
        ddz = dz if abs(dz) > _TINY else (_TINY if dz >= 0 else -_TINY)
        ix = 1.0 / ddx
        iy = 1.0 / ddy
        iz = 1.0 / ddz

        # watertight shear setup: kz is the dominant axis
        ax, ay, az = abs(dx), abs(dy), abs(dz)
        if az >= ax and az >= ay:
            kz = 2
        elif ay >= ax:
            kz = 1
        else:
            kz = 0
        kx = kz + 1
        if kx == 3:
            kx = 0
        ky = kx + 1
        if ky == 3:
            ky = 0
        dkz = directions[r, kz]
        if dkz < 0.0:
            kx, ky = ky, kx
            dkz = directions[r, kz]
        sz = 1.0 / dkz
        sx = directions[r, kx] * sz
        sy = directions[r, ky] * sz

        t_best = np.inf
        slot_best = -1

        stack_node = np.empty(_STACK_DEPTH, np.int32)
        stack_t = np.empty(_STACK_DEPTH, np.float64)
        top = 0
        node = 0
        if _slab_hit(ox, oy, oz, ix, iy, iz, node_min[0], node_max[0], t_best) == np.inf:
            out_t[r] = np.inf
            out_slot[r] = -1
            continue

        while True:
            left = node_left[node]
            if left < 0:
                start = node_start[node]
                for k in range(start, start + node_count[node]):
                    a0 = v0[k, 0] - ox
                    a1 = v0[k, 1] - oy
                    a2 = v0[k, 2] - oz
                    b0 = v1[k, 0] - ox
                    b1 = v1[k, 1] - oy
                    b2 = v1[k, 2] - oz
                    c0 = v2[k, 0] - ox
                    c1 = v2[k, 1] - oy
                    c2 = v2[k, 2] - oz
                    if kz == 0:
                        akz, bkz, ckz = a0, b0, c0
                    elif kz == 1:
                        akz, bkz, ckz = a1, b1, c1
                    else:
                        akz, bkz, ckz = a2, b2, c2
                    if kx == 0:
                        akx, bkx, ckx = a0, b0, c0
                    elif kx == 1:
                        akx, bkx, ckx = a1, b1, c1
                    else:
                        akx, bkx, ckx = a2, b2, c2
                    if ky == 0:
                        aky, bky, cky = a0, b0, c0
                    elif ky == 1:
                        aky, bky, cky = a1, b1, c1
                    else:
                        aky, bky, cky = a2, b2, c2

                    axs = akx - sx * akz
                    ays = aky - sy * akz
                    bxs = bkx - sx * bkz
                    bys = bky - sy * bkz
                    cxs = ckx - sx * ckz
                    cys = cky - sy * ckz

                    u = cxs * bys - cys * bxs
                    v = axs * cys - ays * cxs
                    w = bxs * ays - bys * axs
                    # two-sided: all barycentric signs must agree
                    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
                        continue
                    det = u + v + w
                    if det == 0.0:
                        continue
                    tz = sz * (u * akz + v * bkz + w * ckz)
                    t = tz / det
                    if 1e-9 < t < t_best:
                        t_best = t
                        slot_best = k
                # pop, skipping nodes that cannot beat the best hit
                found = False
                while top > 0:
                    top -= 1
                    if stack_t[top] < t_best:
                        node = stack_node[top]
                        found = True
                        break
                if not found:
                    break
            else:
                right = left + 1
                t_l = _slab_hit(ox, oy, oz, ix, iy, iz, node_min[left], node_max[left], t_best)
                t_r = _slab_hit(ox, oy, oz, ix, iy, iz, node_min[right], node_max[right], t_best)
                if t_l <= t_r:
                    near, far, t_far = left, right, t_r
                else:
                    near, far, t_far = right, left, t_l
                    t_l = t_r
                if t_l == np.inf:
                    found = False
                    while top > 0:
                        top -= 1
                        if stack_t[top] < t_best:
                            node = stack_node[top]
                            found = True
                            break
                    if not found:
                        break
                else:
                    if t_far < np.inf:
                        stack_node[top] = far
                        stack_t[top] = t_far
                        top += 1
                    node = near

        out_t[r] = t_best
        out_slot[r] = slot_best
