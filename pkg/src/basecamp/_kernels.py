"""Numba-compiled numerical cores.

Hot loops live here: GJK distance between convex vertex sets, forward
kinematics, the damped-least-squares IK iteration, and whole-robot
collision / joint-path sweeps. Wrappers in `collide` and `kinematics`
own validation and typing; everything below works on plain float64
arrays and is deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GJK_MAX_ITERS = 64


@njit(cache=True, inline="always")
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True, inline="always")
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True)
def _support_index(verts, d):
    """Index of the vertex extreme along d; first index wins ties."""
    best = verts[0, 0] * d[0] + verts[0, 1] * d[1] + verts[0, 2] * d[2]
    bi = 0
    for i in range(1, verts.shape[0]):
        v = verts[i, 0] * d[0] + verts[i, 1] * d[1] + verts[i, 2] * d[2]
        if v > best:
            best = v
            bi = i
    return bi


@njit(cache=True)
def _closest_on_segment(a, b):
    """Closest point to the origin on segment ab plus kept-vertex mask."""
    ab = b - a
    denom = _dot(ab, ab)
    if denom < 1e-300:
        return a.copy(), True, False
    t = -_dot(a, ab) / denom
    if t <= 0.0:
        return a.copy(), True, False
    if t >= 1.0:
        return b.copy(), False, True
    return a + t * ab, True, True


@njit(cache=True)
def _closest_on_triangle(a, b, c):
    """Closest point to the origin on triangle abc plus kept-vertex mask."""
    ab = b - a
    ac = c - a
    d1 = -_dot(ab, a)
    d2 = -_dot(ac, a)
    if d1 <= 0.0 and d2 <= 0.0:
        return a.copy(), True, False, False
    d3 = -_dot(ab, b)
    d4 = -_dot(ac, b)
    if d3 >= 0.0 and d4 <= d3:
        return b.copy(), False, True, False
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        return a + t * ab, True, True, False
    d5 = -_dot(ab, c)
    d6 = -_dot(ac, c)
    if d6 >= 0.0 and d5 <= d6:
        return c.copy(), False, False, True
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        return a + t * ac, True, False, True
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + t * (c - b), False, True, True
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return a + ab * v + ac * w, True, True, True


@njit(cache=True)
def _reduce_simplex(simplex, k):
    """Closest point to origin over a k-simplex; writes the supporting
    sub-simplex back in place and returns (closest, new_k, contains)."""
    if k == 1:
        return simplex[0].copy(), 1, False
    if k == 2:
        p, ka, kb = _closest_on_segment(simplex[0], simplex[1])
        m = 0
        if ka:
            simplex[m] = simplex[0]
            m += 1
        if kb:
            simplex[m] = simplex[1]
            m += 1
        return p, m, False
    if k == 3:
        p, ka, kb, kc = _closest_on_triangle(simplex[0], simplex[1], simplex[2])
        keep = np.empty((3, 3))
        m = 0
        if ka:
            keep[m] = simplex[0]
            m += 1
        if kb:
            keep[m] = simplex[1]
            m += 1
        if kc:
            keep[m] = simplex[2]
            m += 1
        for i in range(m):
            simplex[i] = keep[i]
        return p, m, False
    # tetrahedron: test origin against each face, fall back to face cases
    a, b, c, d = simplex[0], simplex[1], simplex[2], simplex[3]
    best_d2 = 1.0e308
    best_p = a.copy()
    keep = np.empty((3, 3))
    best_m = 0
    outside_any = False
    for face in range(4):
        if face == 0:
            p1, p2, p3, p4 = a, b, c, d
        elif face == 1:
            p1, p2, p3, p4 = a, b, d, c
        elif face == 2:
            p1, p2, p3, p4 = a, c, d, b
        else:
            p1, p2, p3, p4 = b, c, d, a
        n = _cross(p2 - p1, p3 - p1)
        side_origin = -_dot(n, p1)
        side_other = _dot(n, p4 - p1)
        if side_origin * side_other < 0.0:
            outside_any = True
            p, k1, k2, k3 = _closest_on_triangle(p1, p2, p3)
            d2 = _dot(p, p)
            if d2 < best_d2:
                best_d2 = d2
                best_p = p
                m = 0
                if k1:
                    keep[m] = p1
                    m += 1
                if k2:
                    keep[m] = p2
                    m += 1
                if k3:
                    keep[m] = p3
                    m += 1
                best_m = m
    if not outside_any:
        return np.zeros(3), 4, True
    for i in range(best_m):
        simplex[i] = keep[i]
    return best_p, best_m, False


@njit(cache=True, nogil=True)
def gjk_distance(verts_a, verts_b):
    """Distance between conv(verts_a) and conv(verts_b).

    Returns (distance, converged); distance 0.0 means touching or
    overlapping. `converged` False only on iteration-cap exhaustion.
    """
    d0 = verts_a[0] - verts_b[0]
    if _dot(d0, d0) < 1e-24:
        d0 = np.array([1.0, 0.0, 0.0])
    simplex = np.empty((4, 3))
    w = (verts_a[_support_index(verts_a, -d0)]
         - verts_b[_support_index(verts_b, d0)])
    simplex[0] = w
    k = 1
    for _ in range(GJK_MAX_ITERS):
        v, k, contains = _reduce_simplex(simplex, k)
        if contains:
            return 0.0, True
        v2 = _dot(v, v)
        if v2 < 1e-24:
            return 0.0, True
        d = -v
        w = (verts_a[_support_index(verts_a, d)]
             - verts_b[_support_index(verts_b, -d)])
        # no progress toward the origin: v is the closest point
        if v2 - _dot(v, w) <= 1e-12 * v2:
            return np.sqrt(v2), True
        duplicate = False
        for i in range(k):
            diff = simplex[i] - w
            if _dot(diff, diff) < 1e-24:
                duplicate = True
                break
        if duplicate:
            return np.sqrt(v2), True
        simplex[k] = w
        k += 1
    v, k, contains = _reduce_simplex(simplex, k)
    if contains:
        return 0.0, True
    return np.sqrt(_dot(v, v)), False


@njit(cache=True, nogil=True)
def segment_segment_distance(p1, q1, p2, q2):
    """Exact closest distance between segments [p1,q1] and [p2,q2]."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    eps = 1e-18
    if a <= eps and e <= eps:
        return np.sqrt(_dot(r, r))
    if a <= eps:
        s = 0.0
        t = min(1.0, max(0.0, f / e))
    else:
        c = _dot(d1, r)
        if e <= eps:
            t = 0.0
            s = min(1.0, max(0.0, -c / a))
        else:
            b = _dot(d1, d2)
            denom = a * e - b * b
            if denom > eps:
                s = min(1.0, max(0.0, (b * f - c * e) / denom))
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = min(1.0, max(0.0, -c / a))
            elif t > 1.0:
                t = 1.0
                s = min(1.0, max(0.0, (b - c) / a))
    diff = (p1 + d1 * s) - (p2 + d2 * t)
    return np.sqrt(_dot(diff, diff))


@njit(cache=True, inline="always")
def _axis_angle_matrix(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    x, y, z = axis[0], axis[1], axis[2]
    out = np.empty((3, 3))
    ic = 1.0 - c
    out[0, 0] = c + x * x * ic
    out[0, 1] = x * y * ic - z * s
    out[0, 2] = x * z * ic + y * s
    out[1, 0] = y * x * ic + z * s
    out[1, 1] = c + y * y * ic
    out[1, 2] = y * z * ic - x * s
    out[2, 0] = z * x * ic - y * s
    out[2, 1] = z * y * ic + x * s
    out[2, 2] = c + z * z * ic
    return out


@njit(cache=True, nogil=True)
def fk_frames(axes, orig_R, orig_t, q, base_R, base_p):
    """World frames of every link: frame_i = frame_{i-1} . origin_i . R(axis_i, q_i)."""
    n = axes.shape[0]
    Rs = np.empty((n, 3, 3))
    ps = np.empty((n, 3))
    R = base_R.copy()
    p = base_p.copy()
    for i in range(n):
        p = p + R @ orig_t[i]
        R = R @ orig_R[i]
        R = R @ _axis_angle_matrix(axes[i], q[i])
        Rs[i] = R
        ps[i] = p
    return Rs, ps


@njit(cache=True, inline="always")
def _perp_basis(a):
    if abs(a[0]) < 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    else:
        ref = np.array([0.0, 1.0, 0.0])
    b1 = _cross(a, ref)
    b1 = b1 / np.sqrt(_dot(b1, b1))
    b2 = _cross(a, b1)
    return b1, b2


@njit(cache=True, nogil=True)
def ik_dls(axes, orig_R, orig_t, tool_R, tool_t, lo, hi,
           base_R, base_p, target_p, target_axis, q_init,
           pos_tol, axis_tol, damping, max_iters, step_cap,
           stall_iters=60):
    """Damped-least-squares IK on the 5-row task: position plus tool-z
    alignment, yaw free. Returns (q, pos_err, axis_err, iters, success);
    on failure q and the errors describe the best iterate seen. A run whose
    best iterate has not improved for `stall_iters` iterations (typically a
    joint-limit deadlock) is abandoned early as a failure."""
    n = axes.shape[0]
    q = q_init.copy()
    best_q = q.copy()
    best_pos = 1.0e308
    best_axis = 1.0e308
    since_improve = 0
    lam2 = damping * damping
    J = np.empty((5, n))
    e5 = np.empty(5)
    for it in range(max_iters + 1):
        Rs, ps = fk_frames(axes, orig_R, orig_t, q, base_R, base_p)
        Rn = Rs[n - 1]
        p_tool = ps[n - 1] + Rn @ tool_t
        R_tool = Rn @ tool_R
        a = R_tool[:, 2].copy()
        e_p = target_p - p_tool
        pos_err = np.sqrt(_dot(e_p, e_p))
        cx = _cross(a, target_axis)
        sn = np.sqrt(_dot(cx, cx))
        cs = _dot(a, target_axis)
        axis_err = np.arctan2(sn, cs)
        if pos_err < best_pos - 1e-12 or (pos_err < best_pos + 1e-12
                                          and axis_err < best_axis - 1e-12):
            best_pos = pos_err
            best_axis = axis_err
            best_q = q.copy()
            since_improve = 0
        else:
            since_improve += 1
        if pos_err <= pos_tol and axis_err <= axis_tol:
            return q, pos_err, axis_err, it, True
        if it == max_iters or since_improve >= stall_iters:
            break
        b1, b2 = _perp_basis(a)
        if sn > 1e-12:
            e_rot = cx * (axis_err / sn)
        elif cs < 0.0:
            e_rot = b1 * np.pi  # anti-parallel: rotate about any perpendicular
        else:
            e_rot = np.zeros(3)
        for i in range(n):
            zi = Rs[i] @ axes[i]
            lever = p_tool - ps[i]
            J[0, i] = zi[1] * lever[2] - zi[2] * lever[1]
            J[1, i] = zi[2] * lever[0] - zi[0] * lever[2]
            J[2, i] = zi[0] * lever[1] - zi[1] * lever[0]
            J[3, i] = _dot(b1, zi)
            J[4, i] = _dot(b2, zi)
        e5[0] = e_p[0]
        e5[1] = e_p[1]
        e5[2] = e_p[2]
        e5[3] = _dot(b1, e_rot)
        e5[4] = _dot(b2, e_rot)
        A = J @ J.T
        for r in range(5):
            A[r, r] += lam2
        y = np.linalg.solve(A, e5)
        dq = J.T @ y
        mx = 0.0
        for i in range(n):
            if abs(dq[i]) > mx:
                mx = abs(dq[i])
        if mx > step_cap:
            dq *= step_cap / mx
        for i in range(n):
            qi = q[i] + dq[i]
            if qi < lo[i]:
                qi = lo[i]
            elif qi > hi[i]:
                qi = hi[i]
            q[i] = qi
    return best_q, best_pos, best_axis, it, False


@njit(cache=True, nogil=True)
def robot_in_collision_kernel(Rs, ps, cap_link, cap_a, cap_b, cap_r,
                              hull_verts, hull_starts, tol):
    """True when any posed link capsule touches any hull, or any pair of
    capsules on non-adjacent links touch each other."""
    m = cap_link.shape[0]
    wa = np.empty((m, 3))
    wb = np.empty((m, 3))
    for i in range(m):
        l = cap_link[i]
        wa[i] = ps[l] + Rs[l] @ cap_a[i]
        wb[i] = ps[l] + Rs[l] @ cap_b[i]
    n_hulls = hull_starts.shape[0] - 1
    seg = np.empty((2, 3))
    for i in range(m):
        seg[0] = wa[i]
        seg[1] = wb[i]
        for h in range(n_hulls):
            verts = hull_verts[hull_starts[h]:hull_starts[h + 1]]
            dist, converged = gjk_distance(seg, verts)
            if not converged:
                return True  # cap hit: conservative
            if dist - cap_r[i] <= tol:
                return True
    for i in range(m):
        for j in range(i + 1, m):
            if cap_link[j] - cap_link[i] >= 2:
                d = segment_segment_distance(wa[i], wb[i], wa[j], wb[j])
                if d - cap_r[i] - cap_r[j] <= tol:
                    return True
    return False


@njit(cache=True)
def _coarse_to_fine_order(steps):
    """0, steps, then breadth-first interval midpoints: colliding sweeps are
    detected after a few samples instead of a linear scan. Every index in
    0..steps appears exactly once."""
    n = steps + 1
    order = np.empty(n, np.int64)
    order[0] = 0
    if steps == 0:
        return order
    order[1] = steps
    k = 2
    # the midpoint-subdivision tree holds up to ~2n intervals
    queue_lo = np.empty(2 * n + 2, np.int64)
    queue_hi = np.empty(2 * n + 2, np.int64)
    queue_lo[0] = 0
    queue_hi[0] = steps
    head = 0
    tail = 1
    while head < tail:
        lo = queue_lo[head]
        hi = queue_hi[head]
        head += 1
        if hi - lo < 2:
            continue
        mid = (lo + hi) // 2
        order[k] = mid
        k += 1
        queue_lo[tail] = lo
        queue_hi[tail] = mid
        tail += 1
        queue_lo[tail] = mid
        queue_hi[tail] = hi
        tail += 1
    return order


@njit(cache=True, nogil=True)
def path_collision_free(axes, orig_R, orig_t, base_R, base_p,
                        q_from, q_to, resolution,
                        cap_link, cap_a, cap_b, cap_r,
                        hull_verts, hull_starts, tol):
    """Straight joint-space sweep sampled so the largest joint moves at
    most `resolution` radians per step; every sample must be collision-free.
    Samples are visited coarse-to-fine (same set, reordered), so the verdict
    is identical to a linear scan but colliding sweeps exit early."""
    n = q_from.shape[0]
    mx = 0.0
    for i in range(n):
        d = abs(q_to[i] - q_from[i])
        if d > mx:
            mx = d
    steps = int(np.ceil(mx / resolution))
    if steps < 1:
        steps = 1
    order = _coarse_to_fine_order(steps)
    for k in range(order.shape[0]):
        frac = order[k] / steps
        q = q_from + (q_to - q_from) * frac
        Rs, ps = fk_frames(axes, orig_R, orig_t, q, base_R, base_p)
        if robot_in_collision_kernel(Rs, ps, cap_link, cap_a, cap_b, cap_r,
                                     hull_verts, hull_starts, tol):
            return False
    return True
