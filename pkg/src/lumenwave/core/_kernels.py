# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Per-sample hot path.

Compiled via Cython pure-Python mode; the same file runs interpreted when
the extension is unavailable.  All arithmetic is IEEE double / int64 with
Python-compatible semantics so both execution modes produce bit-identical
results.  Anything per-ray or per-sample lives here; construction of the
tables this module consumes lives in the plain-Python modules.
"""

import cython

if cython.compiled:
    from cython.cimports.libc.math import (
        sqrt,
        exp,
        log,
        sin,
        cos,
        atan2,
        acos,
        floor,
        fabs,
        pow,
    )
else:
    from math import sqrt, exp, log, sin, cos, atan2, acos, floor, fabs, pow


def is_compiled() -> bool:
    return cython.compiled


PI = cython.declare(cython.double, 3.141592653589793)
TWO_PI = cython.declare(cython.double, 6.283185307179586)
FOUR_PI = cython.declare(cython.double, 12.566370614359172)
INV_PI = cython.declare(cython.double, 0.3183098861837907)
INF = cython.declare(cython.double, 1e308)

# Path stages (wavefront state machine).  Python-visible mirrors of the
# C-level constants used inside nogil code.
STAGE_GENERATE = 0
STAGE_TRACE = 1
STAGE_MATERIAL = 2
STAGE_NEE = 3
STAGE_ENVMATTE = 4
STAGE_TERMINATED = 5
STAGE_COUNT = 6

ST_GENERATE = cython.declare(cython.int, 0)
ST_TRACE = cython.declare(cython.int, 1)
ST_MATERIAL = cython.declare(cython.int, 2)
ST_NEE = cython.declare(cython.int, 3)
ST_ENVMATTE = cython.declare(cython.int, 4)
ST_TERMINATED = cython.declare(cython.int, 5)
N_STAGES = cython.declare(cython.int, 6)


# ---------------------------------------------------------------------------
# Scalar helpers
# ---------------------------------------------------------------------------


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _clamp(x: cython.double, lo: cython.double, hi: cython.double) -> cython.double:
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _round_half_up(x: cython.double) -> cython.double:
    return floor(x + 0.5)


# Acklam's rational approximation of the standard normal inverse CDF.
# Pure double arithmetic: identical compiled and interpreted.
@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _norm_inv_cdf(p: cython.double) -> cython.double:
    q: cython.double
    r: cython.double
    if p <= 0.0:
        return -38.0
    if p >= 1.0:
        return 38.0
    if p < 0.02425:
        q = sqrt(-2.0 * log(p))
        return (
            ((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q - 2.400758277161838e00) * q - 2.549732539343734e00) * q + 4.374664141464968e00) * q + 2.938163982698783e00
        ) / ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q + 2.445134137142996e00) * q + 3.754408661907416e00) * q + 1.0)
    if p > 1.0 - 0.02425:
        q = sqrt(-2.0 * log(1.0 - p))
        return -(
            ((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q - 2.400758277161838e00) * q - 2.549732539343734e00) * q + 4.374664141464968e00) * q + 2.938163982698783e00
        ) / ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q + 2.445134137142996e00) * q + 3.754408661907416e00) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (
        (((((-3.969683028665376e01 * r + 2.209460984245205e02) * r - 2.759285104469687e02) * r + 1.383577518672690e02) * r - 3.066479806614716e01) * r + 2.506628277459239e00)
        * q
    ) / (((((-5.447609879822406e01 * r + 1.615858368580409e02) * r - 1.556989798598866e02) * r + 6.680131188771972e01) * r - 1.328068155288572e01) * r + 1.0)


# Truncated-Gaussian CDF bounds for the 3-sigma pixel filter.
# Phi(-3) and Phi(3) to double precision.
_PHI_NEG3 = cython.declare(cython.double, 0.0013498980316300933)
_PHI_POS3 = cython.declare(cython.double, 0.9986501019683699)


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def gauss_filter_offset(u: cython.double) -> cython.double:
    """Inverse-CDF sample of a zero-mean Gaussian, sigma=0.5, truncated at 3 sigma."""
    p: cython.double = _PHI_NEG3 + u * (_PHI_POS3 - _PHI_NEG3)
    x: cython.double = _norm_inv_cdf(p)
    if x < -3.0:
        x = -3.0
    if x > 3.0:
        x = 3.0
    return 0.5 * x


def sample_pixel_offset(u1: cython.double, u2: cython.double) -> tuple:
    """Filter-importance-sampled anti-aliasing offset, in pixels."""
    return (gauss_filter_offset(u1), gauss_filter_offset(u2))


# Density of the truncated filter (per pixel-area), needed by the
# light-tracer MIS weights.  Normalisation of the 1-D truncated kernel:
# integral of exp(-x^2/(2 s^2)) over [-3s, 3s] = s*sqrt(2*pi)*(Phi(3)-Phi(-3)).
_GAUSS_NORM_1D = cython.declare(cython.double, 0.5 * 2.5066282746310002 * (0.9986501019683699 - 0.0013498980316300933))


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def gauss_filter_density_1d(x: cython.double) -> cython.double:
    if x < -1.5 or x > 1.5:
        return 0.0
    return exp(-x * x * 2.0) / _GAUSS_NORM_1D


# ---------------------------------------------------------------------------
# Radical inverse (scrambled Halton)
# ---------------------------------------------------------------------------
# Digits are extracted with exact integer ops; the reversed-digit value and
# the base power are carried in doubles, which is exact integer arithmetic
# for all indices below 2^53 (the engine's index space is far smaller).


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def radical_inverse_scrambled(
    base: cython.longlong,
    perm: cython.longlong[::1],
    perm_off: cython.longlong,
    index: cython.longlong,
) -> cython.double:
    rev: cython.double = 0.0
    scale: cython.double = 1.0
    b: cython.double = base
    digit: cython.longlong
    while index > 0:
        digit = index % base
        index = index // base
        rev = rev * b + perm[perm_off + digit]
        scale = scale * b
    return rev / scale


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def radical_inverse_base2(index: cython.longlong) -> cython.double:
    # Reverse the 53 low bits; indices are below 2^53 by contract.
    rev: cython.double = 0.0
    scale: cython.double = 1.0
    while index > 0:
        rev = rev * 2.0 + (index & 1)
        scale = scale * 2.0
        index = index >> 1
    return rev / scale


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def halton_dim(
    bases: cython.longlong[::1],
    perm_flat: cython.longlong[::1],
    perm_offset: cython.longlong[::1],
    dim: cython.longlong,
    index: cython.longlong,
) -> cython.double:
    b: cython.longlong = bases[dim]
    if b == 2:
        return radical_inverse_base2(index)
    return radical_inverse_scrambled(b, perm_flat, perm_offset[dim], index)


def halton_batch(bases, perm_flat, perm_offset, dim: cython.longlong, indices, out):
    """Evaluate one Halton dimension for many indices (test/bench surface)."""
    idx: cython.longlong[::1] = indices
    res: cython.double[::1] = out
    bs: cython.longlong[::1] = bases
    pf: cython.longlong[::1] = perm_flat
    po: cython.longlong[::1] = perm_offset
    n: cython.Py_ssize_t = idx.shape[0]
    i: cython.Py_ssize_t
    with cython.nogil:
        for i in range(n):
            res[i] = halton_dim(bs, pf, po, dim, idx[i])


# ---------------------------------------------------------------------------
# Octahedral unit-vector compression (16 bits per component)
# ---------------------------------------------------------------------------


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def oct_encode(x: cython.double, y: cython.double, z: cython.double) -> cython.longlong:
    ax: cython.double = fabs(x)
    ay: cython.double = fabs(y)
    az: cython.double = fabs(z)
    norm: cython.double = ax + ay + az
    if norm <= 0.0:
        return 0
    u: cython.double = x / norm
    v: cython.double = y / norm
    if z < 0.0:
        # fold the lower hemisphere over the diagonals
        fu: cython.double = (1.0 - fabs(v)) * (1.0 if u >= 0.0 else -1.0)
        fv: cython.double = (1.0 - fabs(u)) * (1.0 if v >= 0.0 else -1.0)
        u = fu
        v = fv
    eu: cython.longlong = cython.cast(cython.longlong, _round_half_up((u + 1.0) * 0.5 * 65535.0))
    ev: cython.longlong = cython.cast(cython.longlong, _round_half_up((v + 1.0) * 0.5 * 65535.0))
    if eu < 0:
        eu = 0
    if eu > 65535:
        eu = 65535
    if ev < 0:
        ev = 0
    if ev > 65535:
        ev = 65535
    return (eu << 16) | ev


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def oct_decode_x(packed: cython.longlong) -> cython.double:
    # Components are decoded together; helpers return one component each to
    # keep the call sites free of tuple packing in nogil code.
    eu: cython.longlong = (packed >> 16) & 0xFFFF
    ev: cython.longlong = packed & 0xFFFF
    u: cython.double = eu / 65535.0 * 2.0 - 1.0
    v: cython.double = ev / 65535.0 * 2.0 - 1.0
    z: cython.double = 1.0 - fabs(u) - fabs(v)
    if z < 0.0:
        u = (1.0 - fabs(v)) * (1.0 if u >= 0.0 else -1.0)
    return u


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def oct_decode_y(packed: cython.longlong) -> cython.double:
    eu: cython.longlong = (packed >> 16) & 0xFFFF
    ev: cython.longlong = packed & 0xFFFF
    u: cython.double = eu / 65535.0 * 2.0 - 1.0
    v: cython.double = ev / 65535.0 * 2.0 - 1.0
    z: cython.double = 1.0 - fabs(u) - fabs(v)
    if z < 0.0:
        v = (1.0 - fabs(u)) * (1.0 if v >= 0.0 else -1.0)
    return v


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def oct_decode_z(packed: cython.longlong) -> cython.double:
    eu: cython.longlong = (packed >> 16) & 0xFFFF
    ev: cython.longlong = packed & 0xFFFF
    u: cython.double = eu / 65535.0 * 2.0 - 1.0
    v: cython.double = ev / 65535.0 * 2.0 - 1.0
    return 1.0 - fabs(u) - fabs(v)


def compress_unit_vector(x: cython.double, y: cython.double, z: cython.double) -> cython.longlong:
    """Pack a unit vector into 2x16 bits (octahedron map)."""
    n: cython.double = sqrt(x * x + y * y + z * z)
    if n == 0.0:
        raise ValueError("zero vector cannot be compressed")
    return oct_encode(x, y, z)


def decompress_unit_vector(packed: cython.longlong) -> tuple:
    """Inverse of :func:`compress_unit_vector`; renormalised."""
    x: cython.double = oct_decode_x(packed)
    y: cython.double = oct_decode_y(packed)
    z: cython.double = oct_decode_z(packed)
    n: cython.double = sqrt(x * x + y * y + z * z)
    if n == 0.0:
        return (0.0, 0.0, 1.0)
    return (x / n, y / n, z / n)


def oct_roundtrip_batch(vecs, out):
    """Compress+decompress rows of `vecs` into `out` (test surface)."""
    v: cython.double[:, ::1] = vecs
    o: cython.double[:, ::1] = out
    n: cython.Py_ssize_t = v.shape[0]
    i: cython.Py_ssize_t
    packed: cython.longlong
    x: cython.double
    y: cython.double
    z: cython.double
    ln: cython.double
    with cython.nogil:
        for i in range(n):
            packed = oct_encode(v[i, 0], v[i, 1], v[i, 2])
            x = oct_decode_x(packed)
            y = oct_decode_y(packed)
            z = oct_decode_z(packed)
            ln = sqrt(x * x + y * y + z * z)
            if ln > 0.0:
                o[i, 0] = x / ln
                o[i, 1] = y / ln
                o[i, 2] = z / ln


# ---------------------------------------------------------------------------
# Watertight ray/triangle intersection and BVH traversal
# ---------------------------------------------------------------------------
# Max-axis/shear formulation: shared edges evaluate identical edge functions
# in neighbouring triangles, and exact zeros are accepted inclusively, so
# edge and vertex rays cannot slip between triangles.  Ties at equal t go to
# the lower triangle id.


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _safe_inv(d: cython.double) -> cython.double:
    if d > 1e-200 or d < -1e-200:
        return 1.0 / d
    if d >= 0.0:
        return 1e200
    return -1e200


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _tri_hit(
    verts: cython.double[:, ::1],
    tri: cython.longlong,
    ox: cython.double, oy: cython.double, oz: cython.double,
    kx: cython.longlong, ky: cython.longlong, kz: cython.longlong,
    sx: cython.double, sy: cython.double, sz: cython.double,
    tmin: cython.double,
    res: cython.double[::1],
) -> cython.longlong:
    """Test one triangle; update res=[t, tri, bu, bv] if closer. Returns 1 on update."""
    ax: cython.double = verts[tri, 3 * 0 + kx] - ox
    ay: cython.double = verts[tri, 3 * 0 + ky] - oy
    az: cython.double = verts[tri, 3 * 0 + kz] - oz
    bx: cython.double = verts[tri, 3 * 1 + kx] - ox
    by: cython.double = verts[tri, 3 * 1 + ky] - oy
    bz: cython.double = verts[tri, 3 * 1 + kz] - oz
    cx: cython.double = verts[tri, 3 * 2 + kx] - ox
    cy: cython.double = verts[tri, 3 * 2 + ky] - oy
    cz: cython.double = verts[tri, 3 * 2 + kz] - oz
    # shear to ray space
    sax: cython.double = ax - sx * az
    say: cython.double = ay - sy * az
    sbx: cython.double = bx - sx * bz
    sby: cython.double = by - sy * bz
    scx: cython.double = cx - sx * cz
    scy: cython.double = cy - sy * cz
    u: cython.double = scx * sby - scy * sbx
    v: cython.double = sax * scy - say * scx
    w: cython.double = sbx * say - sby * sax
    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return 0
    det: cython.double = u + v + w
    if det == 0.0:
        return 0
    t_scaled: cython.double = u * (sz * az) + v * (sz * bz) + w * (sz * cz)
    t: cython.double = t_scaled / det
    if t <= tmin:
        return 0
    best_t: cython.double = res[0]
    if t > best_t:
        return 0
    if t == best_t and res[1] >= 0.0 and tri >= cython.cast(cython.longlong, res[1]):
        return 0
    res[0] = t
    res[1] = tri
    # weights: u->v0, v->v1, w->v2; store (v1, v2) weights
    res[2] = v / det
    res[3] = w / det
    return 1


@cython.cfunc
@cython.nogil
@cython.exceptval(check=False)
def _traverse_closest(
    bounds: cython.double[:, ::1],
    children: cython.longlong[:, ::1],
    order: cython.longlong[::1],
    verts: cython.double[:, ::1],
    ox: cython.double, oy: cython.double, oz: cython.double,
    dx: cython.double, dy: cython.double, dz: cython.double,
    tmin: cython.double, tmax: cython.double,
    res: cython.double[::1],
    stack: cython.longlong[::1],
) -> cython.void:
    res[0] = tmax
    res[1] = -1.0
    res[2] = 0.0
    res[3] = 0.0
    if verts.shape[0] == 0:
        return
    # watertight setup: permute so z is the dominant axis
    adx: cython.double = fabs(dx)
    ady: cython.double = fabs(dy)
    adz: cython.double = fabs(dz)
    kz: cython.longlong = 0
    if ady > adx:
        kz = 1
        if adz > ady:
            kz = 2
    elif adz > adx:
        kz = 2
    kx: cython.longlong = kz + 1
    if kx == 3:
        kx = 0
    ky: cython.longlong = kx + 1
    if ky == 3:
        ky = 0
    dkz: cython.double = dz
    if kz == 0:
        dkz = dx
    elif kz == 1:
        dkz = dy
    if dkz < 0.0:
        tswap: cython.longlong = kx
        kx = ky
        ky = tswap
    dkx: cython.double = dx
    if kx == 1:
        dkx = dy
    elif kx == 2:
        dkx = dz
    dky: cython.double = dx
    if ky == 1:
        dky = dy
    elif ky == 2:
        dky = dz
    sz: cython.double = 1.0 / dkz
    sx: cython.double = dkx * sz
    sy: cython.double = dky * sz

    ix: cython.double = _safe_inv(dx)
    iy: cython.double = _safe_inv(dy)
    iz: cython.double = _safe_inv(dz)

    sp: cython.longlong = 0
    stack[0] = 0
    sp = 1
    node: cython.longlong
    c0: cython.longlong
    c1: cython.longlong
    i: cython.longlong
    start: cython.longlong
    count: cython.longlong
    t0: cython.double
    t1: cython.double
    tn: cython.double
    tf: cython.double
    while sp > 0:
        sp -= 1
        node = stack[sp]
        # AABB slab test against current best distance
        t0 = (bounds[node, 0] - ox) * ix
        t1 = (bounds[node, 3] - ox) * ix
        if t0 > t1:
            tn = t1
            tf = t0
        else:
            tn = t0
            tf = t1
        t0 = (bounds[node, 1] - oy) * iy
        t1 = (bounds[node, 4] - oy) * iy
        if t0 > t1:
            if t0 < tf:
                tf = t0
            if t1 > tn:
                tn = t1
        else:
            if t1 < tf:
                tf = t1
            if t0 > tn:
                tn = t0
        t0 = (bounds[node, 2] - oz) * iz
        t1 = (bounds[node, 5] - oz) * iz
        if t0 > t1:
            if t0 < tf:
                tf = t0
            if t1 > tn:
                tn = t1
        else:
            if t1 < tf:
                tf = t1
            if t0 > tn:
                tn = t0
        if tn > tf or tn > res[0] or tf < tmin:
            continue
        c0 = children[node, 0]
        c1 = children[node, 1]
        if c0 < 0:
            start = -(c0 + 1)
            count = c1
            for i in range(count):
                _tri_hit(verts, order[start + i], ox, oy, oz, kx, ky, kz, sx, sy, sz, tmin, res)
        else:
            stack[sp] = c0
            sp += 1
            stack[sp] = c1
            sp += 1


def intersect_batch(bounds, children, order, verts, instances, origins, dirs, tmaxs, out_t, out_tri, out_bary):
    """Closest-hit query for a batch of rays (test and wrapper surface)."""
    b: cython.double[:, ::1] = bounds
    ch: cython.longlong[:, ::1] = children
    od: cython.longlong[::1] = order
    tv: cython.double[:, ::1] = verts
    o: cython.double[:, ::1] = origins
    d: cython.double[:, ::1] = dirs
    tm: cython.double[::1] = tmaxs
    ot: cython.double[::1] = out_t
    otri: cython.longlong[::1] = out_tri
    ob: cython.double[:, ::1] = out_bary
    import numpy as _np

    res_arr = _np.zeros(4)
    stack_arr = _np.zeros(128, dtype=_np.int64)
    res: cython.double[::1] = res_arr
    stack: cython.longlong[::1] = stack_arr
    n: cython.Py_ssize_t = o.shape[0]
    i: cython.Py_ssize_t
    with cython.nogil:
        for i in range(n):
            _traverse_closest(
                b, ch, od, tv,
                o[i, 0], o[i, 1], o[i, 2],
                d[i, 0], d[i, 1], d[i, 2],
                0.0, tm[i], res, stack,
            )
            if res[1] >= 0.0:
                ot[i] = res[0]
                otri[i] = cython.cast(cython.longlong, res[1])
                ob[i, 0] = res[2]
                ob[i, 1] = res[3]
            else:
                ot[i] = INF
                otri[i] = -1
                ob[i, 0] = 0.0
                ob[i, 1] = 0.0
