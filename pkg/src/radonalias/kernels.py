"""Hot inner loops: ray-sum projection of rasters and backprojection.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version. ``USE_NUMBA`` (see ``_accel``) picks the default;
both are importable directly so the benchmark and the tests can compare them.

Interpolation is Keys cubic convolution (a = -0.5) or linear; taps that fall
outside the sampled range contribute zero.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, prange

KEYS_A = -0.5


# ---------------------------------------------------------------------------
# numba versions
# ---------------------------------------------------------------------------

@njit
def _keys_weight(x):
    ax = abs(x)
    if ax <= 1.0:
        return ((KEYS_A + 2.0) * ax - (KEYS_A + 3.0)) * ax * ax + 1.0
    if ax < 2.0:
        return ((KEYS_A * ax - 5.0 * KEYS_A) * ax + 8.0 * KEYS_A) * ax - 4.0 * KEYS_A
    return 0.0


@njit
def _sample_row(row, u, cubic):
    n = row.shape[0]
    i0 = int(np.floor(u))
    f = u - i0
    if cubic:
        acc = 0.0
        for d in range(-1, 3):
            i = i0 + d
            if 0 <= i < n:
                acc += row[i] * _keys_weight(f - d)
        return acc
    acc = 0.0
    if 0 <= i0 < n:
        acc += row[i0] * (1.0 - f)
    if 0 <= i0 + 1 < n:
        acc += row[i0 + 1] * f
    return acc


@njit
def _sample_image(img, ux, uy, cubic):
    n0 = img.shape[0]
    n1 = img.shape[1]
    ix = int(np.floor(ux))
    iy = int(np.floor(uy))
    fx = ux - ix
    fy = uy - iy
    acc = 0.0
    if cubic:
        for dy in range(-1, 3):
            r = iy + dy
            if r < 0 or r >= n0:
                continue
            wy = _keys_weight(fy - dy)
            if wy == 0.0:
                continue
            s = 0.0
            for dx in range(-1, 3):
                c = ix + dx
                if 0 <= c < n1:
                    s += img[r, c] * _keys_weight(fx - dx)
            acc += wy * s
        return acc
    for dy in range(2):
        r = iy + dy
        if r < 0 or r >= n0:
            continue
        wy = fy if dy == 1 else 1.0 - fy
        for dx in range(2):
            c = ix + dx
            if 0 <= c < n1:
                wx = fx if dx == 1 else 1.0 - fx
                acc += img[r, c] * wx * wy
    return acc


@njit(parallel=True)
def _project_raster_nb(img, half_extent, cosv, sinv, ps, dt, cubic):
    n = img.shape[0]
    cell = 2.0 * half_extent / n
    out = np.zeros((cosv.shape[0], ps.shape[0]))
    tmax = half_extent * np.sqrt(2.0) + 2.0 * cell
    kmax = int(np.ceil(tmax / dt))
    lo = -half_extent - 2.0 * cell
    hi = half_extent + 2.0 * cell
    for j in prange(cosv.shape[0]):
        c = cosv[j]
        s = sinv[j]
        for i in range(ps.shape[0]):
            p = ps[i]
            acc = 0.0
            for k in range(-kmax, kmax + 1):
                t = k * dt
                x = p * c - t * s
                y = p * s + t * c
                if x < lo or x > hi or y < lo or y > hi:
                    continue
                ux = (x + half_extent) / cell - 0.5
                uy = (y + half_extent) / cell - 0.5
                acc += _sample_image(img, ux, uy, cubic)
            out[j, i] = acc * dt
    return out


@njit(parallel=True)
def _backproject_nb(rows, p_first, dp, cosv, sinv, weights, xs, ys, cubic):
    npts = xs.shape[0]
    nrow = rows.shape[1]
    out = np.zeros(npts)
    outside = 0
    pmax = (nrow - 1) * dp
    for k in prange(npts):
        acc = 0.0
        for j in range(cosv.shape[0]):
            p = xs[k] * cosv[j] + ys[k] * sinv[j] - p_first
            if p < 0.0 or p > pmax:
                outside += 1
                continue
            acc += weights[j] * _sample_row(rows[j], p / dp, cubic)
        out[k] = acc
    return out, outside


# ---------------------------------------------------------------------------
# numpy versions
# ---------------------------------------------------------------------------

def _keys_weight_np(x):
    ax = np.abs(x)
    w = np.zeros_like(ax)
    m1 = ax <= 1.0
    m2 = (ax > 1.0) & (ax < 2.0)
    a = KEYS_A
    w[m1] = ((a + 2.0) * ax[m1] - (a + 3.0)) * ax[m1] ** 2 + 1.0
    w[m2] = ((a * ax[m2] - 5.0 * a) * ax[m2] + 8.0 * a) * ax[m2] - 4.0 * a
    return w


def _taps(u, cubic):
    i0 = np.floor(u).astype(np.int64)
    f = u - i0
    if cubic:
        return [(i0 + d, _keys_weight_np(f - d)) for d in range(-1, 3)]
    return [(i0, 1.0 - f), (i0 + 1, f)]


def _sample_rows_np(row, u, cubic):
    n = row.shape[0]
    acc = np.zeros_like(u)
    for idx, w in _taps(u, cubic):
        ok = (idx >= 0) & (idx < n)
        acc[ok] += row[idx[ok]] * w[ok]
    return acc


def _sample_image_np(img, ux, uy, cubic):
    n0, n1 = img.shape
    acc = np.zeros_like(ux)
    tx = _taps(ux, cubic)
    for iy, wy in _taps(uy, cubic):
        oky = (iy >= 0) & (iy < n0)
        for ix, wx in tx:
            ok = oky & (ix >= 0) & (ix < n1)
            acc[ok] += img[iy[ok], ix[ok]] * wx[ok] * wy[ok]
    return acc


def _project_raster_np(img, half_extent, cosv, sinv, ps, dt, cubic):
    n = img.shape[0]
    cell = 2.0 * half_extent / n
    tmax = half_extent * np.sqrt(2.0) + 2.0 * cell
    kmax = int(np.ceil(tmax / dt))
    t = np.arange(-kmax, kmax + 1) * dt
    out = np.zeros((cosv.shape[0], ps.shape[0]))
    lo = -half_extent - 2.0 * cell
    hi = half_extent + 2.0 * cell
    for j in range(cosv.shape[0]):
        x = ps[:, None] * cosv[j] - t[None, :] * sinv[j]
        y = ps[:, None] * sinv[j] + t[None, :] * cosv[j]
        inside = (x >= lo) & (x <= hi) & (y >= lo) & (y <= hi)
        vals = np.zeros(x.shape)
        ux = (x[inside] + half_extent) / cell - 0.5
        uy = (y[inside] + half_extent) / cell - 0.5
        vals[inside] = _sample_image_np(img, ux, uy, cubic)
        out[j] = vals.sum(axis=1) * dt
    return out


def _backproject_np(rows, p_first, dp, cosv, sinv, weights, xs, ys, cubic):
    out = np.zeros(xs.shape[0])
    outside = 0
    pmax = (rows.shape[1] - 1) * dp
    for j in range(cosv.shape[0]):
        p = xs * cosv[j] + ys * sinv[j] - p_first
        ok = (p >= 0.0) & (p <= pmax)
        outside += int(np.count_nonzero(~ok))
        out[ok] += weights[j] * _sample_rows_np(rows[j], p[ok] / dp, cubic)
    return out, outside


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def project_raster(img, half_extent, cosv, sinv, ps, dt, cubic=True, use_numba=None):
    """Line integrals of a pixel-centered raster along {x . omega_j = p_i}.

    Returns an (angles x offsets) array. ``dt`` is the quadrature step along
    each line.
    """
    use = USE_NUMBA if use_numba is None else use_numba
    args = (np.ascontiguousarray(img, dtype=np.float64), float(half_extent),
            np.ascontiguousarray(cosv, dtype=np.float64),
            np.ascontiguousarray(sinv, dtype=np.float64),
            np.ascontiguousarray(ps, dtype=np.float64), float(dt), bool(cubic))
    if use:
        return _project_raster_nb(*args)
    return _project_raster_np(*args)


def backproject(rows, p_first, dp, cosv, sinv, weights, xs, ys, cubic=True, use_numba=None):
    """Weighted sum over angles of ``rows[j]`` interpolated at ``x . omega_j``.

    ``rows[j]`` is sampled at ``p_first + i * dp``. Returns the values at the
    query points and the number of (point, angle) pairs whose offset fell
    outside the sampled range (those contribute zero).
    """
    use = USE_NUMBA if use_numba is None else use_numba
    args = (np.ascontiguousarray(rows, dtype=np.float64), float(p_first), float(dp),
            np.ascontiguousarray(cosv, dtype=np.float64),
            np.ascontiguousarray(sinv, dtype=np.float64),
            np.ascontiguousarray(weights, dtype=np.float64),
            np.ascontiguousarray(xs, dtype=np.float64).ravel(),
            np.ascontiguousarray(ys, dtype=np.float64).ravel(), bool(cubic))
    if use:
        vals, outside = _backproject_nb(*args)
        return vals, int(outside)
    return _backproject_np(*args)
