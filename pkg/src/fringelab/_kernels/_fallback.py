"""Pure numpy versions of the per-pixel kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
"""
import numpy as np

HALF_PI = 0.5 * np.pi


def wrap(u):
    """atan(tan(u)) with range (-pi/2, pi/2]."""
    u = np.asarray(u, dtype=np.float64)
    return u - np.pi * np.ceil(u / np.pi - 0.5)


def wrap_vector(vx, vy):
    vx = np.asarray(vx, dtype=np.float64)
    vy = np.asarray(vy, dtype=np.float64)
    m = np.hypot(vx, vy)
    scale = np.ones_like(m)
    nz = m > 0.0
    scale[nz] = wrap(m[nz]) / m[nz]
    scale[~nz] = 0.0
    return vx * scale, vy * scale


def bilinear_periodic(tile, pos):
    """Linear interpolation of a periodic 1-D tile at fractional sample positions."""
    tile = np.asarray(tile, dtype=np.float64)
    pos = np.asarray(pos, dtype=np.float64)
    n = tile.shape[0]
    i0 = np.floor(pos)
    t = pos - i0
    i0 = np.mod(i0.astype(np.int64), n)
    i1 = i0 + 1
    i1[i1 == n] = 0
    return (1.0 - t) * tile[i0] + t * tile[i1]


def _wrapped_diff_1d(u, axis):
    """Wrapped one-sided differences averaged into a central estimate."""
    d = wrap(np.diff(u, axis=axis))
    n = u.shape[axis]
    out = np.empty_like(u)
    sl = [slice(None)] * u.ndim

    def at(s):
        sl2 = list(sl)
        sl2[axis] = s
        return tuple(sl2)

    out[at(slice(1, n - 1))] = 0.5 * (d[at(slice(0, n - 2))] + d[at(slice(1, n - 1))])
    out[at(slice(0, 1))] = d[at(slice(0, 1))]
    out[at(slice(n - 1, n))] = d[at(slice(n - 2, n - 1))]
    # largest one-sided step magnitude, for violation flags
    step = np.abs(d)
    worst = np.empty_like(u)
    worst[at(slice(1, n - 1))] = np.maximum(step[at(slice(0, n - 2))], step[at(slice(1, n - 1))])
    worst[at(slice(0, 1))] = step[at(slice(0, 1))]
    worst[at(slice(n - 1, n))] = step[at(slice(n - 2, n - 1))]
    return out, worst


def wrapped_gradient(u):
    """Gradient of a phase map defined modulo pi.

    Returns ``(gx, gy, worst_step)`` where ``worst_step`` is the largest
    wrapped one-sided difference touching each pixel.
    """
    u = np.asarray(u, dtype=np.float64)
    gx, wx = _wrapped_diff_1d(u, 1)
    gy, wy = _wrapped_diff_1d(u, 0)
    return gx, gy, np.maximum(wx, wy)
