"""Hot numeric kernels: line rasterization and 1-D resampling.

Each kernel is written once in nopython-compatible numpy style and compiled
with numba when available. Setting the environment variable
``TSVISTA_DISABLE_NUMBA=1`` (or a failed numba import) selects the pure-numpy
fallback path, which runs the identical code uncompiled, so both paths
produce bit-identical results. ``benchmarks/bench_kernels.py`` compares the
two paths.
"""

import os

import numpy as np

_DISABLED = os.environ.get("TSVISTA_DISABLE_NUMBA", "0") not in ("0", "", "false", "False")

USING_NUMBA = False
if not _DISABLED:
    try:
        import numba

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False


def _jit(func):
    if not USING_NUMBA:
        return func
    try:
        return numba.njit(cache=True)(func)
    except RuntimeError:
        # cache locator unavailable (e.g. zipped install); compile uncached
        return numba.njit(cache=False)(func)


def _resample_linear_impl(values, n_out):
    """Linearly re-interpolate a 1-D series onto n_out uniform positions."""
    n_in = values.shape[0]
    out = np.empty(n_out, np.float64)
    if n_in == 1 or n_out == 1:
        for i in range(n_out):
            out[i] = values[0]
        return out
    scale = (n_in - 1.0) / (n_out - 1.0)
    for i in range(n_out):
        pos = i * scale
        j = int(pos)
        if j >= n_in - 1:
            out[i] = values[n_in - 1]
        else:
            frac = pos - j
            out[i] = values[j] + frac * (values[j + 1] - values[j])
    return out


def _interp_at_impl(query, xp, fp):
    """Piecewise-linear interpolation of (xp, fp) at query points.

    xp must be strictly increasing; queries outside [xp[0], xp[-1]] clamp to
    the endpoint values (np.interp semantics).
    """
    n = xp.shape[0]
    out = np.empty(query.shape[0], np.float64)
    for i in range(query.shape[0]):
        x = query[i]
        if x <= xp[0]:
            out[i] = fp[0]
        elif x >= xp[n - 1]:
            out[i] = fp[n - 1]
        else:
            lo = 0
            hi = n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if xp[mid] <= x:
                    lo = mid
                else:
                    hi = mid
            t = (x - xp[lo]) / (xp[lo + 1] - xp[lo])
            out[i] = fp[lo] + t * (fp[lo + 1] - fp[lo])
    return out


def _draw_polyline_impl(pixels, oy, ox, size, xs, ys, r, g, b):
    """Connect integer points with straight segments inside one panel.

    Segments are sampled per column and per row with round-to-nearest-even,
    which keeps the drawing symmetric under vertical flips of the input.
    Coordinates are panel-local; (oy, ox) is the panel origin in the image
    and drawing is clipped to the size x size panel.
    """
    n = xs.shape[0]
    for k in range(n):
        x = xs[k]
        y = ys[k]
        if 0 <= x < size and 0 <= y < size:
            pixels[oy + y, ox + x, 0] = r
            pixels[oy + y, ox + x, 1] = g
            pixels[oy + y, ox + x, 2] = b
    for k in range(n - 1):
        x0 = xs[k]
        y0 = ys[k]
        x1 = xs[k + 1]
        y1 = ys[k + 1]
        dx = x1 - x0
        dy = y1 - y0
        if dx < 0:
            sx = -1
        else:
            sx = 1
        for step in range(1, abs(dx)):
            x = x0 + sx * step
            y = int(np.rint(y0 + (x - x0) / dx * dy))
            if 0 <= x < size and 0 <= y < size:
                pixels[oy + y, ox + x, 0] = r
                pixels[oy + y, ox + x, 1] = g
                pixels[oy + y, ox + x, 2] = b
        if dy < 0:
            sy = -1
        else:
            sy = 1
        for step in range(1, abs(dy)):
            y = y0 + sy * step
            x = int(np.rint(x0 + (y - y0) / dy * dx))
            if 0 <= x < size and 0 <= y < size:
                pixels[oy + y, ox + x, 0] = r
                pixels[oy + y, ox + x, 1] = g
                pixels[oy + y, ox + x, 2] = b
    return pixels


def _stamp_markers_impl(pixels, oy, ox, size, xs, ys, r, g, b):
    """Stamp a five-pixel plus glyph at each point, clipped to the panel."""
    n = xs.shape[0]
    for k in range(n):
        x = xs[k]
        y = ys[k]
        for j in range(5):
            if j == 0:
                px, py = x, y
            elif j == 1:
                px, py = x - 1, y
            elif j == 2:
                px, py = x + 1, y
            elif j == 3:
                px, py = x, y - 1
            else:
                px, py = x, y + 1
            if 0 <= px < size and 0 <= py < size:
                pixels[oy + py, ox + px, 0] = r
                pixels[oy + py, ox + px, 1] = g
                pixels[oy + py, ox + px, 2] = b
    return pixels


resample_linear = _jit(_resample_linear_impl)
interp_at = _jit(_interp_at_impl)
draw_polyline = _jit(_draw_polyline_impl)
stamp_markers = _jit(_stamp_markers_impl)

# uncompiled references, used by the kernel benchmark and equivalence tests
PY_IMPLS = {
    "resample_linear": _resample_linear_impl,
    "interp_at": _interp_at_impl,
    "draw_polyline": _draw_polyline_impl,
    "stamp_markers": _stamp_markers_impl,
}
