"""Template contexts for the SVG figures (fixed viewport, no plotting library)."""
import numpy as np

from spectral.export import plot_bounds, scatter_points

WIDTH = 640
HEIGHT = 480
MARGIN = 40


def _axis_position(value, low, high, start, span):
    if not low <= value <= high:
        return None
    return f"{start + (value - low) / ((high - low) or 1.0) * span:.2f}"


def spectrum_figure(title, retained, filtered, pde=(), roots=()):
    """Eigenvalue scatter: retained and filtered discrete modes, root eigenvalues and the PDE overlay"""
    bounds = plot_bounds(retained, filtered, pde, roots)
    (re_min, re_max), (im_min, im_max) = bounds
    inner_w, inner_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    imag_axis = _axis_position(0.0, re_min, re_max, MARGIN, inner_w)
    real_axis = _axis_position(0.0, im_min, im_max, HEIGHT - MARGIN, -inner_h)

    def points(values):
        return scatter_points(values, bounds, WIDTH, HEIGHT, MARGIN) if len(values) else []

    return {
        "title": title,
        "width": WIDTH,
        "height": HEIGHT,
        "margin": MARGIN,
        "imag_axis": imag_axis,
        "real_axis": real_axis,
        "re_range": (f"{re_min:.3g}", f"{re_max:.3g}"),
        "im_range": (f"{im_min:.3g}", f"{im_max:.3g}"),
        "retained": points(retained),
        "filtered": points(filtered),
        "pde": points(pde),
        "roots": points(roots),
    }


def _polyline(times, values, t_range, y_range):
    (t_min, t_max), (y_min, y_max) = t_range, y_range
    x = MARGIN + (times - t_min) / ((t_max - t_min) or 1.0) * (WIDTH - 2 * MARGIN)
    y = HEIGHT - MARGIN - (values - y_min) / ((y_max - y_min) or 1.0) * (HEIGHT - 2 * MARGIN)
    return " ".join(f"{px:.2f},{py:.2f}" for px, py in zip(x, y))


def energy_figure(title, trace, envelope=None, max_points=2000):
    """log10 E(t), optionally with the predicted envelope M E(0) exp(-sigma t)"""
    stride = max(1, int(np.ceil(len(trace) / max_points)))
    times = trace.times[::stride]
    floor = np.finfo(float).tiny
    log_e = np.log10(np.maximum(trace.E[::stride], floor))
    curves = [log_e]
    if envelope is not None:
        log_env = np.log10(np.maximum(envelope[::stride], floor))
        curves.append(log_env)
    stacked = np.concatenate(curves)
    y_range = (float(stacked.min()), float(stacked.max()))
    t_range = (float(times[0]), float(times[-1]))
    return {
        "title": title,
        "width": WIDTH,
        "height": HEIGHT,
        "margin": MARGIN,
        "t_range": (f"{t_range[0]:.3g}", f"{t_range[1]:.3g}"),
        "y_range": (f"{y_range[0]:.3g}", f"{y_range[1]:.3g}"),
        "energy": _polyline(times, log_e, t_range, y_range),
        "envelope": _polyline(times, curves[1], t_range, y_range) if envelope is not None else "",
    }
