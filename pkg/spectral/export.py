"""Row and plot-coordinate builders for spectrum artifacts."""
import numpy as np

from core.utils import format_float

from .closed_form import pde_spectrum

SPECTRUM_HEADER = ["index", "re", "im", "provenance", "residual", "retained"]
PDE_HEADER = ["k", "re", "im"]


def spectrum_rows(spectrum, retained=None):
    """One row per eigenpair; `retained` is a boolean mask aligned with spectrum.pairs"""
    rows = []
    for index, pair in enumerate(spectrum.pairs):
        flag = "" if retained is None else int(bool(retained[index]))
        rows.append([
            index,
            format_float(pair.value.real),
            format_float(pair.value.imag),
            pair.provenance.value,
            format_float(pair.residual) if np.isfinite(pair.residual) else "",
            flag,
        ])
    return rows


def pde_overlay(params, max_imag):
    """PDE eigenvalues with 0 <= Im <= max_imag; empty when xi >= c"""
    if params.xi >= params.c:
        return np.array([], dtype=complex)
    count = int(np.floor(max_imag * params.L / (np.pi * params.c) - 0.5)) + 1
    values = pde_spectrum(params, range(max(count, 0)))
    return np.concatenate([values, np.conj(values)])


def pde_rows(values):
    return [[k, format_float(value.real), format_float(value.imag)] for k, value in enumerate(values)]


def scatter_points(values, bounds, width, height, margin=40):
    """Map complex values to SVG pixel coordinates inside a fixed viewport"""
    (re_min, re_max), (im_min, im_max) = bounds
    re_span = re_max - re_min or 1.0
    im_span = im_max - im_min or 1.0
    values = np.asarray(values, dtype=complex)
    x = margin + (values.real - re_min) / re_span * (width - 2 * margin)
    y = height - margin - (values.imag - im_min) / im_span * (height - 2 * margin)
    return [{"x": f"{px:.2f}", "y": f"{py:.2f}"} for px, py in zip(x, y)]


def plot_bounds(*groups):
    """Common real/imaginary ranges with a little padding"""
    values = np.concatenate([np.asarray(group, dtype=complex) for group in groups if len(group)])
    re_min, re_max = min(values.real.min(), 0.0), max(values.real.max(), 0.0)
    im_min, im_max = values.imag.min(), values.imag.max()
    pad_re = 0.05 * (re_max - re_min or 1.0)
    pad_im = 0.05 * (im_max - im_min or 1.0)
    return (re_min - pad_re, re_max + pad_re), (im_min - pad_im, im_max + pad_im)
