"""Initial data: sine bands, undamped modes, top-frequency packets, file-supplied vectors and seeded random states."""
import json
import logging
from pathlib import Path

import numpy as np

from core.exceptions import ParameterError, SizeError
from semidiscrete.params import State
from spectral.closed_form import undamped_mode_shape

logger = logging.getLogger(__name__)

REFERENCE_N = 30
DESK_BAND = {"k_min": 20, "k_max": 30, "amplitude": 1e-3}
PACKET = {"center": 0.4, "width": 0.1}


def scale_band(k_min, k_max, N, reference_N=REFERENCE_N):
    """Map a wavenumber band proportionally from the reference mesh onto N"""
    factor = (N + 1) / (reference_N + 1)
    return max(1, int(round(k_min * factor))), max(1, int(round(k_max * factor)))


def sine_band(mesh, k_min=20, k_max=30, amplitude=1e-3, scale_to_mesh=False):
    """v_j = amplitude * sum_{i=k_min}^{k_max} sin(i pi x_j / L), at rest"""
    if k_min > k_max or k_min < 1:
        raise ParameterError("sine band needs 1 <= k_min <= k_max", k_min=k_min, k_max=k_max)
    if scale_to_mesh:
        k_min, k_max = scale_band(k_min, k_max, mesh.N)
    x = mesh.nodes[1:]
    wavenumbers = np.arange(k_min, k_max + 1)
    v = amplitude * np.sin(np.outer(x, wavenumbers) * np.pi / mesh.L).sum(axis=1)
    return State(v)


def mode_state(scheme, params, mesh, k, amplitude=1.0):
    """Undamped mode k (1 = fundamental) at rest"""
    return State(amplitude * undamped_mode_shape(scheme, params, mesh, k))


def packet_state(mesh, center=PACKET["center"], width=PACKET["width"], amplitude=1.0):
    """
    Gaussian-windowed (-1)^j packet at rest. Its content sits at the top of the
    band, where the group velocity vanishes, so little of it reaches x = L in
    finite time. center and width are fractions of L.
    """
    if not 0 < center < 1 or width <= 0:
        raise ParameterError("packet needs 0 < center < 1 and width > 0", center=center, width=width)
    x = mesh.nodes[1:]
    sign = (-1.0) ** np.arange(1, mesh.order + 1)
    envelope = np.exp(-0.5 * ((x - center * mesh.L) / (width * mesh.L)) ** 2)
    return State(amplitude * sign * envelope)


def file_state(path, order):
    """JSON document {"v": [...], "vdot": [...]}; vdot defaults to zero"""
    path = Path(path)
    if not path.exists():
        raise ParameterError("initial-condition file not found", path=str(path))
    with path.open() as handle:
        payload = json.load(handle)
    if "v" not in payload:
        raise ParameterError("initial-condition file needs a 'v' array", path=str(path))
    state = State(payload["v"], payload.get("vdot"))
    if state.order != order:
        raise SizeError("initial-condition length does not match the mesh", expected=order, got=state.order)
    return state


def random_state(order, seed, amplitude=1.0):
    rng = np.random.default_rng(seed)
    return State(amplitude * rng.standard_normal(order), amplitude * rng.standard_normal(order))


def build_initial_state(ic, scheme, params, mesh, seed=0):
    """Dispatch on ic["kind"]"""
    kind = ic.get("kind", "sine_band")
    if kind == "sine_band":
        return sine_band(
            mesh,
            k_min=ic.get("k_min", DESK_BAND["k_min"]),
            k_max=ic.get("k_max", DESK_BAND["k_max"]),
            amplitude=ic.get("amplitude", DESK_BAND["amplitude"]),
            scale_to_mesh=ic.get("scale_to_mesh", False),
        )
    if kind == "mode":
        return mode_state(scheme, params, mesh, ic["k"], ic.get("amplitude", 1.0))
    if kind == "top_mode":
        return mode_state(scheme, params, mesh, mesh.order, ic.get("amplitude", 1.0))
    if kind == "packet":
        return packet_state(
            mesh,
            center=ic.get("center", PACKET["center"]),
            width=ic.get("width", PACKET["width"]),
            amplitude=ic.get("amplitude", 1.0),
        )
    if kind == "file":
        return file_state(ic["path"], mesh.order)
    if kind == "random":
        return random_state(mesh.order, seed, ic.get("amplitude", 1.0))
    raise ParameterError("unknown initial-condition kind", kind=kind)
