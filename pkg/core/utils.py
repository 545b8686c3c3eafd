import hashlib
import json

import numpy as np
from django.conf import settings


def get_setting(name, default):
    """Read a WAVESTAB_* setting, falling back when Django is not configured"""
    if not settings.configured:
        return default
    return getattr(settings, name, default)


def format_float(value, digits=12):
    """Fixed-precision float text so repeated runs give identical bytes"""
    value = float(value)
    if value == 0.0:
        return "0"
    if not np.isfinite(value):
        return str(value)
    return f"{value:.{digits}e}"


def to_builtin(value):
    """Convert numpy scalars/arrays nested in dicts and lists to JSON-ready types"""
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not np.isfinite(value):
            return None
        return float(format_float(value))
    if isinstance(value, (complex, np.complexfloating)):
        return [to_builtin(value.real), to_builtin(value.imag)]
    return value


def stable_json(payload):
    """Serialize with sorted keys and rounded floats"""
    return json.dumps(to_builtin(payload), indent=2, sort_keys=True) + "\n"


def config_digest(payload):
    """Short digest of a run config, used to name output folders"""
    return hashlib.sha256(stable_json(payload).encode()).hexdigest()[:12]
