"""Run configuration: JSON files and named presets, validated into ExperimentConfig."""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from core.exceptions import ParameterError
from core.utils import config_digest, get_setting
from filtering.basis import FilterSpec, gamma_for_pair_count
from semidiscrete.params import Mesh, PhysicalParams, Scheme

from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).resolve().parent / "presets"


def presets_dir():
    return Path(get_setting("WAVESTAB_PRESETS_DIR", PRESETS_DIR))


def list_presets():
    return sorted(path.stem for path in presets_dir().glob("*.json"))


def _read_json(path):
    path = Path(path)
    if not path.is_file():
        raise ParameterError("config file not found", path=str(path))
    try:
        with path.open() as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as e:
        raise ParameterError(f"config file is not valid JSON: {e.msg}", path=str(path), line=e.lineno)
    if not isinstance(payload, dict):
        raise ParameterError("config must be a JSON object", path=str(path))
    return payload


def load_raw_config(config=None, preset=None):
    """
    The JSON document for a run. A preset supplies the base document and
    keys from --config override it.
    """
    if config is None and preset is None:
        raise ParameterError("pass --config or --preset", presets=", ".join(list_presets()))
    payload = {}
    if preset is not None:
        path = presets_dir() / f"{preset}.json"
        if not path.is_file():
            raise ParameterError("unknown preset", preset=preset, presets=", ".join(list_presets()))
        payload.update(_read_json(path))
    if config is not None:
        payload.update(_read_json(config))
    return payload


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated run configuration"""
    command: str
    data: dict = field(repr=False)

    @classmethod
    def validate(cls, payload, command):
        """Raises rest_framework ValidationError on any invalid or unknown field"""
        serializer = ExperimentConfigSerializer(data=payload, context={"command": command})
        serializer.is_valid(raise_exception=True)
        return cls(command=command, data=_plain(serializer.validated_data))

    @classmethod
    def load(cls, command, config=None, preset=None):
        return cls.validate(load_raw_config(config, preset), command)

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    @property
    def scheme(self):
        return Scheme.parse(self.data["scheme"])

    @property
    def params(self):
        return PhysicalParams(c=self.data["c"], L=self.data["L"], xi=self.data["xi"])

    @property
    def mesh(self):
        return Mesh(N=self.data["N"], L=self.data["L"])

    def mesh_for(self, N):
        return Mesh(N=N, L=self.data["L"])

    @property
    def outputs(self):
        return self.data["outputs"]

    @property
    def digest(self):
        return config_digest({"command": self.command, **self.data})

    def with_values(self, **changes):
        return ExperimentConfig(command=self.command, data={**self.data, **changes})

    def filter_spec(self, spectrum=None, scheme=None):
        """FilterSpec for the configured filter; pair counts need the spectrum"""
        settings = self.data["filter"]
        if settings is None:
            return None
        scheme = scheme or self.scheme
        if settings["mode"] == "gamma":
            gamma = settings["value"]
        else:
            if spectrum is None:
                raise ParameterError("a pair-count filter needs the spectrum")
            gamma = gamma_for_pair_count(spectrum, int(settings["value"]))
        return FilterSpec.for_params(gamma, scheme, self.params, basis=settings["basis"])


def _plain(value):
    """OrderedDicts from DRF to plain dicts"""
    if isinstance(value, dict):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_plain(item) for item in value]
    return value
