from pathlib import Path

from rest_framework import serializers

from core.exceptions import WaveStabError
from core.validators import validate_gamma, validate_sub_characteristic
from semidiscrete.params import Mesh, PhysicalParams, Scheme

COMMANDS = ("spectrum", "simulate", "observability", "decay-report")
INTEGRATORS = ("rk4", "modal-exact")
IC_KINDS = ("sine_band", "mode", "top_mode", "packet", "file", "random")


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare"""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown field."] for key in unknown})
        return super().to_internal_value(data)


class FilterSerializer(StrictSerializer):
    mode = serializers.ChoiceField(choices=("gamma", "pair_count"))
    value = serializers.FloatField()
    basis = serializers.ChoiceField(choices=("damped", "undamped"), default="damped")

    def validate(self, attrs):
        if attrs["mode"] == "gamma":
            try:
                validate_gamma(attrs["value"])
            except WaveStabError as e:
                raise serializers.ValidationError({"value": str(e)})
        elif attrs["value"] != int(attrs["value"]) or attrs["value"] < 1:
            raise serializers.ValidationError({"value": "Pair count must be a positive integer."})
        return attrs


class InitialConditionSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=IC_KINDS, default="sine_band")
    k_min = serializers.IntegerField(min_value=1, default=20)
    k_max = serializers.IntegerField(min_value=1, default=30)
    amplitude = serializers.FloatField(default=1e-3)
    scale_to_mesh = serializers.BooleanField(default=False)
    k = serializers.IntegerField(min_value=1, required=False)
    path = serializers.CharField(required=False)
    center = serializers.FloatField(required=False)
    width = serializers.FloatField(required=False)

    def validate(self, attrs):
        kind = attrs["kind"]
        if kind == "sine_band" and attrs["k_min"] > attrs["k_max"]:
            raise serializers.ValidationError({"k_max": "Band must satisfy k_min <= k_max."})
        if kind == "mode" and "k" not in attrs:
            raise serializers.ValidationError({"k": "Mode initial data needs k."})
        if kind == "packet":
            if not 0 < attrs.get("center", 0.4) < 1:
                raise serializers.ValidationError({"center": "Packet center must lie in (0, 1)."})
            if attrs.get("width", 0.1) <= 0:
                raise serializers.ValidationError({"width": "Packet width must be positive."})
        if kind == "file":
            if "path" not in attrs:
                raise serializers.ValidationError({"path": "File initial data needs a path."})
            if not Path(attrs["path"]).is_file():
                raise serializers.ValidationError({"path": f"No such file: {attrs['path']}"})
        return attrs


class OutputsSerializer(StrictSerializer):
    csv = serializers.BooleanField(default=True)
    json = serializers.BooleanField(default=True)
    svg = serializers.BooleanField(default=True)
    timing = serializers.BooleanField(default=False)


class ExperimentConfigSerializer(StrictSerializer):
    """
    One run configuration. Pass the verb as context["command"] so the
    verb-specific preconditions are checked too.
    """
    scheme = serializers.ChoiceField(choices=[scheme.value for scheme in Scheme])
    N = serializers.IntegerField(min_value=2)
    c = serializers.FloatField(default=1.0)
    L = serializers.FloatField(default=1.0)
    xi = serializers.FloatField(default=0.0)
    filter = FilterSerializer(required=False, allow_null=True, default=None)
    ic = InitialConditionSerializer(required=False)
    T = serializers.FloatField(default=20.0)
    dt = serializers.FloatField(required=False, allow_null=True, default=None)
    integrator = serializers.ChoiceField(choices=INTEGRATORS, default="modal-exact")
    outputs = OutputsSerializer(required=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    N_list = serializers.ListField(child=serializers.IntegerField(min_value=2), required=False, allow_empty=False)
    xi_grid = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    gamma_grid = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    obs = serializers.ChoiceField(choices=("boundary", "interior"), default="boundary")

    @property
    def command(self):
        return self.context.get("command")

    def validate(self, attrs):
        default_ic = {}
        if self.command == "observability":
            default_ic = {"kind": "packet" if attrs["scheme"] == Scheme.FEM.value else "top_mode"}
        attrs.setdefault("ic", InitialConditionSerializer().run_validation(default_ic))
        attrs.setdefault("outputs", OutputsSerializer().run_validation({}))
        try:
            params = PhysicalParams(c=attrs["c"], L=attrs["L"], xi=attrs["xi"])
            mesh = Mesh(N=attrs["N"], L=attrs["L"])
        except WaveStabError as e:
            raise serializers.ValidationError(str(e))
        if attrs["T"] <= 0:
            raise serializers.ValidationError({"T": "Horizon must be positive."})
        if attrs["dt"] is not None:
            self._validate_step(attrs, params, mesh)
        self._validate_ic(attrs, mesh)
        if attrs["filter"] and attrs["filter"]["mode"] == "pair_count" and attrs["filter"]["value"] > mesh.order:
            raise serializers.ValidationError({"filter": f"At most {mesh.order} pairs exist for N={mesh.N}."})

        if self.command == "observability":
            self._validate_observability(attrs, params)
        elif self.command == "decay-report":
            self._validate_decay_grids(attrs, params)
        elif self.command == "simulate" and attrs["filter"] and attrs["xi"] == 0:
            raise serializers.ValidationError({"filter": "Filtering needs a positive gain."})
        return attrs

    def _validate_step(self, attrs, params, mesh):
        dt = attrs["dt"]
        if dt <= 0:
            raise serializers.ValidationError({"dt": "Step must be positive."})
        limit = mesh.h / (5 * params.c)
        if attrs["integrator"] == "rk4" and dt > limit:
            raise serializers.ValidationError({"dt": f"RK4 needs dt <= h/(5c) = {limit:.3e}."})

    def _validate_ic(self, attrs, mesh):
        ic = attrs["ic"]
        if ic["kind"] == "mode" and ic["k"] > mesh.order and self.command != "observability":
            raise serializers.ValidationError({"ic": f"Mode index must lie in 1..{mesh.order}."})

    def _validate_observability(self, attrs, params):
        attrs.setdefault("N_list", [attrs["N"]])
        if attrs["T"] <= 2 * params.L / params.c:
            raise serializers.ValidationError({"T": f"Observation time must exceed 2L/c = {2 * params.L / params.c}."})
        if attrs["ic"]["kind"] == "mode" and attrs["ic"]["k"] > min(attrs["N_list"]) + 1:
            raise serializers.ValidationError({"ic": "Mode index exceeds the coarsest mesh."})

    def _validate_decay_grids(self, attrs, params):
        for name in ("xi_grid", "gamma_grid"):
            if not attrs.get(name):
                raise serializers.ValidationError({name: "Decay report needs a non-empty grid."})
        try:
            for xi in attrs["xi_grid"]:
                validate_sub_characteristic(xi, params.c)
        except WaveStabError as e:
            raise serializers.ValidationError({"xi_grid": str(e)})
        if any(not 0 < gamma < 1 for gamma in attrs["gamma_grid"]):
            raise serializers.ValidationError({"gamma_grid": "Every Gamma must lie in (0, 1)."})
