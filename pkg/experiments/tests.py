import csv
import json
import tempfile
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings
from rest_framework import serializers

from core.exceptions import ConsistencyError, ParameterError
from semidiscrete.params import Mesh, Scheme

from .artifacts import staged_output, validate_summary
from .config import ExperimentConfig, list_presets, load_raw_config
from .initial_conditions import build_initial_state, packet_state, scale_band, sine_band
from .runners import execute
from .serializers import ExperimentConfigSerializer

SMALL_RUN = {
    "scheme": "FD",
    "N": 10,
    "xi": 0.9,
    "filter": {"mode": "pair_count", "value": 4},
    "ic": {"kind": "sine_band", "k_min": 1, "k_max": 10, "amplitude": 0.001},
    "T": 2.0,
    "dt": 0.01,
}


def _read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, payload, name="run.json"):
        path = self.tmp / name
        path.write_text(json.dumps(payload))
        return str(path)

    def run_command(self, verb, payload=None, preset=None, out="out", table_format="csv"):
        options = {"out_dir": str(self.tmp / out), "table_format": table_format, "stdout": open("/dev/null", "w")}
        if payload is not None:
            options["config"] = self.write_config(payload, f"{out}.json")
        if preset is not None:
            options["preset"] = preset
        try:
            call_command(verb, **options)
        finally:
            options["stdout"].close()
        return self.tmp / out


class SerializerTests(SimpleTestCase):
    def validate(self, payload, command="simulate"):
        serializer = ExperimentConfigSerializer(data=payload, context={"command": command})
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    def test_defaults(self):
        data = self.validate({"scheme": "FEM", "N": 30})
        self.assertEqual(data["c"], 1.0)
        self.assertIsNone(data["filter"])
        self.assertEqual(data["ic"]["kind"], "sine_band")
        self.assertEqual((data["ic"]["k_min"], data["ic"]["k_max"]), (20, 30))
        self.assertFalse(data["outputs"]["timing"])

    def test_unknown_fields_are_rejected(self):
        with self.assertRaises(serializers.ValidationError):
            self.validate({"scheme": "FD", "N": 30, "gain": 0.9})
        with self.assertRaises(serializers.ValidationError):
            self.validate({"scheme": "FD", "N": 30, "ic": {"kind": "mode", "k": 2, "phase": 1}})

    def test_module_preconditions(self):
        for payload in (
            {"scheme": "FD", "N": 1},
            {"scheme": "FD", "N": 30, "c": -1.0},
            {"scheme": "FD", "N": 30, "xi": -0.1},
            {"scheme": "FD", "N": 30, "filter": {"mode": "gamma", "value": 1.5}},
            {"scheme": "FD", "N": 30, "filter": {"mode": "pair_count", "value": 32}},
            {"scheme": "FD", "N": 30, "integrator": "rk4", "dt": 0.01},
            {"scheme": "FD", "N": 30, "ic": {"kind": "mode", "k": 40}},
            {"scheme": "FD", "N": 30, "ic": {"kind": "file", "path": "/nonexistent/ic.json"}},
            {"scheme": "SEM", "N": 30},
        ):
            with self.assertRaises(serializers.ValidationError, msg=payload):
                self.validate(payload)

    def test_observability_horizon_and_default_data(self):
        data = self.validate({"scheme": "FD", "N": 20, "T": 3.0}, command="observability")
        self.assertEqual(data["ic"]["kind"], "top_mode")
        self.assertEqual(data["N_list"], [20])
        with self.assertRaises(serializers.ValidationError):
            self.validate({"scheme": "FD", "N": 20, "T": 2.0}, command="observability")
        fem = self.validate({"scheme": "FEM", "N": 20, "T": 2.5}, command="observability")
        self.assertEqual(fem["ic"]["kind"], "packet")

    def test_packet_bounds(self):
        self.validate({"scheme": "FEM", "N": 20, "ic": {"kind": "packet", "center": 0.5, "width": 0.05}})
        for ic in ({"kind": "packet", "center": 1.0}, {"kind": "packet", "width": 0.0}):
            with self.assertRaises(serializers.ValidationError, msg=ic):
                self.validate({"scheme": "FEM", "N": 20, "ic": ic})

    def test_decay_grids(self):
        base = {"scheme": "FD", "N": 10, "xi": 0.9}
        self.validate({**base, "xi_grid": [0.5], "gamma_grid": [0.5]}, command="decay-report")
        for grids in ({"xi_grid": [1.0], "gamma_grid": [0.5]}, {"xi_grid": [0.5], "gamma_grid": [1.0]},
                      {"gamma_grid": [0.5]}, {"xi_grid": [], "gamma_grid": [0.5]}):
            with self.assertRaises(serializers.ValidationError, msg=grids):
                self.validate({**base, **grids}, command="decay-report")


class ConfigTests(SimpleTestCase):
    def test_presets_are_shipped(self):
        for name in ("desk-fd", "desk-fem", "desk-unfiltered", "desk-unfiltered-fem", "observability-fd",
                     "observability-fem", "decay-report"):
            self.assertIn(name, list_presets())

    def test_every_preset_validates(self):
        commands = {
            "observability-fd": "observability",
            "observability-fem": "observability",
            "decay-report": "decay-report",
        }
        for name in list_presets():
            config = ExperimentConfig.load(commands.get(name, "simulate"), preset=name)
            self.assertEqual(config.mesh.order, config["N"] + 1)

    def test_config_file_overrides_preset(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "override.json"
            path.write_text(json.dumps({"N": 12, "scheme": "FEM"}))
            payload = load_raw_config(config=path, preset="desk-fd")
        self.assertEqual((payload["N"], payload["scheme"], payload["xi"]), (12, "FEM", 0.9))

    def test_missing_sources(self):
        for kwargs in ({}, {"preset": "no-such-preset"}, {"config": "/nonexistent/run.json"}):
            with self.assertRaises(ParameterError):
                load_raw_config(**kwargs)

    def test_pair_count_filter_spec(self):
        config = ExperimentConfig.load("simulate", preset="desk-fd")
        with self.assertRaises(ParameterError):
            config.filter_spec()


class InitialConditionTests(SimpleTestCase):
    def test_desk_band(self):
        mesh = Mesh(N=30)
        s = sine_band(mesh)
        x = mesh.nodes[1:]
        expected = 1e-3 * sum(np.sin(i * np.pi * x) for i in range(20, 31))
        np.testing.assert_allclose(s.v, expected, atol=1e-15)
        self.assertEqual(np.abs(s.vdot).max(), 0.0)

    def test_packet_alternates_under_a_gaussian(self):
        mesh = Mesh(N=40)
        s = build_initial_state({"kind": "packet", "center": 0.4, "width": 0.1}, Scheme.FEM, None, mesh)
        np.testing.assert_array_equal(s.v, packet_state(mesh, center=0.4, width=0.1).v)
        self.assertTrue(np.all(np.sign(s.v[:-1]) == -np.sign(s.v[1:])))
        self.assertEqual(int(np.argmax(np.abs(s.v))), 15)
        self.assertLess(abs(s.v[-1]), 1e-5)
        self.assertEqual(np.abs(s.vdot).max(), 0.0)

    def test_band_scaling(self):
        self.assertEqual(scale_band(20, 30, 30), (20, 30))
        self.assertEqual(scale_band(20, 30, 123), (80, 120))

    def test_file_and_random_kinds(self):
        mesh = Mesh(N=4)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "ic.json"
            path.write_text(json.dumps({"v": [1, 2, 3, 4, 5]}))
            s = build_initial_state({"kind": "file", "path": str(path)}, Scheme.FD, None, mesh)
        np.testing.assert_array_equal(s.v, [1, 2, 3, 4, 5])
        first = build_initial_state({"kind": "random"}, Scheme.FD, None, mesh, seed=3)
        second = build_initial_state({"kind": "random"}, Scheme.FD, None, mesh, seed=3)
        np.testing.assert_array_equal(first.as_vector(), second.as_vector())


class ArtifactTests(SimpleTestCase):
    def test_failed_run_leaves_no_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "run"
            with self.assertRaises(RuntimeError):
                with staged_output(out) as writer:
                    writer.table("rows", ["a"], [[1]])
                    raise RuntimeError("boom")
            self.assertFalse(out.exists())
            self.assertEqual(list(Path(tmp).iterdir()), [])

    def test_summary_schema(self):
        with self.assertRaises(ConsistencyError):
            validate_summary({"command": "simulate"})
        with self.assertRaises(ConsistencyError):
            validate_summary({"command": "plot", "config": {}, "results": {}, "artifacts": []})


class SimulateCommandTests(CommandTestCase):
    def test_artifacts(self):
        out = self.run_command("simulate", SMALL_RUN)
        self.assertEqual(sorted(path.name for path in out.iterdir()), ["energy.csv", "energy.svg", "summary.json"])
        rows = _read_csv(out / "energy.csv")
        self.assertEqual(list(rows[0]), ["t", "E", "v_tip", "vdot_tip", "lyapunov"])
        self.assertEqual(len(rows), 201)
        summary = json.loads((out / "summary.json").read_text())
        results = summary["results"]
        self.assertEqual(results["retained_modes"], 8)
        self.assertGreaterEqual(results["sigma_fit"], results["prediction"]["sigma"])
        self.assertTrue(results["envelope_holds"])
        self.assertNotIn("wall_time", summary)
        self.assertIn("<polyline", (out / "energy.svg").read_text())

    def test_outputs_are_byte_identical(self):
        first = self.run_command("simulate", SMALL_RUN, out="first")
        second = self.run_command("simulate", SMALL_RUN, out="second")
        for name in ("energy.csv", "energy.svg", "summary.json"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def test_unit_gamma_matches_disabled_filter(self):
        identity = self.run_command("simulate", {**SMALL_RUN, "filter": {"mode": "gamma", "value": 1.0}}, out="g1")
        disabled = self.run_command("simulate", {**SMALL_RUN, "filter": None}, out="none")
        self.assertEqual((identity / "energy.csv").read_bytes(), (disabled / "energy.csv").read_bytes())

    def test_timing_is_opt_in(self):
        out = self.run_command("simulate", {**SMALL_RUN, "outputs": {"timing": True, "svg": False}})
        summary = json.loads((out / "summary.json").read_text())
        self.assertGreaterEqual(summary["wall_time"], 0.0)
        self.assertFalse((out / "energy.svg").exists())

    def test_unfiltered_energy_decays_far_slower(self):
        remaining = {}
        for preset in ("desk-fd", "desk-unfiltered"):
            config = load_raw_config(preset=preset)
            out = self.run_command("simulate", {**config, "outputs": {"svg": False}}, out=preset)
            rows = _read_csv(out / "energy.csv")
            remaining[preset] = float(rows[-1]["E"]) / float(rows[0]["E"])
        self.assertGreater(remaining["desk-unfiltered"], 100 * remaining["desk-fd"])

    def test_invalid_config_exits_with_status_two(self):
        with self.assertRaises(CommandError) as caught:
            self.run_command("simulate", {**SMALL_RUN, "N": 1})
        self.assertEqual(caught.exception.returncode, 2)
        with self.assertRaises(CommandError) as caught:
            call_command("simulate", out_dir=str(self.tmp / "x"))
        self.assertEqual(caught.exception.returncode, 2)

    def test_numerical_failure_exits_with_status_three(self):
        with override_settings(WAVESTAB_CONDITION_LIMIT=1.0):
            with self.assertRaises(CommandError) as caught:
                self.run_command("simulate", SMALL_RUN)
        self.assertEqual(caught.exception.returncode, 3)
        self.assertFalse((self.tmp / "out").exists())

    def test_failure_after_staging_writes_nothing(self):
        schema = self.tmp / "strict.schema.json"
        schema.write_text(json.dumps({"type": "object", "required": ["never"]}))
        with override_settings(WAVESTAB_SUMMARY_SCHEMA=schema):
            with self.assertRaises(CommandError) as caught:
                self.run_command("simulate", SMALL_RUN)
        self.assertEqual(caught.exception.returncode, 3)
        self.assertFalse((self.tmp / "out" / "energy.csv").exists())


class DeterminismTests(CommandTestCase):
    def random_payload(self, rng):
        xi = 0.0 if rng.random() < 0.2 else round(float(rng.uniform(0.05, 0.95)), 6)
        return {
            "scheme": str(rng.choice(["FD", "FEM"])),
            "N": int(rng.integers(2, 9)),
            "xi": xi,
            "filter": None if xi == 0 else {"mode": "gamma", "value": round(float(rng.uniform(0.3, 1.0)), 6)},
            "ic": {"kind": "random", "amplitude": 0.01},
            "seed": int(rng.integers(0, 2 ** 31)),
            "T": 1.0,
            "dt": 0.05,
        }

    def test_random_configs_reproduce_byte_for_byte(self):
        rng = np.random.default_rng(2024)
        for case in range(100):
            payload = self.random_payload(rng)
            table_format = str(rng.choice(["csv", "json"]))
            runs = [self.tmp / f"{case}-{label}" for label in ("first", "second")]
            for out in runs:
                execute(ExperimentConfig.validate(payload, "simulate"), out, table_format)
            names = sorted(path.name for path in runs[0].iterdir())
            self.assertEqual(names, sorted(path.name for path in runs[1].iterdir()))
            self.assertEqual(names, sorted(["energy.svg", "summary.json", f"energy.{table_format}"]))
            for name in names:
                self.assertEqual((runs[0] / name).read_bytes(), (runs[1] / name).read_bytes(), (payload, name))


class SpectrumCommandTests(CommandTestCase):
    def test_desk_preset(self):
        out = self.run_command("spectrum", preset="desk-fd")
        rows = _read_csv(out / "spectrum.csv")
        self.assertEqual(len(rows), 62)
        self.assertEqual(sum(int(row["retained"]) for row in rows), 20)
        self.assertTrue(all(float(row["re"]) < 0 for row in rows))
        roots = _read_csv(out / "spectrum-polynomial-root.csv")
        self.assertEqual(len(roots), 62)
        self.assertTrue((out / "pde.csv").exists())
        summary = json.loads((out / "summary.json").read_text())
        self.assertEqual(summary["results"]["eigenvalues"], 62)
        self.assertEqual(summary["results"]["interior_eigenvalues"], 60)
        self.assertEqual(summary["results"]["filter"]["filtered"], 42)
        self.assertEqual(summary["results"]["roots"]["count"], 31)

    def test_control_free_spectrum_is_imaginary(self):
        out = self.run_command("spectrum", {"scheme": "FEM", "N": 8, "xi": 0.0})
        rows = _read_csv(out / "spectrum.csv")
        self.assertLess(max(abs(float(row["re"])) for row in rows), 1e-9)
        self.assertTrue((out / "spectrum-closed-form.csv").exists())

    def test_schemes_share_the_summary_schema(self):
        fd = json.loads((self.run_command("spectrum", {"scheme": "FD", "N": 8, "xi": 0.5}, out="fd")
                         / "summary.json").read_text())
        fem = json.loads((self.run_command("spectrum", {"scheme": "FEM", "N": 8, "xi": 0.5}, out="fem")
                          / "summary.json").read_text())
        self.assertEqual(set(fd), set(fem))

    def test_json_tables(self):
        out = self.run_command("spectrum", {"scheme": "FD", "N": 6, "xi": 0.5}, table_format="json")
        records = json.loads((out / "spectrum.json").read_text())
        self.assertEqual(len(records), 14)
        self.assertEqual(set(records[0]), {"index", "re", "im", "provenance", "residual", "retained"})


class GridCommandTests(CommandTestCase):
    def test_observability_table(self):
        payload = {**load_raw_config(preset="observability-fd"), "N_list": [10, 20, 40]}
        out = self.run_command("observability", payload)
        rows = _read_csv(out / "observability.csv")
        self.assertEqual([int(row["N"]) for row in rows], [10, 20, 40])
        ratios = [float(row["ratio"]) for row in rows]
        self.assertTrue(ratios[0] < ratios[1] < ratios[2])
        self.assertTrue(all(float(row["limit"]) == 4.0 for row in rows))
        self.assertTrue(json.loads((out / "summary.json").read_text())["results"]["increasing"])

    def test_fem_packet_ratios_increase(self):
        out = self.run_command("observability", preset="observability-fem")
        rows = _read_csv(out / "observability.csv")
        self.assertEqual([int(row["N"]) for row in rows], [20, 40, 80])
        ratios = [float(row["ratio"]) for row in rows]
        self.assertTrue(ratios[0] < ratios[1] < ratios[2], ratios)
        self.assertTrue(all(float(row["limit"]) == 12.0 for row in rows))
        self.assertTrue(json.loads((out / "summary.json").read_text())["results"]["increasing"])

    def test_decay_report(self):
        payload = {**load_raw_config(preset="decay-report"), "N": 10, "xi_grid": [0.9], "gamma_grid": [0.25, 0.5],
                   "T": 5.0, "dt": 0.01}
        out = self.run_command("decay-report", payload)
        rows = _read_csv(out / "decay-report.csv")
        kinds = [row["kind"] for row in rows]
        self.assertEqual(kinds.count("discrete"), 2)
        self.assertEqual(kinds.count("pde"), 1)
        self.assertEqual(kinds.count("optimal"), 2)
        self.assertEqual(kinds.count("reference"), 2)
        discrete = [row for row in rows if row["kind"] == "discrete"]
        self.assertGreater(float(discrete[0]["sigma_pred"]), float(discrete[1]["sigma_pred"]))
        for row in discrete:
            self.assertLessEqual(float(row["envelope_ratio"]), 1.0)
        references = {row["scheme"]: row for row in rows if row["kind"] == "reference"}
        self.assertEqual(float(references["FEM"]["reference_sigma"]), 0.2205)
        self.assertEqual(float(references["FD"]["reference_sigma"]), 0.1864)
