import json

import numpy as np
from django.test import SimpleTestCase

from .exceptions import (
    ConditioningError,
    DomainError,
    FilterTooAggressive,
    NumericalFailure,
    ParameterError,
    SizeError,
    StepSizeError,
)
from .utils import config_digest, format_float, stable_json, to_builtin
from .validators import (
    validate_delta,
    validate_gamma,
    validate_node_count,
    validate_positive,
    validate_sub_characteristic,
)


class ExceptionTests(SimpleTestCase):
    def test_exit_status(self):
        for error in (ParameterError, SizeError, DomainError, FilterTooAggressive):
            self.assertEqual(error("x").exit_status, 2)
        for error in (ConditioningError, NumericalFailure, StepSizeError):
            self.assertEqual(error("x").exit_status, 3)

    def test_context_in_message(self):
        error = SizeError("mesh too small", N=1)
        self.assertEqual(str(error), "mesh too small (N=1)")
        self.assertIsInstance(error, ValueError)

    def test_partial_result(self):
        error = NumericalFailure("eig failed", partial=[1, 2])
        self.assertEqual(error.partial, [1, 2])


class ValidatorTests(SimpleTestCase):
    def test_positive(self):
        self.assertEqual(validate_positive(2.0, "c"), 2.0)
        for value in (0.0, -1.0, float("inf"), float("nan")):
            with self.assertRaises(ParameterError):
                validate_positive(value, "c")

    def test_node_count(self):
        self.assertEqual(validate_node_count(2), 2)
        for value in (1, 0, 2.5):
            with self.assertRaises(SizeError):
                validate_node_count(value)

    def test_sub_characteristic(self):
        validate_sub_characteristic(0.9, 1.0)
        validate_sub_characteristic(0.0, 1.0, allow_zero=True)
        validate_sub_characteristic(1.0, 1.0, allow_equal=True)
        for xi in (0.0, 1.0, 1.5):
            with self.assertRaises(DomainError):
                validate_sub_characteristic(xi, 1.0)

    def test_gamma_and_delta(self):
        self.assertEqual(validate_gamma(1.0), 1.0)
        with self.assertRaises(ParameterError):
            validate_gamma(0.0)
        self.assertEqual(validate_delta(0.5, 1.0, 1.0), 0.5)
        with self.assertRaises(ParameterError):
            validate_delta(2.0, 1.0, 1.0)


class UtilsTests(SimpleTestCase):
    def test_format_float(self):
        self.assertEqual(format_float(0.0), "0")
        self.assertEqual(format_float(0.25), "2.500000000000e-01")

    def test_to_builtin(self):
        payload = to_builtin({"a": np.float64(1 / 3), "b": np.arange(2), "z": np.complex128(1 + 2j), "n": np.nan})
        self.assertEqual(payload, {"a": 0.3333333333333, "b": [0, 1], "z": [1.0, 2.0], "n": None})

    def test_stable_json_is_order_independent(self):
        first = stable_json({"b": 1, "a": [0.1, 2]})
        second = stable_json({"a": [0.1, 2], "b": 1})
        self.assertEqual(first, second)
        self.assertEqual(json.loads(first), {"a": [0.1, 2], "b": 1})
        self.assertEqual(config_digest({"b": 1, "a": 2}), config_digest({"a": 2, "b": 1}))
