"""Expression compiler for problem files: accepted grammar and rejections."""

import numpy as np
import pytest

from daekit import ProblemFileError, compile_expression


def test_arithmetic_and_functions():
    fn = compile_expression("sin(t)*exp(t) + t^2 - 1/(t+2)")
    for t in (0.0, 0.5, 1.7, -0.3):
        want = np.sin(t) * np.exp(t) + t ** 2 - 1.0 / (t + 2.0)
        assert fn(t) == pytest.approx(want, abs=1e-14)


def test_power_operator_is_python_exponentiation():
    fn = compile_expression("t^3")
    assert fn(2.0) == 8.0
    assert compile_expression("2^t")(3.0) == 8.0


def test_multiple_variables():
    fn = compile_expression("t*s - cos(s)", ("t", "s"))
    assert fn(2.0, 0.0) == pytest.approx(-1.0)
    g = compile_expression("y1^2 + y2", ("t", "y1", "y2"))
    assert g(0.0, 3.0, 4.0) == pytest.approx(13.0)


def test_unary_signs_and_constants():
    assert compile_expression("-t + +1")(0.25) == pytest.approx(0.75)
    assert compile_expression("3.5")(9.9) == 3.5
    assert compile_expression(2)(0.3) == 2.0
    assert compile_expression(-1.25)(0.0) == -1.25


def test_source_is_recorded():
    fn = compile_expression("cos(t) * t")
    assert fn.source == "cos(t) * t"


@pytest.mark.parametrize("bad", [
    "__import__('os').system('true')",
    "t.real",
    "t < 1",
    "x",
    "tan(t)",
    "sin(t, t)",
    "'abc'",
    "t +",
    "abs(t)",
    "[1, 2]",
    "lambda: 1",
    "t if t else 0",
    "sin",
])
def test_rejected_expressions(bad):
    with pytest.raises(ProblemFileError):
        compile_expression(bad)


def test_unknown_variable_depends_on_declared_names():
    compile_expression("s", ("t", "s"))
    with pytest.raises(ProblemFileError):
        compile_expression("s", ("t",))
