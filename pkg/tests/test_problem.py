"""
Tests for problem-file parsing and its error locations.
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from drift_strichartz.errors import HoermanderError, ProblemFileError
from drift_strichartz.problem import load_problem, parse_problem

KOLMOGOROV = """{
  "n": 2,
  "Q": [1, 0, 0, 0],
  "B": [[0, 0], [1, 0]],
  "label": "kolmogorov-m1",
  "grid": {"N": 64, "L": [8.0, 12.0]},
  "expected": {"D": 4}
}
"""


def test_parse_flat_and_nested_matrices():
    problem = parse_problem(KOLMOGOROV)
    Q, B = problem.matrices()
    assert_allclose(Q, np.diag([1.0, 0.0]))
    assert_allclose(B, [[0.0, 0.0], [1.0, 0.0]])
    spec = problem.to_spec()
    assert spec.label == "kolmogorov-m1"
    assert problem.expected == {"D": 4}


def test_grid_block():
    grid = parse_problem(KOLMOGOROV).to_grid()
    assert grid.N == 64
    assert grid.L == (8.0, 12.0)
    assert grid.margin == 0.25
    bare = parse_problem(json.dumps({"n": 1, "Q": [1], "B": [0]}))
    assert bare.to_grid() is None
    assert bare.label == "custom"


def test_syntax_error_has_line():
    text = '{\n  "n": 2,\n  "Q": [1, 0 0, 0]\n}'
    with pytest.raises(ProblemFileError) as info:
        parse_problem(text)
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_top_level_must_be_object():
    with pytest.raises(ProblemFileError) as info:
        parse_problem("[1, 2]")
    assert info.value.line == 1


def test_wrong_matrix_size_names_field_and_line():
    text = '{\n  "n": 2,\n  "Q": [1, 0, 0],\n  "B": [0, 0, 1, 0]\n}'
    with pytest.raises(ProblemFileError) as info:
        parse_problem(text)
    assert info.value.field == "Q"
    assert info.value.line == 3
    assert "expected 4 row-major entries" in str(info.value)


def test_non_numeric_entries():
    with pytest.raises(ProblemFileError) as info:
        parse_problem(json.dumps({"n": 1, "Q": ["one"], "B": [0]}))
    assert info.value.field == "Q"


@pytest.mark.parametrize("document, field", [
    ({"Q": [1], "B": [0]}, "n"),
    ({"n": 0, "Q": [1], "B": [0]}, "n"),
    ({"n": 1, "Q": [1], "B": [0], "drift": 3}, "drift"),
    ({"n": 1, "Q": [1], "B": [0], "grid": {"N": 8}}, "grid.N"),
])
def test_schema_errors_name_the_field(document, field):
    with pytest.raises(ProblemFileError) as info:
        parse_problem(json.dumps(document, indent=2))
    assert info.value.field == field


def test_extra_field_line():
    text = '{\n  "n": 1,\n  "Q": [1],\n  "B": [0],\n  "drift": 3\n}'
    with pytest.raises(ProblemFileError) as info:
        parse_problem(text)
    assert info.value.line == 5


def test_hoermander_failure_surfaces_on_to_spec():
    problem = parse_problem(json.dumps({"n": 2, "Q": [1, 0, 0, 0], "B": [0, 0, 0, 0]}))
    with pytest.raises(HoermanderError) as info:
        problem.to_spec()
    assert info.value.exit_code == 2


def test_load_problem(tmp_path):
    path = tmp_path / "kolmogorov.json"
    path.write_text(KOLMOGOROV)
    assert load_problem(path).n == 2
    with pytest.raises(ProblemFileError, match="cannot read"):
        load_problem(tmp_path / "missing.json")
