"""
Tests for the analysis orchestrator: the LangGraph workflow must agree with
the direct path and surface the same errors.
"""

import numpy as np
import pytest

from drift_strichartz.errors import DomainError, HoermanderError, InconclusiveRegimeError
from drift_strichartz.gallery import fixture
from drift_strichartz.workflow import STEP_SEQUENCE, AnalysisWorkflow, WorkflowStep, run_analysis


@pytest.fixture(scope="module")
def workflow():
    return AnalysisWorkflow()


def test_step_sequence():
    assert STEP_SEQUENCE[0] == WorkflowStep.HOERMANDER
    assert STEP_SEQUENCE[-1] == WorkflowStep.FINALIZE


def test_direct_analysis_of_ex_1_1():
    spec = fixture("ex-1.1").spec
    result = run_analysis(spec.Q, spec.B, "ex-1.1")
    assert result["hoermander"]["holds"] is True
    assert result["ranks"] == [2, 1]
    assert result["D"] == 5
    assert result["dilation_weights"] == [1, 1, 3]
    assert result["case_tag"] == "Thm1.3-i"
    assert result["hypothesis"] == "A"
    assert result["pair_r"] == pytest.approx(2.8)
    assert result["strichartz_pair"]["q"] == pytest.approx(2.8)
    assert result["trB"] == 1.0


@pytest.mark.parametrize("name, params", [
    ("ex-1.1", {}),
    ("kolmogorov", {"m": 1}),
    ("rotation-7.2", {}),
    ("anomalous-7.4", {"k": 2}),
])
def test_graph_matches_direct_path(workflow, name, params):
    spec = fixture(name, **params).spec
    assert workflow.run(spec.Q, spec.B, spec.label) == run_analysis(spec.Q, spec.B, spec.label)


def test_hypothesis_b_pair_carries_q_infty():
    spec = fixture("anomalous-7.4", k=2).spec
    result = run_analysis(spec.Q, spec.B, spec.label, pair_r=2.5)
    assert result["hypothesis"] == "B"
    assert result["D_infty"] == 6.0
    # D = 8, r = 2.5: 2/q = 8 * 0.1 and 2/q_inf = 6 * 0.1
    assert result["strichartz_pair"]["q"] == pytest.approx(2.5)
    assert result["strichartz_pair"]["q_infty"] == pytest.approx(10.0 / 3.0)


def test_hoermander_failure_is_reraised(workflow):
    Q = np.diag([1.0, 0.0])
    with pytest.raises(HoermanderError) as info:
        workflow.run(Q, np.zeros((2, 2)), "degenerate")
    assert "(H) fails" in str(info.value)
    with pytest.raises(HoermanderError):
        run_analysis(Q, np.zeros((2, 2)), "degenerate")


def test_inconclusive_fit_is_reraised(workflow, settings_with):
    settings_with(fit_residual_max=1e-12)
    spec = fixture("anomalous-7.4", k=2).spec
    with pytest.raises(InconclusiveRegimeError) as info:
        workflow.run(spec.Q, spec.B, spec.label)
    assert "residual" in info.value.diagnostics


def test_inadmissible_pair_is_reraised(workflow):
    spec = fixture("kolmogorov-m1").spec
    with pytest.raises(DomainError):
        workflow.run(spec.Q, spec.B, spec.label, pair_r=10.0)
