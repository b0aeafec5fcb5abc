"""
Analysis orchestrator for the drift-Strichartz toolkit.
Uses LangGraph to chain the (H) check, the canonical structure, the regime
classification and the Strichartz pair into one AnalysisResult.
"""

import logging
from typing import Any, Dict, List, Optional, TypedDict, Annotated

import numpy as np
from dotenv import load_dotenv

# Import LangGraph components
from langgraph.graph import StateGraph, END

from drift_strichartz.core.gramian import OperatorSpec, check_hoermander
from drift_strichartz.core.regimes import RegimeReport, admissible_pair, classify, pairs_for
from drift_strichartz.core.structure import StructureReport, analyze_structure
from drift_strichartz.errors import HoermanderError

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()


# Define the state type
class AnalysisState(TypedDict):
    """Type definition for the analysis state."""
    Q: Annotated[Any, "Q"]
    B: Annotated[Any, "B"]
    label: Annotated[str, "label"]
    pair_r: Annotated[Optional[float], "pair_r"]
    spec: Annotated[Optional[OperatorSpec], "spec"]
    hoermander: Annotated[Dict[str, Any], "hoermander"]
    structure: Annotated[Optional[StructureReport], "structure"]
    regime: Annotated[Optional[RegimeReport], "regime"]
    pair: Annotated[Dict[str, Any], "pair"]
    result: Annotated[Dict[str, Any], "result"]
    current_step: Annotated[str, "current_step"]
    errors: Annotated[List[str], "errors"]
    failure: Annotated[Optional[Exception], "failure"]


# Define the workflow steps
class WorkflowStep:
    """Workflow step constants."""
    HOERMANDER = "hoermander"
    STRUCTURE = "structure"
    REGIME = "regime"
    PAIRS = "pairs"
    FINALIZE = "finalize"
    END = "end"
    ERROR = "error"


STEP_SEQUENCE = [
    WorkflowStep.HOERMANDER,
    WorkflowStep.STRUCTURE,
    WorkflowStep.REGIME,
    WorkflowStep.PAIRS,
    WorkflowStep.FINALIZE,
]


def _pair(regime: RegimeReport, pair_r: Optional[float]) -> Dict[str, Any]:
    if pair_r is None:
        return pairs_for(regime)
    D_infty = regime.D_infty if regime.hypothesis == "B" else None
    return admissible_pair(regime.D, pair_r, D_infty).to_dict()


def assemble_result(spec: OperatorSpec, hoermander: Dict[str, Any], structure: StructureReport,
                    regime: RegimeReport, pair: Dict[str, Any]) -> Dict[str, Any]:
    """
    Flatten the reports into the AnalysisResult dict printed by `analyze`.

    Args:
        spec: Operator specification
        hoermander: Diagnostic from check_hoermander
        structure: Structure report
        regime: Regime report
        pair: Pair as a dict

    Returns:
        AnalysisResult dict
    """
    return {
        "label": spec.label,
        "n": spec.n,
        "hoermander": {"holds": True, **hoermander},
        "ranks": list(structure.ranks),
        "D": structure.D,
        "dilation_weights": list(structure.dilation_weights),
        "is_dilation_invariant": structure.is_dilation_invariant,
        "layout_warnings": list(structure.layout_warnings),
        "trB": spec.trB,
        "spectrum": regime.spectrum_summary.to_dict(),
        "case_tag": regime.case_tag,
        "hypothesis": regime.hypothesis,
        "D_infty": regime.D_infty,
        "fit_diagnostics": dict(regime.fit_diagnostics),
        "strichartz_pair": pair,
        "pair_r": pair["r"],
    }


def run_analysis(Q, B, label: str = "custom", pair_r: Optional[float] = None) -> Dict[str, Any]:
    """
    Run the analysis directly, without the LangGraph workflow.

    Args:
        Q: Diffusion matrix
        B: Drift matrix
        label: Name used in logs and reports
        pair_r: Space exponent of the reported pair (the diagonal Strichartz pair by default)

    Returns:
        AnalysisResult dict
    """
    logger.info(f"Starting analysis of '{label}'")

    # Step 1: condition (H)
    holds, hoermander = check_hoermander(Q, B)
    if not holds:
        raise HoermanderError(f"(H) fails for '{label}': Krylov rank profile {hoermander['profile']}",
                              profile=hoermander["profile"])
    spec = OperatorSpec(Q=Q, B=B, label=label)

    # Step 2: canonical structure
    structure = analyze_structure(spec)

    # Step 3: regime
    regime = classify(spec, structure)

    # Step 4: exponent pair
    pair = _pair(regime, pair_r)

    return assemble_result(spec, hoermander, structure, regime, pair)


class AnalysisWorkflow:
    """
    Workflow orchestrator for the analysis of one operator.
    Uses LangGraph to run the steps and route failures to an error node.
    """

    def __init__(self):
        """Initialize the workflow orchestrator."""
        logger.info("Initializing Analysis Workflow")

        # Create the workflow graph
        self.graph = self._create_workflow_graph()

    def _create_workflow_graph(self):
        """
        Create the workflow graph.

        Returns:
            The compiled workflow graph
        """
        graph = StateGraph(AnalysisState)

        # Add nodes for each step in the workflow
        graph.add_node(WorkflowStep.HOERMANDER, self._check_hoermander)
        graph.add_node(WorkflowStep.STRUCTURE, self._analyze_structure)
        graph.add_node(WorkflowStep.REGIME, self._classify)
        graph.add_node(WorkflowStep.PAIRS, self._choose_pair)
        graph.add_node(WorkflowStep.FINALIZE, self._finalize)
        graph.add_node(WorkflowStep.ERROR, self._handle_error)

        graph.set_entry_point(WorkflowStep.HOERMANDER)

        # Every step either advances or hands over to the error node
        for step, following in zip(STEP_SEQUENCE, STEP_SEQUENCE[1:] + [WorkflowStep.END]):
            graph.add_conditional_edges(
                step,
                self._determine_next_step,
                {
                    following: END if following == WorkflowStep.END else following,
                    WorkflowStep.ERROR: WorkflowStep.ERROR,
                }
            )
        graph.add_edge(WorkflowStep.ERROR, END)

        return graph.compile()

    def _fail(self, state: AnalysisState, step: str, e: Exception) -> AnalysisState:
        error_msg = f"Error in {step} step: {str(e)}"
        logger.error(error_msg)

        # Create a new state to avoid modifying the original
        new_state = state.copy()
        new_state["errors"] = new_state.get("errors", []) + [error_msg]
        new_state["failure"] = e
        new_state["current_step"] = WorkflowStep.ERROR
        return new_state

    def _check_hoermander(self, state: AnalysisState) -> AnalysisState:
        """
        Check (H) and build the validated specification.

        Args:
            state: The current analysis state

        Returns:
            Updated analysis state
        """
        logger.info(f"Checking (H) for '{state['label']}'")
        try:
            holds, diagnostic = check_hoermander(state["Q"], state["B"])
            if not holds:
                raise HoermanderError(f"(H) fails for '{state['label']}': Krylov rank profile "
                                      f"{diagnostic['profile']}", profile=diagnostic["profile"])
            state["hoermander"] = diagnostic
            state["spec"] = OperatorSpec(Q=state["Q"], B=state["B"], label=state["label"])
            state["current_step"] = WorkflowStep.STRUCTURE
            return state
        except Exception as e:
            return self._fail(state, WorkflowStep.HOERMANDER, e)

    def _analyze_structure(self, state: AnalysisState) -> AnalysisState:
        """Canonical ranks, D and the principal drift."""
        logger.info("Analyzing canonical structure")
        try:
            state["structure"] = analyze_structure(state["spec"])
            state["current_step"] = WorkflowStep.REGIME
            return state
        except Exception as e:
            return self._fail(state, WorkflowStep.STRUCTURE, e)

    def _classify(self, state: AnalysisState) -> AnalysisState:
        """Regime classification, including the growth fit when needed."""
        logger.info("Classifying regime")
        try:
            state["regime"] = classify(state["spec"], state["structure"])
            state["current_step"] = WorkflowStep.PAIRS
            return state
        except Exception as e:
            return self._fail(state, WorkflowStep.REGIME, e)

    def _choose_pair(self, state: AnalysisState) -> AnalysisState:
        logger.info("Choosing exponent pair")
        try:
            state["pair"] = _pair(state["regime"], state.get("pair_r"))
            state["current_step"] = WorkflowStep.FINALIZE
            return state
        except Exception as e:
            return self._fail(state, WorkflowStep.PAIRS, e)

    def _finalize(self, state: AnalysisState) -> AnalysisState:
        logger.info("Finalizing analysis")
        try:
            state["result"] = assemble_result(state["spec"], state["hoermander"], state["structure"],
                                              state["regime"], state["pair"])
            state["current_step"] = WorkflowStep.END
            return state
        except Exception as e:
            return self._fail(state, WorkflowStep.FINALIZE, e)

    def _handle_error(self, state: AnalysisState) -> AnalysisState:
        """
        Log the accumulated errors. The failure itself is re-raised by run().

        Args:
            state: The current analysis state

        Returns:
            Updated analysis state
        """
        logger.info("Handling error")
        for error in state.get("errors", []):
            logger.error(f"Workflow error: {error}")
        return state

    def _determine_next_step(self, state: AnalysisState) -> str:
        """
        Route to the error node when the last step failed.

        Args:
            state: The current analysis state

        Returns:
            The next step to take
        """
        if state.get("errors"):
            return WorkflowStep.ERROR
        return state.get("current_step", WorkflowStep.END)

    def run(self, Q, B, label: str = "custom", pair_r: Optional[float] = None) -> Dict[str, Any]:
        """
        Run the analysis workflow for one operator.

        Args:
            Q: Diffusion matrix
            B: Drift matrix
            label: Name used in logs and reports
            pair_r: Space exponent of the reported pair

        Returns:
            AnalysisResult dict, identical to run_analysis
        """
        logger.info(f"Starting analysis workflow for '{label}'")

        # Initialize the state
        state: AnalysisState = {
            "Q": np.asarray(Q, dtype=float),
            "B": np.asarray(B, dtype=float),
            "label": label,
            "pair_r": pair_r,
            "spec": None,
            "hoermander": {},
            "structure": None,
            "regime": None,
            "pair": {},
            "result": {},
            "current_step": WorkflowStep.HOERMANDER,
            "errors": [],
            "failure": None,
        }

        # Stream the execution and keep the latest full state
        final_state = state
        for values in self.graph.stream(state, stream_mode="values"):
            logger.debug(f"Workflow step: {values.get('current_step')}")
            final_state = values

        if final_state.get("failure") is not None:
            raise final_state["failure"]
        return final_state["result"]
