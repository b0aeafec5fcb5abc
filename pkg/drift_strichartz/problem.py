"""
Problem files: a single JSON document describing (Q, B) and, optionally,
a lattice and the expected ground truth.

    {
      "n": 2,
      "Q": [1, 0, 0, 0],          # row-major, or nested rows
      "B": [0, 0, 1, 0],
      "label": "kolmogorov-m1",
      "grid": {"N": 128, "L": 16.0, "margin": 0.25},
      "expected": {"D": 4}
    }
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from drift_strichartz.core.gramian import OperatorSpec
from drift_strichartz.errors import ProblemFileError
from drift_strichartz.propagation.grid import GridSpec

logger = logging.getLogger(__name__)


class GridBlock(BaseModel):
    """Optional lattice section of a problem file."""

    model_config = ConfigDict(extra="forbid")

    N: int = Field(128, ge=16)
    L: Union[float, List[float]] = 16.0
    margin: float = Field(0.25, gt=0, lt=0.5)


class ProblemFile(BaseModel):
    """Parsed problem file."""

    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=1)
    Q: List[Any]
    B: List[Any]
    label: str = "custom"
    grid: Optional[GridBlock] = None
    expected: Dict[str, Any] = {}

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Q and B as n x n arrays."""
        return _square(self.Q, self.n, "Q"), _square(self.B, self.n, "B")

    def to_spec(self) -> OperatorSpec:
        """Validated OperatorSpec; (H) failures propagate as HoermanderError."""
        Q, B = self.matrices()
        return OperatorSpec(Q=Q, B=B, label=self.label)

    def to_grid(self) -> Optional[GridSpec]:
        if self.grid is None:
            return None
        return GridSpec(n=self.n, L=self.grid.L, N=self.grid.N, margin=self.grid.margin)


def _square(values: List[Any], n: int, name: str) -> np.ndarray:
    try:
        M = np.array(values, dtype=float)
    except (TypeError, ValueError) as e:
        raise ProblemFileError(f"entries must be numbers ({str(e)})", field=name)
    if M.ndim == 1:
        if M.size != n * n:
            raise ProblemFileError(f"expected {n * n} row-major entries for n={n}, got {M.size}", field=name)
        M = M.reshape(n, n)
    if M.shape != (n, n):
        raise ProblemFileError(f"expected shape ({n}, {n}), got {M.shape}", field=name)
    if not np.all(np.isfinite(M)):
        raise ProblemFileError("entries must be finite", field=name)
    return M


def _line_of(text: str, field: str) -> Optional[int]:
    match = re.search(rf'"{re.escape(field)}"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def parse_problem(text: str) -> ProblemFile:
    """
    Parse a problem document.

    Args:
        text: JSON text

    Returns:
        ProblemFile
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError(e.msg, line=e.lineno)
    if not isinstance(data, dict):
        raise ProblemFileError("top level must be a JSON object", line=1)
    try:
        problem = ProblemFile(**data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first["loc"])
        raise ProblemFileError(first["msg"], field=field, line=_line_of(text, str(first["loc"][0])))
    try:
        problem.matrices()
    except ProblemFileError as e:
        raise ProblemFileError(e.detail, field=e.field, line=_line_of(text, e.field or ""))
    return problem


def load_problem(path: Union[str, Path]) -> ProblemFile:
    """Read and parse a problem file from disk."""
    path = Path(path)
    logger.info(f"Loading problem file {path}")
    try:
        text = path.read_text()
    except OSError as e:
        raise ProblemFileError(f"cannot read {path}: {str(e)}")
    return parse_problem(text)
