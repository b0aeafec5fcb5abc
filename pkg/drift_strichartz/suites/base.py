"""
Report types shared by the verification suites, plus the JSON/CSV writers
for their artifacts.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)


def json_ready(value: Any) -> Any:
    """
    Make a value JSON-serializable and deterministic.

    Floats are rounded to 12 significant digits; infinities and NaN become strings.
    """
    if isinstance(value, BaseModel):
        return json_ready(value.model_dump())
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_ready(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return float(f"{value:.12g}")
    if isinstance(value, complex):
        return {"re": json_ready(value.real), "im": json_ready(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def dumps(value: Any) -> str:
    return json.dumps(json_ready(value), sort_keys=True, indent=2)


class Check(BaseModel):
    """One named pass/fail check with its measured value, target and tolerance."""

    name: str
    measured: Optional[float] = None
    expected: Optional[float] = None
    relation: str = "close"
    tolerance: float = 0.0
    passed: bool
    note: str = ""


class SuiteReport(BaseModel):
    """Checks, skipped samples and tabulated series of one suite run."""

    suite_name: str
    spec_label: str
    checks: List[Check] = Field(default_factory=list)
    skipped: List[Dict[str, Any]] = Field(default_factory=list)
    info: Dict[str, Any] = Field(default_factory=dict)
    columns: List[str] = Field(default_factory=list)
    rows: List[List[float]] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def close(self, name: str, measured: float, expected: float, tolerance: float,
              relative: bool = True, note: str = "") -> Check:
        """|measured - expected| <= tolerance, relative to |expected| by default."""
        if relative:
            scale = abs(expected) if expected != 0 else 1.0
            error = abs(measured - expected) / scale
        else:
            error = abs(measured - expected)
        ok = bool(np.isfinite(measured) and error <= tolerance)
        return self._add(Check(name=name, measured=measured, expected=expected, relation="close",
                               tolerance=tolerance, passed=ok, note=note))

    def at_most(self, name: str, measured: float, bound: float, note: str = "") -> Check:
        ok = bool(np.isfinite(measured) and measured <= bound)
        return self._add(Check(name=name, measured=measured, expected=bound, relation="at_most",
                               passed=ok, note=note))

    def at_least(self, name: str, measured: float, bound: float, strict: bool = False, note: str = "") -> Check:
        ok = bool(not np.isnan(measured) and (measured > bound if strict else measured >= bound))
        relation = "greater" if strict else "at_least"
        return self._add(Check(name=name, measured=measured, expected=bound, relation=relation,
                               passed=ok, note=note))

    def flag(self, name: str, ok: bool, note: str = "") -> Check:
        return self._add(Check(name=name, relation="holds", passed=bool(ok), note=note))

    def skip(self, t: Optional[float], reason: str) -> None:
        self.skipped.append({"t": t, "reason": reason})

    def table(self, columns: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
        self.columns = list(columns)
        self.rows = [[float(v) for v in row] for row in rows]

    def _add(self, check: Check) -> Check:
        self.checks.append(check)
        level = logging.DEBUG if check.passed else logging.WARNING
        logger.log(level, f"[{self.suite_name}:{self.spec_label}] {check.name}: measured={check.measured} "
                          f"{check.relation} {check.expected} (tol {check.tolerance}) -> "
                          f"{'pass' if check.passed else 'FAIL'}")
        return check

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite_name,
            "spec_label": self.spec_label,
            "passed": self.passed,
            "checks": [c.model_dump() for c in self.checks],
            "skipped": list(self.skipped),
            "info": dict(self.info),
            "artifacts": list(self.artifacts),
        }

    def write_outputs(self, out_dir: Union[str, Path]) -> List[str]:
        """
        Write {label}.{suite}.csv (when a table exists) and {label}.{suite}.json.

        Args:
            out_dir: Output directory, created if needed

        Returns:
            Paths written
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.spec_label}.{self.suite_name}"
        if self.columns:
            csv_path = out / f"{stem}.csv"
            data = np.array(self.rows, dtype=float).reshape(-1, len(self.columns))
            np.savetxt(csv_path, data, delimiter=",", header=",".join(self.columns), comments="", fmt="%.12g")
            self.artifacts.append(str(csv_path))
        json_path = out / f"{stem}.json"
        self.artifacts.append(str(json_path))
        json_path.write_text(dumps(self.to_dict()) + "\n")
        logger.info(f"Wrote {self.suite_name} artifacts for '{self.spec_label}' to {out}")
        return list(self.artifacts)
