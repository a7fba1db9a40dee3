"""RunReport records and the tolerance rules that decide pass/fail."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Iterable

__all__ = [
    "RunReport",
    "evaluate_rule",
    "rule_abs",
    "rule_rel",
    "rule_se",
    "rule_le_se",
    "RULE_LE",
    "RULE_GT",
    "reports_to_json",
    "reports_from_json",
]

RULE_LE = "stat<=theory"
RULE_GT = "stat>theory"


def rule_abs(tol: float) -> str:
    return f"abs<={tol:g}"


def rule_rel(tol: float) -> str:
    return f"rel<={tol:g}"


def rule_se(k: float = 4) -> str:
    return f"se<={k:g}"


def rule_le_se(k: float = 4) -> str:
    return f"stat<=theory+{k:g}se"


_NUM = r"([0-9.eE+-]+)"


def evaluate_rule(rule: str, statistic: float, theoretical: float, stderr: float | None) -> bool:
    """Decide pass/fail from the report's numbers alone.

    Rules: ``abs<=X``, ``rel<=X``, ``se<=K`` (two-sided within K standard
    errors), ``stat<=theory``, ``stat<=theory+Kse``, ``stat>theory``.  Anything
    else (e.g. ``error: ...``) fails.
    """
    if statistic is None or theoretical is None:
        return False
    if not (math.isfinite(statistic) and math.isfinite(theoretical)):
        return False
    if m := re.fullmatch(r"abs<=" + _NUM, rule):
        return abs(statistic - theoretical) <= float(m.group(1))
    if m := re.fullmatch(r"rel<=" + _NUM, rule):
        return abs(statistic - theoretical) <= float(m.group(1)) * abs(theoretical)
    if m := re.fullmatch(r"se<=" + _NUM, rule):
        if stderr is None or not math.isfinite(stderr):
            return False
        return abs(statistic - theoretical) <= float(m.group(1)) * stderr
    if rule == RULE_LE:
        return statistic <= theoretical
    if m := re.fullmatch(r"stat<=theory\+" + _NUM + "se", rule):
        if stderr is None or not math.isfinite(stderr):
            return False
        return statistic <= theoretical + float(m.group(1)) * stderr
    if rule == RULE_GT:
        return statistic > theoretical
    return False


def _clean(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class RunReport:
    """Outcome of one verification check.

    ``passed`` is derived from (statistic, theoretical, stderr, tolerance_rule)
    and serialized under the key ``pass``.  ``details`` carries diagnostic
    extras and is only written when explicitly requested.
    """

    check_id: str
    statistic: float
    theoretical: float
    stderr: float | None
    tolerance_rule: str
    runtime_ms: int = 0
    seed: int = 0
    stream_count: int = 1
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return evaluate_rule(self.tolerance_rule, self.statistic, self.theoretical, self.stderr)

    def to_dict(self, include_details: bool = False) -> dict[str, Any]:
        d = {
            "check_id": self.check_id,
            "statistic": _clean(self.statistic),
            "theoretical": _clean(self.theoretical),
            "stderr": _clean(self.stderr),
            "tolerance_rule": self.tolerance_rule,
            "pass": self.passed,
            "runtime_ms": int(self.runtime_ms),
            "seed": int(self.seed),
            "stream_count": int(self.stream_count),
        }
        if include_details:
            d["details"] = _jsonable(self.details)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunReport":
        nan = float("nan")
        return cls(
            check_id=d["check_id"],
            statistic=nan if d["statistic"] is None else d["statistic"],
            theoretical=nan if d["theoretical"] is None else d["theoretical"],
            stderr=d.get("stderr"),
            tolerance_rule=d["tolerance_rule"],
            runtime_ms=d.get("runtime_ms", 0),
            seed=d.get("seed", 0),
            stream_count=d.get("stream_count", 1),
            details=d.get("details", {}),
        )

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        se = "" if self.stderr is None else f" se={self.stderr:.3g}"
        return (
            f"[{flag}] {self.check_id}: statistic={self.statistic:.6g} "
            f"theoretical={self.theoretical:.6g}{se} rule={self.tolerance_rule}"
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj


def reports_to_json(reports: Iterable[RunReport], include_details: bool = False) -> str:
    return json.dumps([r.to_dict(include_details) for r in reports], indent=2) + "\n"


def reports_from_json(text: str) -> list[RunReport]:
    return [RunReport.from_dict(d) for d in json.loads(text)]
