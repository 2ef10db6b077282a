"""JSON rendering for reports and error payloads"""

import json
from typing import Any, Dict

from dartprune.models.reports import Report


def render_json(payload: Any) -> str:
    """Stable rendering: fixed key order, two-space indent, trailing newline"""
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def render_report(report: Report) -> str:
    return render_json(report.model_dump(mode="json"))


def load_report(text: str) -> Report:
    """Parse a rendered report back, decoding "+inf"/"-inf" strings"""
    return Report.model_validate(json.loads(text))


def render_error(payload: Dict[str, Any]) -> str:
    """Single-line error JSON for stderr"""
    return json.dumps(payload, separators=(",", ":"), default=str)
