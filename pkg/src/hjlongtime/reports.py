"""Pass/fail check reports with a stable ``key: value`` text form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, dict):
        return ", ".join(f"{k}={_fmt(x)}" for k, x in v.items())
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


@dataclass
class CheckReport:
    """Outcome of one numerical check.

    ``margin`` is the worst slack of the checked inequality (negative on
    failure); ``witness`` locates it.
    """

    name: str
    passed: bool
    margin: float = float("nan")
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_text(self) -> str:
        lines = [f"[{self.name}]", f"verdict: {self.verdict}", f"margin: {_fmt(self.margin)}"]
        if self.witness:
            lines.append(f"witness: {_fmt(self.witness)}")
        for k, v in self.details.items():
            lines.append(f"{k}: {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def __bool__(self) -> bool:
        return bool(self.passed)


def block(name: str, items: dict) -> str:
    """Structured text block ``[name]`` followed by ``key: value`` lines."""
    return "\n".join([f"[{name}]"] + [f"{k}: {_fmt(v)}" for k, v in items.items()]) + "\n"
