from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .exact import MultiPoly, PolyFraction, format_rational


@dataclass
class Report:
    """Outcome of a verification routine."""

    name: str
    ok: bool
    details: dict = field(default_factory=dict)
    counterexample: Any = None

    def __bool__(self):
        return self.ok

    def to_json(self) -> dict:
        out = {"name": self.name, "ok": self.ok, "details": jsonable(self.details)}
        if self.counterexample is not None:
            out["counterexample"] = jsonable(self.counterexample)
        return out


def jsonable(obj):
    """Recursively turn exact values into JSON-friendly ones ("p/q" strings)."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, (MultiPoly, PolyFraction)):
        return obj.to_json()
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj
