"""Structured verification reports and their JSON schema."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources


@dataclass(frozen=True)
class Check:
    check_id: str
    lhs: float
    rhs: float
    abs_err: float
    tolerance: float
    passed: bool
    provenance: str = "DERIVED"
    oracle: str | None = None
    note: str = ""

    @classmethod
    def compare(cls, check_id: str, lhs: float, rhs: float, tolerance: float,
                provenance: str = "DERIVED", oracle: str | None = None, note: str = "") -> "Check":
        lhs, rhs = float(lhs), float(rhs)
        err = abs(lhs - rhs)
        ok = bool(err <= tolerance) and math.isfinite(err)
        return cls(check_id, lhs, rhs, err, float(tolerance), ok, provenance, oracle, note)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        if out["oracle"] is None:
            del out["oracle"]
        return out

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.check_id:<40} lhs={self.lhs:+.12g} rhs={self.rhs:+.12g} "
                f"err={self.abs_err:.2e} tol={self.tolerance:.1e}")


@dataclass
class Report:
    scenario: str
    checks: list[Check] = field(default_factory=list)
    quadrature: dict = field(default_factory=dict)
    fd_step: float = 1e-5
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def to_dict(self, include_timestamp: bool = True) -> dict:
        out = {
            "scenario": self.scenario,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "quadrature": dict(self.quadrature),
            "fd_step": self.fd_step,
        }
        if self.error is not None:
            out["error"] = self.error
        if include_timestamp:
            out["timestamp"] = self.timestamp
        return out

    def to_json(self, include_timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(include_timestamp), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"[{'PASS' if self.passed else 'FAIL'}] {self.scenario}"]
        lines += ["    " + c.line() for c in self.checks]
        if self.error:
            lines.append(f"    ERROR {self.error}")
        return "\n".join(lines)


def report_schema() -> dict:
    text = resources.files("transgress.harness").joinpath("data/report_schema.json").read_text()
    return json.loads(text)
