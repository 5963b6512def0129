"""Pass/fail reports with numeric margins, JSON-serializable."""

from dataclasses import dataclass, field


@dataclass
class ConditionReport:
    """Outcome of one numeric condition check."""

    name: str
    passed: bool
    margins: dict = field(default_factory=dict)
    details: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margins": {k: float(v) for k, v in self.margins.items()},
            "details": self.details,
        }


def combine(name, reports):
    """Aggregate several reports; passes iff all pass."""
    margins = {}
    failing = []
    for r in reports:
        for k, v in r.margins.items():
            margins[f"{r.name}.{k}"] = v
        if not r.passed:
            failing.append(r.name)
    details = "all conditions pass" if not failing else "failed: " + ", ".join(failing)
    return ConditionReport(
        name=name,
        passed=not failing,
        margins=margins,
        details=details,
    )
