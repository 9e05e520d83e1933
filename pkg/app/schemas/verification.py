"""Verification suite reports."""

from pydantic import BaseModel, computed_field


class CheckResult(BaseModel):
    name: str
    passed: bool
    # Worst observed value of the checked quantity (residual, deviation or margin)
    worst: float
    tolerance: float
    samples: int
    detail: str = ""


class VerificationReport(BaseModel):
    suite: str
    seed: int
    checks: list[CheckResult]

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        status = "ok" if self.passed else "fail"
        failed = ",".join(c.name for c in self.failures()) or "-"
        return (
            f"task=verify suite={self.suite} status={status} "
            f"checks={len(self.checks)} failed={failed} seed={self.seed}"
        )
