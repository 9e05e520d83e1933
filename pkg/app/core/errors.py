"""Domain exceptions raised by the numerical core and the scenario loader."""

from typing import Any


class DegeneratePose(ValueError):
    """Polar coordinates requested too close to the origin."""

    def __init__(self, rho: float, rho_min: float):
        self.rho = rho
        self.rho_min = rho_min
        super().__init__(f"Polar pose undefined: rho={rho!r} is below rho_min={rho_min!r}")


class DegenerateQp(RuntimeError):
    """The QP data reached a configuration the CLF/CBF properties exclude."""

    def __init__(self, message: str, terms: Any = None, row: Any = None):
        self.terms = terms
        self.row = row
        super().__init__(message)


class NoFeasibleActiveSet(RuntimeError):
    """No active set satisfied the KKT conditions (numerical pathology)."""


class UnsafeStart(ValueError):
    """The initial state lies outside the safe set of some obstacle."""


class ScenarioParseError(ValueError):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")


class ScenarioValidationError(ValueError):
    def __init__(self, path: str, detail: str):
        self.path = path
        self.detail = detail
        super().__init__(f"{path}: {detail}")
