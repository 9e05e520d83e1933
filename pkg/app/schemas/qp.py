"""Constraint data and solutions of the gamma-m quadratic program."""

from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, computed_field

from app.models.enums import QpRegion

Vec2 = tuple[FiniteFloat, FiniteFloat]


class QpParams(BaseModel):
    """QP weight m and CLF drift scaling gamma.

    Asymptotic stability of the closed loop needs gamma * m / (m + 1) = 1;
    `stability(m)` builds exactly that pair.
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(ge=1.0, allow_inf_nan=False)
    m_weight: float = Field(default=1.0, ge=1.0, allow_inf_nan=False)

    @staticmethod
    def stability_gamma(m_weight: float) -> float:
        return (m_weight + 1.0) / m_weight

    @classmethod
    def stability(cls, m_weight: float = 1.0) -> "QpParams":
        return cls(gamma=cls.stability_gamma(m_weight), m_weight=m_weight)

    @computed_field
    @property
    def is_stability_mode(self) -> bool:
        return abs(self.gamma * self.m_weight / (self.m_weight + 1.0) - 1.0) <= 1e-12


class ConstraintRow(BaseModel):
    """One affine constraint a + b . u <= 0 (for the CLF row, `a` is the raw a1)."""

    model_config = ConfigDict(frozen=True)

    a: FiniteFloat
    b: Vec2


class ConstraintTerms(BaseModel):
    model_config = ConfigDict(frozen=True)

    a1: FiniteFloat
    a1_bar: FiniteFloat
    b1: Vec2
    a2: FiniteFloat
    b2: Vec2

    @classmethod
    def build(cls, a1: float, b1, a2: float, b2, gamma: float) -> "ConstraintTerms":
        from app.core.qp import gamma_f

        return cls(
            a1=a1,
            a1_bar=gamma_f(a1, gamma),
            b1=(float(b1[0]), float(b1[1])),
            a2=a2,
            b2=(float(b2[0]), float(b2[1])),
        )

    def clf_row(self) -> ConstraintRow:
        return ConstraintRow(a=self.a1, b=self.b1)

    def cbf_row(self) -> ConstraintRow:
        return ConstraintRow(a=self.a2, b=self.b2)


class QpSolution(BaseModel):
    model_config = ConfigDict(frozen=True)

    # Scaled input (u_v / rho, u_omega)
    u: Vec2
    region: QpRegion
    f1_residual: float
    f2_residual: float


class OracleSolution(BaseModel):
    """Active-set enumeration result with the diagnostics the closed form omits."""

    model_config = ConfigDict(frozen=True)

    u: Vec2
    delta: Vec2
    # One multiplier per row, CLF first
    multipliers: tuple[float, ...]
    active: tuple[int, ...]
    objective: float
