import enum


class ControllerKind(str, enum.Enum):
    NOMINAL = "nominal"
    CLF_QP = "clf-qp"
    CLF_CBF_QP = "clf-cbf-qp"


class QpRegion(str, enum.Enum):
    BOTH_INACTIVE = "BothInactive"
    CLF_ACTIVE = "ClfActive"
    CBF_ACTIVE = "CbfActive"
    BOTH_ACTIVE = "BothActive"
    # A degenerate guard dropped a constraint row (|b| ~ 0 with the admissible sign)
    DEGENERATE = "Degenerate"
