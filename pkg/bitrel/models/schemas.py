from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MAX_NODES_PER_SIDE = 50


class MetricKind(str, Enum):
    HAM = "Ham"
    TMT = "Tmt"
    CLS = "Cls"
    COS = "Cos"
    COV = "Cov"
    DEP = "Dep"

    @classmethod
    def parse(cls, name: str) -> "MetricKind":
        for kind in cls:
            if kind.value.lower() == name.strip().lower():
                return kind
        raise ValueError(f"Unknown metric '{name}', expected one of: {', '.join(k.value for k in cls)}")


class SystemType(str, Enum):
    AND = "AND"
    OR = "OR"
    XOR = "XOR"
    MIX = "MIX"
    LHA = "LHA"


class Operator(str, Enum):
    AND = "and"
    OR = "or"
    XOR = "xor"


class UndefinedPolicy(str, Enum):
    ZERO = "zero"
    SKIP = "skip"


class TraceFormat(str, Enum):
    CSV = "csv"
    BTR = "btr"


class Statistic(str, Enum):
    TPR = "tpr"
    TNR = "tnr"
    PPV = "ppv"
    NPV = "npv"
    ACC = "acc"
    BACC = "bacc"
    BMI = "bmi"
    MCC = "mcc"

    @property
    def domain(self) -> Tuple[float, float]:
        if self in (Statistic.BMI, Statistic.MCC):
            return (-1.0, 1.0)
        return (0.0, 1.0)


HOMOGENEOUS_OPERATOR = {
    SystemType.AND: Operator.AND,
    SystemType.OR: Operator.OR,
    SystemType.XOR: Operator.XOR,
}


class NodeFunction(BaseModel):
    """Boolean function of a dst node over an ascending set of src indices.

    Homogeneous functions carry one operator folded over all inputs; LHA
    functions carry len(inputs) - 1 operators applied left to right. A
    single-input function is the identity and carries no operator.
    """

    model_config = ConfigDict(frozen=True)

    inputs: Tuple[int, ...] = Field(..., min_length=1)
    ops: Tuple[Operator, ...] = ()
    chain: bool = False

    @field_validator("inputs")
    def validate_inputs(cls, v):
        if any(i < 0 for i in v):
            raise ValueError("input indices must be non-negative")
        if list(v) != sorted(set(v)):
            raise ValueError("inputs must be distinct and ascending")
        return v

    @model_validator(mode="after")
    def validate_ops(self):
        k = len(self.inputs)
        if k == 1:
            if self.ops:
                raise ValueError("single-input functions are the identity and take no operator")
        elif self.chain:
            if len(self.ops) != k - 1:
                raise ValueError(f"LHA function over {k} inputs needs {k - 1} operators, got {len(self.ops)}")
        elif len(self.ops) != 1:
            raise ValueError("homogeneous functions carry exactly one operator")
        return self

    @property
    def operators(self) -> List[Operator]:
        """Operators in application order, one per input after the first."""
        if len(self.inputs) == 1:
            return []
        if self.chain:
            return list(self.ops)
        return [self.ops[0]] * (len(self.inputs) - 1)


class SystemSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    ordinal: int = Field(0, ge=0)
    system_type: SystemType
    m_src: int = Field(..., ge=1, le=MAX_NODES_PER_SIDE)
    m_dst: int = Field(..., ge=1, le=MAX_NODES_PER_SIDE)
    seed: int = Field(..., ge=0, lt=2**64)
    src_density: Tuple[float, ...]
    dst_functions: Tuple[NodeFunction, ...]

    @field_validator("src_density")
    def validate_densities(cls, v):
        if any(not 0.0 <= p <= 1.0 for p in v):
            raise ValueError("src densities must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def validate_topology(self):
        if len(self.src_density) != self.m_src:
            raise ValueError(f"expected {self.m_src} src densities, got {len(self.src_density)}")
        if len(self.dst_functions) != self.m_dst:
            raise ValueError(f"expected {self.m_dst} dst functions, got {len(self.dst_functions)}")
        for index, fn in enumerate(self.dst_functions):
            if fn.inputs[-1] >= self.m_src:
                raise ValueError(f"dst {index} references src {fn.inputs[-1]} but m_src={self.m_src}")
            if len(fn.inputs) == 1:
                continue
            if self.system_type == SystemType.LHA:
                if not fn.chain:
                    raise ValueError(f"dst {index} of an LHA system must carry an operator chain")
            elif fn.chain:
                raise ValueError(f"dst {index} carries an operator chain in a {self.system_type.value} system")
            elif self.system_type in HOMOGENEOUS_OPERATOR and fn.ops[0] != HOMOGENEOUS_OPERATOR[self.system_type]:
                raise ValueError(f"dst {index} uses {fn.ops[0].value} in a {self.system_type.value} system")
        return self

    @property
    def m(self) -> int:
        return self.m_src + self.m_dst


class ConfusionCounts(BaseModel):
    tp: float = Field(0.0, ge=0)
    fp: float = Field(0.0, ge=0)
    fn: float = Field(0.0, ge=0)
    tn: float = Field(0.0, ge=0)


class StatSet(BaseModel):
    tpr: Optional[float] = None
    tnr: Optional[float] = None
    ppv: Optional[float] = None
    npv: Optional[float] = None
    acc: Optional[float] = None
    bacc: Optional[float] = None
    bmi: Optional[float] = None
    mcc: Optional[float] = None

    def get(self, statistic: Statistic) -> Optional[float]:
        return getattr(self, statistic.value)


class MetricResult(BaseModel):
    metric: MetricKind
    counts: ConfusionCounts
    stats: StatSet


class SystemResults(BaseModel):
    """Per-system results record: identity of the system plus one entry per metric."""

    ordinal: int
    system_type: SystemType
    m_src: int
    m_dst: int
    seed: int
    results: List[MetricResult]

    def by_metric(self) -> Dict[MetricKind, MetricResult]:
        return {result.metric: result for result in self.results}


class RunConfig(BaseModel):
    seed: int = Field(0, ge=0, lt=2**64)
    systems: int = Field(1000, ge=1)
    samples: int = Field(10000, ge=1)
    metrics: List[MetricKind] = Field(default_factory=lambda: list(MetricKind), min_length=1)
    policy: UndefinedPolicy = UndefinedPolicy.ZERO
    out: Path = Path("bitrel-out")
    jobs: int = Field(1, ge=1)
    format: TraceFormat = TraceFormat.BTR
    statistic: Statistic = Statistic.BACC
    window: Optional[Tuple[int, int]] = None
    gridpoints: int = Field(256, ge=2)

    @field_validator("metrics", mode="before")
    def parse_metrics(cls, v):
        if isinstance(v, str):
            v = [name for name in v.split(",") if name.strip()]
        parsed = [MetricKind.parse(item) if isinstance(item, str) else item for item in v]
        # canonical order, no duplicates
        return [kind for kind in MetricKind if kind in parsed]

    @field_validator("window")
    def validate_window(cls, v):
        if v is not None and not 0 <= v[0] < v[1]:
            raise ValueError("window must satisfy 0 <= start < end")
        return v
