import json
import math
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import (
    BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_serializer, field_validator,
    model_validator
)

from app.core.exceptions import SpecParseError, SpecValidationError

SCHEMA_VERSION = "latticelab/1"


class ProvenanceEnum(str, Enum):
    PUBLISHED = "PUBLISHED"
    DERIVED = "DERIVED"
    TRIVIAL = "TRIVIAL"


# Base Response Schema
class BaseResponse(BaseModel):
    success: bool
    message: str
    data: Optional[Dict[Any, Any]] = None
    errors: Optional[Dict[str, Any]] = None


# Body Schemas
class _SpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class BodyCombination(_SpecModel):
    op: Literal["union", "intersection"]
    children: List["BodySpec"] = Field(min_length=1)


class BallPrimitive(_SpecModel):
    prim: Literal["ball"]
    r: float = Field(gt=0)


class SlabPrimitive(_SpecModel):
    prim: Literal["slab"]
    a: List[float] = Field(min_length=1)
    c: float = Field(gt=0)


class HalfspacePrimitive(_SpecModel):
    prim: Literal["halfspace"]
    a: List[float] = Field(min_length=1)
    c: float


class SignPrimitive(_SpecModel):
    prim: Literal["sign"]
    i: int = Field(ge=0)
    j: int = Field(ge=0)
    rel: Literal["geq", "leq"]

    @model_validator(mode="after")
    def check_distinct(self):
        if self.i == self.j:
            raise ValueError("sign region needs two distinct coordinates")
        return self


BodySpec = Union[BodyCombination, BallPrimitive, SlabPrimitive, HalfspacePrimitive, SignPrimitive]


# Norm Schemas
class PNormSpec(_SpecModel):
    type: Literal["pnorm"] = "pnorm"
    p: Union[float, Literal["inf"]] = 2.0
    weights: Optional[List[float]] = None

    @field_validator("p")
    @classmethod
    def validate_p(cls, v):
        p = math.inf if v == "inf" else float(v)
        if not p >= 1:
            raise ValueError("p must lie in [1, inf]")
        return p

    @field_validator("weights")
    @classmethod
    def validate_weights(cls, v):
        if v is not None and any(not (w > 0 and math.isfinite(w)) for w in v):
            raise ValueError("weights must be finite and strictly positive")
        return v

    @field_serializer("p")
    def serialize_p(self, p: float):
        return "inf" if math.isinf(p) else p


class PullbackSpec(_SpecModel):
    type: Literal["pullback"] = "pullback"
    matrix: List[List[float]]
    inner: "NormSpec"

    @field_validator("matrix")
    @classmethod
    def validate_square(cls, v):
        if not v or any(len(row) != len(v) for row in v):
            raise ValueError("pullback matrix must be square and non-empty")
        return v


class GaugeSpec(_SpecModel):
    type: Literal["gauge"] = "gauge"
    body: BodySpec


class RectangularizedSpec(_SpecModel):
    type: Literal["rectangularized"] = "rectangularized"
    inner: "NormSpec"
    mode: Optional[Literal["exact", "sampled"]] = None
    samples: Optional[int] = Field(default=None, gt=0)


class VNormSpec(_SpecModel):
    type: Literal["vnorm"] = "vnorm"
    inner: "NormSpec"


class ScaledSpec(_SpecModel):
    type: Literal["scaled"] = "scaled"
    c: float = Field(gt=0)
    inner: "NormSpec"


NormSpec = Annotated[
    Union[PNormSpec, PullbackSpec, GaugeSpec, RectangularizedSpec, VNormSpec, ScaledSpec],
    Field(discriminator="type"),
]

for _model in (BodyCombination, PullbackSpec, GaugeSpec, RectangularizedSpec, VNormSpec, ScaledSpec):
    _model.model_rebuild()

NORM_SPEC_ADAPTER = TypeAdapter(NormSpec)
BODY_SPEC_ADAPTER = TypeAdapter(BodySpec)


def _load(adapter: TypeAdapter, data: Any, what: str):
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise SpecParseError(f"{what} is not valid JSON: {e}")
    try:
        return adapter.validate_python(data)
    except ValidationError as e:
        raise SpecValidationError(
            f"Invalid {what}", {"errors": json.loads(e.json(include_url=False))}
        )


def parse_norm_spec(data: Any) -> NormSpec:
    """Validate a norm spec given as JSON text or decoded JSON"""
    return _load(NORM_SPEC_ADAPTER, data, "norm spec")


def parse_body_spec(data: Any) -> BodySpec:
    return _load(BODY_SPEC_ADAPTER, data, "body spec")


def dump_norm_spec(spec: NormSpec) -> Dict[str, Any]:
    return NORM_SPEC_ADAPTER.dump_python(spec, mode="json", exclude_none=True)


def dump_body_spec(body: BodySpec) -> Dict[str, Any]:
    return BODY_SPEC_ADAPTER.dump_python(body, mode="json", exclude_none=True)


# Certification Schemas
class Witness(BaseModel):
    f: Optional[List[float]] = None
    g: Optional[List[float]] = None
    atoms: Optional[List[int]] = None
    signs: Optional[List[float]] = None
    index: Optional[int] = None


class ConstantEstimate(BaseModel):
    name: str
    value: float
    witness: Witness
    method: Literal["exhaustive", "random+refine"]
    exact: bool = False
    candidates: int = 0
    refine_steps: int = 0
    notes: Optional[str] = None


class RieszViolation(BaseModel):
    f: List[float]
    g: List[float]
    ratio: float


class CoordinateBound(BaseModel):
    atom: int
    bound: float
    unit_norm: float
    limit: float
    holds: bool
    witness: List[float]


class CoordinateBoundsReport(BaseModel):
    restriction: float
    bounds: List[CoordinateBound]
    holds: bool


class MultiplierReport(BaseModel):
    mode: Literal["strict", "diagnostic"]
    pairs: int
    product_bound: float = 4.0
    max_product_ratio: float
    max_modulus_ratio: float
    violations: int
    witness: Optional[Witness] = None


class VNormReport(BaseModel):
    mode: Literal["strict", "diagnostic"]
    samples: int
    lower_factor: float
    upper_factor: float
    min_ratio: float
    max_ratio: float
    bound_violations: int
    cone_mismatches: int
    triangle_violations: int
    worst_triangle_ratio: float
    witness: Optional[Witness] = None


class SimpleMonotonicityReport(BaseModel):
    mode: Literal["strict", "diagnostic"]
    samples: int
    max_ratio: float
    violations: int
    witness: Optional[Witness] = None


class EquivalenceReport(BaseModel):
    lower: float
    upper: float
    lower_witness: List[float]
    upper_witness: List[float]
    candidates: int


class RelationCheck(BaseModel):
    name: str
    lhs: str
    rhs: str
    lhs_value: Optional[float] = None
    rhs_value: Optional[float] = None
    holds: bool
    asserted: bool = True
    detail: str = ""


class Verdict(BaseModel):
    holds: bool
    constant: Optional[float] = None
    certified: bool = False


class RunConfigEcho(BaseModel):
    spec: Dict[str, Any]
    dimension: int
    seed: int
    budget: int
    refine_steps: int
    tol: float


class PropertyReport(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = Field(default=SCHEMA_VERSION, alias="schema")
    config: RunConfigEcho
    constants: Dict[str, ConstantEstimate]
    verdicts: Dict[str, Verdict]
    riesz_violation: Optional[RieszViolation] = None
    coordinate_bounds: CoordinateBoundsReport
    multiplier: MultiplierReport
    vnorm_equivalence: VNormReport
    simple_monotonicity: SimpleMonotonicityReport
    relations: List[RelationCheck]
    audit_passed: bool
    notes: List[str] = []

    def to_json_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


class BodyDiagnosticsReport(BaseModel):
    samples: int
    box_radius: float
    symmetry_violations: int
    symmetry_witness: Optional[List[float]] = None
    convexity_violations: int
    convexity_witness: Optional[List[List[float]]] = None
    unbounded_directions: int
    unbounded_witness: Optional[List[float]] = None
    absorbing: bool
    inradius_estimate: float
    passed: bool


# Gallery Schemas
class GalleryRow(BaseModel):
    label: str
    observed: float
    expected: float
    relation: Literal["eq", "ge", "le"] = "eq"
    provenance: ProvenanceEnum
    tol: float
    passed: bool


class GalleryDiagnostic(BaseModel):
    label: str
    dimension: int
    value: float
    provenance: ProvenanceEnum = ProvenanceEnum.DERIVED


class GalleryTable(BaseModel):
    entry: str
    dimension: int
    rows: List[GalleryRow]
    diagnostics: List[GalleryDiagnostic] = []
    monotone_growth: Optional[bool] = None
    notes: List[str] = []
    passed: bool


class GalleryEntryInfo(BaseModel):
    name: str
    description: str
    default_dimension: int


# CLI Schemas
class RunConfig(BaseModel):
    subcommand: Literal["analyze", "certify", "gauge", "gallery"]
    spec_path: Optional[str] = None
    seed: int
    budget: int = Field(gt=0)
    refine_steps: int = Field(ge=0)
    dimension: Optional[int] = Field(default=None, gt=0)
    tol: float = Field(gt=0)
    output_format: Literal["json", "csv", "text"] = "text"
    output_path: Optional[str] = None
    profile_path: Optional[str] = None
    jobs: int = Field(default=1, gt=0)


class ConstantRange(BaseModel):
    min: Optional[float] = None
    max: Optional[float] = None


class CertifyProfile(_SpecModel):
    expect: Dict[
        Literal["strictly_rectangular", "rectangular", "monotone", "riesz", "ideal", "unconditional", "audit"],
        bool,
    ] = {}
    ranges: Dict[str, ConstantRange] = {}


# API request Schemas
class AnalysisRequest(BaseModel):
    spec: Dict[str, Any]
    dimension: Optional[int] = Field(default=None, gt=0)
    seed: Optional[int] = None
    budget: Optional[int] = Field(default=None, gt=0)
    refine_steps: Optional[int] = Field(default=None, ge=0)


class EvaluateRequest(BaseModel):
    spec: Dict[str, Any]
    dimension: Optional[int] = Field(default=None, gt=0)
    points: List[List[float]] = Field(min_length=1)


class GaugeRequest(BaseModel):
    body: Dict[str, Any]
    point: List[float] = Field(min_length=1)
    tol: Optional[float] = Field(default=None, gt=0)


class DiagnosticsRequest(BaseModel):
    body: Dict[str, Any]
    dimension: int = Field(gt=0)
    samples: Optional[int] = Field(default=None, gt=0)
    seed: int = 0

