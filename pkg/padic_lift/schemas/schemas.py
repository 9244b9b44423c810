from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from padic_lift.core.exceptions import DuplicateCenters, InvalidInput, NotIsometry
from padic_lift.services.graph import FunctionalGraph
from padic_lift.services.padic_core import (
    Ball,
    BallNesting,
    NormExponent,
    PadicInt,
    Polynomial,
    Valuation,
    ball_nesting,
    make_polynomial,
    require_prime,
)

# ============ SHARED UTILITIES ============

def coerce_to_tuple(v: Any) -> Any:
    """JSON hands us lists; the frozen models store tuples."""
    return tuple(v) if isinstance(v, list) else v


# ============ BALL SYSTEM SCHEMAS ============

class BallSystem(BaseModel):
    """
    Source balls, a transition on their indices, and the target family.
    Ball i must land in targets[tau[i]].
    """
    model_config = ConfigDict(frozen=True)

    balls: Tuple[Ball, ...]
    tau: Tuple[int, ...]
    targets: Tuple[Ball, ...]

    @field_validator("balls", "tau", "targets", mode="before")
    @classmethod
    def lists_to_tuples(cls, v: Any) -> Any:
        return coerce_to_tuple(v)

    @model_validator(mode="after")
    def check_shape(self) -> "BallSystem":
        n = len(self.balls)
        if n == 0:
            raise InvalidInput("a ball system needs at least one ball")
        if len(self.targets) != n or len(self.tau) != n:
            raise InvalidInput(f"{n} balls need {n} targets and a total transition")
        for i, t in enumerate(self.tau):
            if not 0 <= t < n:
                raise InvalidInput(f"tau[{i}] = {t} is not a ball index")
        if len({b.p for b in self.balls + self.targets}) != 1:
            raise InvalidInput("all balls must live over the same prime")
        self._check_disjoint()
        return self

    def _check_disjoint(self) -> None:
        radii = {b.radius_exp for b in self.balls}
        if len(radii) == 1:
            # equal radii: disjoint iff the canonical centers differ
            seen: Dict[int, int] = {}
            for b in self.balls:
                if b.canonical_center in seen:
                    raise DuplicateCenters(b.center)
                seen[b.canonical_center] = 1
            return
        for i, a in enumerate(self.balls):
            for b in self.balls[i + 1:]:
                if ball_nesting(a, b) != BallNesting.DISJOINT:
                    raise InvalidInput(f"source balls {a} and {b} overlap")

    @property
    def p(self) -> int:
        return self.balls[0].p

    def target_of(self, i: int) -> Ball:
        return self.targets[self.tau[i]]

    @property
    def fixed_indices(self) -> List[int]:
        return [i for i, t in enumerate(self.tau) if t == i]


class AffinePiece(BaseModel):
    """psi_i(z) = target_center + slope (z - source_center)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source_center: int
    target_center: int
    slope: Fraction

    @field_validator("slope", mode="before")
    @classmethod
    def slope_to_fraction(cls, v: Any) -> Fraction:
        return Fraction(v)

    @field_serializer("slope")
    def slope_as_text(self, v: Fraction) -> str:
        return str(v)

    def as_polynomial(self) -> Polynomial:
        u = self.slope
        return make_polynomial([self.target_center - u * self.source_center, u])


class PiecewiseAffine(BaseModel):
    model_config = ConfigDict(frozen=True)

    pieces: Tuple[AffinePiece, ...]


class AffineIsometry(BaseModel):
    """sigma(z) = alpha z + beta on Z_p; alpha must be a p-adic unit."""
    model_config = ConfigDict(frozen=True)

    alpha: int
    beta: int
    p: int

    @field_validator("p")
    @classmethod
    def p_is_prime(cls, v: int) -> int:
        return require_prime(v)

    @model_validator(mode="after")
    def alpha_is_unit(self) -> "AffineIsometry":
        if self.alpha % self.p == 0:
            raise NotIsometry(self.alpha, self.p)
        return self

    def as_polynomial(self) -> Polynomial:
        return make_polynomial([self.beta, self.alpha])


# ============ CERTIFICATION SCHEMAS ============

class DominanceStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    DEGENERATE_LINEAR_TERM = "degenerate_linear_term"
    INCONCLUSIVE = "inconclusive"


class DominanceVerdict(BaseModel):
    status: DominanceStatus
    c1_valuation: Valuation
    violating_index: Optional[int] = None
    slack: Optional[NormExponent] = None
    recentered: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == DominanceStatus.PASS


class InterpretationKind(str, Enum):
    CONTRACTIVE = "contractive"
    INDIFFERENT = "indifferent"
    EXPANSIVE = "expansive"


class InterpretationType(BaseModel):
    kind: InterpretationKind
    sigma_exponent: int
    meets_target: bool
    image: Ball
    enumerated_only: bool = False

    @model_validator(mode="after")
    def sign_matches_kind(self) -> "InterpretationType":
        expected = (
            InterpretationKind.CONTRACTIVE if self.sigma_exponent > 0
            else InterpretationKind.INDIFFERENT if self.sigma_exponent == 0
            else InterpretationKind.EXPANSIVE
        )
        if self.kind != expected:
            raise ValueError(f"sigma exponent {self.sigma_exponent} contradicts {self.kind.value}")
        return self


class CommutationVerdict(BaseModel):
    commutes: bool
    witness: Optional[int] = None
    checked: int
    surplus_into_domain: int = 0
    surplus_outside: int = 0

    def __bool__(self) -> bool:
        return self.commutes


class BallCertificate(BaseModel):
    index: int
    source: Ball
    target: Ball
    epsilon: NormExponent
    center_offset: Valuation
    dominance: DominanceVerdict
    image: Optional[Ball] = None
    interpretation: Optional[InterpretationType] = None
    inclusion: bool
    exact: bool


class CertifiedReport(BaseModel):
    balls: List[BallCertificate]
    certified_exact: bool
    min_epsilon: NormExponent
    max_target_exponent: int
    failing_ball: Optional[int] = None
    interpreter: bool
    with_inclusion: bool
    exact: bool
    enumeration_agrees: Optional[bool] = None

    @model_validator(mode="after")
    def hierarchy(self) -> "CertifiedReport":
        if self.exact and not self.with_inclusion:
            raise ValueError("an exact interpreter is an interpreter with inclusion")
        if self.with_inclusion and not self.interpreter:
            raise ValueError("an interpreter with inclusion is an interpreter")
        if self.certified_exact and not self.exact:
            raise ValueError("certificate claims exactness the per-ball data does not show")
        return self


class Stability(str, Enum):
    SUPERATTRACTING = "superattracting"
    CONTRACTIVE = "contractive"
    INDIFFERENT = "indifferent"
    EXPANSIVE = "expansive"


class MultiplierEntry(BaseModel):
    ball_index: int
    valuation: Valuation
    stability: Stability
    dominance_holds: bool


class InterpolationReport(BaseModel):
    polynomial: Polynomial
    coefficient_valuations: List[Valuation]
    p_integral: bool
    warnings: List[str] = Field(default_factory=list)


class GoodReductionKind(str, Enum):
    STRICT_GOOD_MATCHES = "strict_good_matches"
    STRICT_GOOD_MISMATCH = "strict_good_mismatch"
    NOT_STRICT = "not_strict"


class GoodReductionVerdict(BaseModel):
    kind: GoodReductionKind
    mismatch_vertex: Optional[int] = None
    reason: Optional[str] = None
    infinity_fixed: bool = True


class PipelineReport(BaseModel):
    polynomial: Polynomial
    psi: PiecewiseAffine
    certificate: CertifiedReport
    commutation: CommutationVerdict
    multipliers: List[MultiplierEntry]
    warnings: List[str] = Field(default_factory=list)


class CylinderEntry(BaseModel):
    """Per-Witt-cylinder verdict in an unramified context."""
    index: int
    dominance: DominanceVerdict
    sigma_exponent: Optional[int] = None


class CycleMultiplier(BaseModel):
    cycle: List[int]
    valuation: Valuation
    stability: Stability
    lifted: bool


class UnramifiedPipelineReport(BaseModel):
    polynomial: Polynomial
    context: str
    commutation: CommutationVerdict
    cylinders: List[CylinderEntry]
    cycle_multipliers: List[CycleMultiplier]
    warnings: List[str] = Field(default_factory=list)


# ============ ARITHMETIC DYNAMICS SCHEMAS ============

class CpWitness(BaseModel):
    d: int
    x: int
    y: int
    fx: int
    fy: int


class CpVerdict(BaseModel):
    is_cp: bool
    witness: Optional[CpWitness] = None

    @model_validator(mode="after")
    def failure_has_witness(self) -> "CpVerdict":
        if not self.is_cp and self.witness is None:
            raise ValueError("a congruence-preservation failure needs a witness")
        return self


class DcrtDecomposition(BaseModel):
    modulus: int
    moduli: List[int]
    components: List[FunctionalGraph]
    isomorphism_verified: bool


class Tower(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    levels: Tuple[FunctionalGraph, ...]

    @field_validator("levels", mode="before")
    @classmethod
    def lists_to_tuples(cls, v: Any) -> Any:
        return coerce_to_tuple(v)

    @model_validator(mode="after")
    def level_sizes(self) -> "Tower":
        for n, g in enumerate(self.levels, start=1):
            if g.size != self.p ** n:
                raise InvalidInput(f"level {n} has {g.size} vertices, expected {self.p ** n}")
        return self

    @property
    def height(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> FunctionalGraph:
        return self.levels[n - 1]


class CompatibilityVerdict(BaseModel):
    compatible: bool
    level: Optional[int] = None
    residue: Optional[int] = None

    def __bool__(self) -> bool:
        return self.compatible


class HenselLifted(BaseModel):
    kind: Literal["lifted"] = "lifted"
    point: PadicInt
    period: int
    multiplier: int
    trace: List[int]
    orbit: List[int]


class HenselDegenerate(BaseModel):
    kind: Literal["degenerate"] = "degenerate"
    multiplier_residue: int
    period: int


class HenselNotExactPeriod(BaseModel):
    kind: Literal["not_exact_period"] = "not_exact_period"
    divisor: int


class HenselNotPeriodic(BaseModel):
    kind: Literal["not_periodic"] = "not_periodic"
    residue: int
    period: int
    landing: int


class HenselInvalidRequest(BaseModel):
    kind: Literal["invalid_request"] = "invalid_request"
    reason: str


HenselLiftResult = Annotated[
    Union[HenselLifted, HenselDegenerate, HenselNotExactPeriod, HenselNotPeriodic, HenselInvalidRequest],
    Field(discriminator="kind"),
]


class ParabolicGrowth(BaseModel):
    seed: int
    lengths: List[int]
    parabolic: bool


class ProductPhaseVerdict(BaseModel):
    commutes: bool
    witness: Optional[List[int]] = None

    def __bool__(self) -> bool:
        return self.commutes


class Route2Verdict(BaseModel):
    level_correct: bool
    cauchy: bool
    level_witness: Optional[Tuple[int, int]] = None
    cauchy_witness: Optional[Tuple[int, NormExponent]] = None

    @property
    def passed(self) -> bool:
        return self.level_correct and self.cauchy


class RigidityVerdict(BaseModel):
    congruent: bool
    identical: bool

    @property
    def holds(self) -> bool:
        return self.identical or not self.congruent


# ============ JOB & REPORT SCHEMAS ============

class GraphFile(BaseModel):
    """
    Graph input: either an explicit successor table or a polynomial reduced mod m.
    A ``components`` list describes DCRT factors, each with its own modulus.
    """
    m: Optional[int] = Field(None, ge=1)
    successors: Optional[List[int]] = None
    polynomial: Optional[str] = None
    components: Optional[List["GraphFile"]] = None

    @model_validator(mode="after")
    def one_source(self) -> "GraphFile":
        sources = [self.successors is not None, self.polynomial is not None, self.components is not None]
        if sum(sources) != 1:
            raise InvalidInput("graph file needs exactly one of successors, polynomial, components")
        if self.successors is not None and self.m is not None and self.m != len(self.successors):
            raise InvalidInput(f"m = {self.m} but {len(self.successors)} successors given")
        if self.polynomial is not None and self.m is None:
            raise InvalidInput("a polynomial graph needs its modulus m")
        return self


class JobSpec(BaseModel):
    """Everything a run depends on; echoed verbatim in the report."""
    command: str
    input: Optional[str] = None
    polynomial: Optional[str] = None
    p: Optional[int] = None
    f: int = 1
    depth: Optional[int] = None
    precision: Optional[int] = None
    max_n: Optional[int] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)
    size_limit: int
    json_out: Optional[str] = None
    dot_out: Optional[str] = None


class Report(BaseModel):
    job: JobSpec
    results: Dict[str, Any] = Field(default_factory=dict)
    certificates: Dict[str, Any] = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)
    exit_code: int = 0

GraphFile.model_rebuild()
