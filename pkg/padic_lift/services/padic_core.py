"""
Exact truncated p-adic arithmetic: residues with a precision, valuations,
balls with integer radius exponents, and Gauss-norm bounds of polynomials.

Radii and norms are integer exponents of p^-1 throughout (magnitude p^-e);
nothing here ever touches floating point.
"""
import logging
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import zip_longest
from math import comb, gcd
from typing import Any, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_serializer, model_validator
from sympy import isprime, multiplicity

from padic_lift.core.exceptions import (
    DegenerateAffine,
    InvalidInput,
    NonUnit,
    NotPrime,
    PrecisionError,
)

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]


# ============ PRIMES ============

@lru_cache(maxsize=512)
def is_prime(p: int) -> bool:
    return p >= 2 and bool(isprime(p))


def require_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise NotPrime(p)
    return p


# ============ VALUATIONS & NORM EXPONENTS ============

class Valuation(BaseModel):
    """
    A p-adic valuation: a finite integer, +inf for the exact zero, or
    AtLeast(N) for a residue that vanishes at working precision N.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["finite", "infinite", "at_least"]
    value: Optional[int] = None

    @model_validator(mode="after")
    def check_payload(self) -> "Valuation":
        if (self.kind == "infinite") != (self.value is None):
            raise ValueError("only the infinite valuation carries no value")
        return self

    @classmethod
    def finite(cls, v: int) -> "Valuation":
        return cls(kind="finite", value=v)

    @classmethod
    def infinity(cls) -> "Valuation":
        return cls(kind="infinite")

    @classmethod
    def at_least(cls, n: int) -> "Valuation":
        return cls(kind="at_least", value=n)

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def is_infinite(self) -> bool:
        return self.kind == "infinite"

    @property
    def is_exact(self) -> bool:
        return self.kind != "at_least"

    @model_serializer
    def as_text(self) -> str:
        return str(self)

    def exponent(self) -> "NormExponent":
        """The magnitude exponent; a truncated zero has no exact exponent."""
        if self.kind == "at_least":
            raise PrecisionError(f"valuation {self} is only known as a lower bound")
        return NormExponent.of(self.value)

    def __str__(self) -> str:
        if self.kind == "infinite":
            return "+inf"
        if self.kind == "at_least":
            return f">={self.value}"
        return str(self.value)


class NormExponent(BaseModel):
    """Exponent e of a magnitude p^-e; ``value=None`` is +inf (the zero magnitude)."""
    model_config = ConfigDict(frozen=True)

    value: Optional[int] = None

    @model_serializer
    def as_text(self) -> str:
        return str(self)

    @classmethod
    def of(cls, v: Optional[int]) -> "NormExponent":
        return cls(value=v)

    @classmethod
    def infinity(cls) -> "NormExponent":
        return cls(value=None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    def _key(self) -> Tuple[int, int]:
        return (1, 0) if self.value is None else (0, self.value)

    @staticmethod
    def _coerce(other: Any) -> "NormExponent":
        if isinstance(other, NormExponent):
            return other
        if isinstance(other, int):
            return NormExponent(value=other)
        return NotImplemented

    def __eq__(self, other: Any) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.value == other.value

    def __hash__(self) -> int:
        return hash(("NormExponent", self.value))

    def __lt__(self, other: Any) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._key() < other._key()

    def __le__(self, other: Any) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._key() <= other._key()

    def __gt__(self, other: Any) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._key() > other._key()

    def __ge__(self, other: Any) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._key() >= other._key()

    def __add__(self, other: Any) -> "NormExponent":
        # product of magnitudes
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_infinite or other.is_infinite:
            return NormExponent.infinity()
        return NormExponent(value=self.value + other.value)

    __radd__ = __add__

    def __str__(self) -> str:
        return "+inf" if self.value is None else str(self.value)


INFINITY = NormExponent.infinity()


def valuation(z: Number, p: int) -> Valuation:
    """Largest v with p^v | z (v(a/b) = v(a) - v(b) for rationals); +inf for zero."""
    require_prime(p)
    if z == 0:
        return Valuation.infinity()
    if isinstance(z, Fraction):
        return Valuation.finite(int(multiplicity(p, abs(z.numerator))) - int(multiplicity(p, z.denominator)))
    return Valuation.finite(int(multiplicity(p, abs(int(z)))))


def exponent_of(z: Number, p: int) -> NormExponent:
    return valuation(z, p).exponent()


def residue_of(q: Number, modulus: int) -> int:
    """Canonical residue of a rational whose denominator is invertible mod ``modulus``."""
    if isinstance(q, Fraction):
        if gcd(q.denominator, modulus) != 1:
            raise NonUnit(f"denominator {q.denominator}", detail=f"{q} has no residue modulo {modulus}")
        return q.numerator * pow(q.denominator, -1, modulus) % modulus
    return int(q) % modulus


# ============ TRUNCATED P-ADIC INTEGERS ============

class PadicInt(BaseModel):
    """A residue modulo p^precision; mixed-precision arithmetic closes at the smaller precision."""
    model_config = ConfigDict(frozen=True)

    p: int
    precision: int = Field(..., ge=1)
    value: int

    @model_validator(mode="before")
    @classmethod
    def canonicalize(cls, data: Any) -> Any:
        if isinstance(data, dict) and all(isinstance(data.get(k), int) for k in ("p", "precision", "value")):
            if data["precision"] >= 1 and data["p"] >= 2:
                data = {**data, "value": data["value"] % data["p"] ** data["precision"]}
        return data

    @field_validator("p")
    @classmethod
    def p_is_prime(cls, v: int) -> int:
        return require_prime(v)

    @classmethod
    def from_int(cls, z: Number, p: int, precision: int) -> "PadicInt":
        return cls(p=p, precision=precision, value=residue_of(z, p ** precision))

    @property
    def modulus(self) -> int:
        return self.p ** self.precision

    def _coerce(self, other: Any) -> Optional["PadicInt"]:
        if isinstance(other, PadicInt):
            if other.p != self.p:
                raise InvalidInput(f"cannot mix {self.p}-adic and {other.p}-adic residues")
            return other
        if isinstance(other, (int, Fraction)):
            return PadicInt.from_int(other, self.p, self.precision)
        return None

    def _build(self, value: int, other: "PadicInt") -> "PadicInt":
        return PadicInt(p=self.p, precision=min(self.precision, other.precision), value=value)

    def __add__(self, other: Any) -> "PadicInt":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._build(self.value + other.value, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "PadicInt":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._build(self.value - other.value, other)

    def __rsub__(self, other: Any) -> "PadicInt":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._build(other.value - self.value, other)

    def __neg__(self) -> "PadicInt":
        return PadicInt(p=self.p, precision=self.precision, value=-self.value)

    def __mul__(self, other: Any) -> "PadicInt":
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self._build(self.value * other.value, other)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "PadicInt":
        if e < 0:
            return self.inverse() ** (-e)
        return PadicInt(p=self.p, precision=self.precision, value=pow(self.value, e, self.modulus))

    def __int__(self) -> int:
        return self.value

    @property
    def is_unit(self) -> bool:
        return self.value % self.p != 0

    def valuation(self) -> Valuation:
        if self.value == 0:
            return Valuation.at_least(self.precision)
        return valuation(self.value, self.p)

    def inverse(self) -> "PadicInt":
        if not self.is_unit:
            raise NonUnit(self.valuation())
        return PadicInt(p=self.p, precision=self.precision, value=pow(self.value, -1, self.modulus))

    def truncate(self, m: int) -> "PadicInt":
        if m > self.precision or m < 1:
            raise PrecisionError(f"cannot truncate precision {self.precision} to {m}")
        return PadicInt(p=self.p, precision=m, value=self.value)

    def lift(self, n: int) -> "PadicInt":
        """Re-embed the canonical residue at a higher precision."""
        if n < self.precision:
            raise PrecisionError(f"lift target {n} is below precision {self.precision}")
        return PadicInt(p=self.p, precision=n, value=self.value)

    def digits(self) -> List[int]:
        out, v = [], self.value
        for _ in range(self.precision):
            v, d = divmod(v, self.p)
            out.append(d)
        return out

    def __str__(self) -> str:
        return f"{self.value} + O({self.p}^{self.precision})"


# ============ BALLS ============

class BallNesting(str, Enum):
    DISJOINT = "disjoint"
    FIRST_INSIDE_SECOND = "first_inside_second"
    SECOND_INSIDE_FIRST = "second_inside_first"
    EQUAL = "equal"


class Ball(BaseModel):
    """Closed ball B(center, p^-radius_exp) in Z_p; equality is set equality."""
    model_config = ConfigDict(frozen=True)

    center: int
    radius_exp: int = Field(..., ge=0)
    p: int

    @field_validator("p")
    @classmethod
    def p_is_prime(cls, v: int) -> int:
        return require_prime(v)

    @property
    def modulus(self) -> int:
        return self.p ** self.radius_exp

    @property
    def canonical_center(self) -> int:
        return self.center % self.modulus

    def contains(self, z: int) -> bool:
        return (z - self.center) % self.modulus == 0

    def residues(self, depth: int) -> Iterator[int]:
        """All residues mod p^depth lying in the ball."""
        if depth < self.radius_exp:
            raise PrecisionError(f"depth {depth} is coarser than the ball radius p^-{self.radius_exp}")
        base, step = self.canonical_center, self.modulus
        for k in range(self.p ** (depth - self.radius_exp)):
            yield base + k * step

    def refine(self, m: int) -> "Ball":
        """The depth-m ball containing this one (keep the first m digits)."""
        if m > self.radius_exp:
            raise PrecisionError(f"depth {m} is finer than p^-{self.radius_exp}")
        return Ball(center=self.center % self.p ** m, radius_exp=m, p=self.p)

    def children(self) -> List["Ball"]:
        return [Ball(center=c, radius_exp=self.radius_exp + 1, p=self.p) for c in self.residues(self.radius_exp + 1)]

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, Ball):
            return NotImplemented
        return (self.p, self.radius_exp, self.canonical_center) == (other.p, other.radius_exp, other.canonical_center)

    def __hash__(self) -> int:
        return hash((self.p, self.radius_exp, self.canonical_center))

    def __str__(self) -> str:
        return f"B({self.center}, {self.p}^-{self.radius_exp})"


def ball_equal(c: int, c2: int, radius_exp: int, p: int) -> bool:
    """B(c, p^-n) == B(c2, p^-n) iff v(c - c2) >= n."""
    v = valuation(c - c2, p)
    return v.is_infinite or v.value >= radius_exp


def ball_nesting(b1: Ball, b2: Ball) -> BallNesting:
    if b1.p != b2.p:
        raise InvalidInput(f"balls over different primes ({b1.p}, {b2.p})")
    # two ultrametric balls are either disjoint or nested
    if not ball_equal(b1.center, b2.center, min(b1.radius_exp, b2.radius_exp), b1.p):
        return BallNesting.DISJOINT
    if b1.radius_exp == b2.radius_exp:
        return BallNesting.EQUAL
    if b1.radius_exp > b2.radius_exp:
        return BallNesting.FIRST_INSIDE_SECOND
    return BallNesting.SECOND_INSIDE_FIRST


def affine_image(u: Number, alpha: Number, beta: Number, b: Ball) -> Ball:
    """Image of ``b`` under z -> beta + u (z - alpha)."""
    if u == 0:
        raise DegenerateAffine()
    radius_exp = b.radius_exp + valuation(u, b.p).value
    if radius_exp < 0:
        raise InvalidInput(f"image of {b} is larger than the unit ball")
    center = Fraction(beta) + Fraction(u) * (b.center - Fraction(alpha))
    return Ball(center=residue_of(center, b.p ** radius_exp), radius_exp=radius_exp, p=b.p)


def minimal_covering_ball(residues: Iterable[int], p: int, depth: int) -> Tuple[Ball, bool]:
    """
    Smallest ball containing a set of residues mod p^depth, and whether the set
    fills that ball completely (i.e. the set *is* the ball at this depth).
    """
    values = sorted({r % p ** depth for r in residues})
    if not values:
        raise InvalidInput("cannot cover an empty residue set")
    anchor, radius_exp = values[0], depth
    for r in values[1:]:
        v = valuation(r - anchor, p)
        radius_exp = min(radius_exp, v.value)
    ball = Ball(center=anchor % p ** radius_exp, radius_exp=radius_exp, p=p)
    return ball, len(values) == p ** (depth - radius_exp)


# ============ EXACT POLYNOMIALS ============

def _strip(coefficients: Sequence[Any]) -> Tuple[Any, ...]:
    coeffs = list(coefficients)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


class Polynomial(BaseModel):
    """
    Exact univariate polynomial, constant term first. Subclasses pin the
    coefficient ring; arithmetic returns the narrowest class that holds the result.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    coefficients: Tuple[Any, ...] = ()

    @field_serializer("coefficients")
    def serialize_coefficients(self, coeffs: Tuple[Any, ...]) -> List[Union[int, str]]:
        return [c if isinstance(c, int) else str(c) for c in coeffs]

    @property
    def degree(self) -> int:
        """-1 for the zero polynomial."""
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def coefficient(self, k: int) -> Number:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else 0

    @property
    def leading_coefficient(self) -> Number:
        return self.coefficients[-1] if self.coefficients else 0

    def is_p_integral(self, p: int) -> bool:
        return all(valuation(c, p).is_infinite or valuation(c, p).value >= 0 for c in self.coefficients)

    # --- algebra ---

    def __add__(self, other: "Polynomial") -> "Polynomial":
        other = as_polynomial(other)
        return make_polynomial([a + b for a, b in zip_longest(self.coefficients, other.coefficients, fillvalue=0)])

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return make_polynomial([-c for c in self.coefficients])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-as_polynomial(other))

    def __rsub__(self, other: "Polynomial") -> "Polynomial":
        return as_polynomial(other) - self

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        other = as_polynomial(other)
        if self.is_zero or other.is_zero:
            return make_polynomial([])
        out: List[Number] = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a == 0:
                continue
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return make_polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        result: Polynomial = make_polynomial([1])
        base: Polynomial = self
        while e > 0:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def compose(self, inner: "Polynomial") -> "Polynomial":
        """self(inner(z)) by Horner's rule."""
        inner = as_polynomial(inner)
        result: Polynomial = make_polynomial([])
        for c in reversed(self.coefficients):
            result = result * inner + make_polynomial([c])
        return result

    def derivative(self) -> "Polynomial":
        return make_polynomial([k * c for k, c in enumerate(self.coefficients)][1:])

    # --- evaluation ---

    def evaluate(self, x: Number) -> Number:
        acc: Number = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def __call__(self, x: Number) -> Number:
        return self.evaluate(x)

    def evaluate_mod(self, x: int, modulus: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * x + residue_of(c, modulus)) % modulus
        return acc

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0:
                continue
            mag = abs(c)
            if k == 0:
                body = str(mag)
            else:
                body = ("" if mag == 1 else f"{mag}*") + ("z" if k == 1 else f"z^{k}")
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text


class IntPolynomial(Polynomial):
    coefficients: Tuple[int, ...] = ()

    @field_validator("coefficients", mode="before")
    @classmethod
    def normalize(cls, v: Any) -> Tuple[int, ...]:
        return _strip(int(c) for c in v)


class RationalPolynomial(Polynomial):
    coefficients: Tuple[Fraction, ...] = ()

    @field_validator("coefficients", mode="before")
    @classmethod
    def normalize(cls, v: Any) -> Tuple[Fraction, ...]:
        return _strip(Fraction(c) for c in v)


def make_polynomial(coefficients: Iterable[Number]) -> Polynomial:
    """IntPolynomial when every coefficient is an integer, RationalPolynomial otherwise."""
    coeffs = list(coefficients)
    if all(isinstance(c, int) or (isinstance(c, Fraction) and c.denominator == 1) for c in coeffs):
        return IntPolynomial(coefficients=[int(c) for c in coeffs])
    return RationalPolynomial(coefficients=coeffs)


def as_polynomial(value: Any) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, Fraction)):
        return make_polynomial([value])
    raise InvalidInput(f"cannot interpret {value!r} as a polynomial")


def monomial(k: int, c: Number = 1) -> Polynomial:
    return make_polynomial([0] * k + [c])


IDENTITY = IntPolynomial(coefficients=(0, 1))


def recenter(f: Polynomial, a: Number) -> Polynomial:
    """Taylor coefficients c_k at ``a``: f(z) = sum c_k (z - a)^k, via binomial expansion."""
    n = len(f.coefficients)
    return make_polynomial(
        [sum(comb(j, k) * f.coefficients[j] * a ** (j - k) for j in range(k, n)) for k in range(n)]
    )


# ============ NORMS ON BALLS ============

def gauss_norm_on_ball(f: Polynomial, b: Ball) -> NormExponent:
    """min_k (v(c_k) + k n) over the Taylor coefficients at the center; bounds |f| from above."""
    best = INFINITY
    for k, c in enumerate(recenter(f, b.center).coefficients):
        if c != 0:
            best = min(best, exponent_of(c, b.p) + k * b.radius_exp)
    return best


def coefficient_stability_gap(f: Polynomial, g: Polynomial, b: Ball) -> List[NormExponent]:
    """Per-index exponents of |c_k(f) - c_k(g)| r^k at the ball's center."""
    diff = recenter(as_polynomial(f) - as_polynomial(g), b.center)
    length = max(len(f.coefficients), len(g.coefficients), 1)
    gaps = []
    for k in range(length):
        c = diff.coefficient(k)
        gaps.append(INFINITY if c == 0 else exponent_of(c, b.p) + k * b.radius_exp)
    return gaps


def point_sup_exponent(f: Polynomial, b: Ball, depth: int) -> Valuation:
    """
    Enumerated min_z v(f(z)) over the residues of the ball mod p^depth.
    AtLeast(depth) when f vanishes on the whole ball at this depth.
    """
    modulus = b.p ** depth
    best: Optional[int] = None
    for z in b.residues(depth):
        fz = f.evaluate_mod(z, modulus)
        if fz == 0:
            continue
        v = valuation(fz, b.p).value
        best = v if best is None else min(best, v)
    return Valuation.at_least(depth) if best is None else Valuation.finite(best)
