"""
Truncated unramified rings O_K / p^N, identified with the Witt vectors W_N(F_q).

Elements are coordinate vectors over the power basis 1, g, ..., g^(f-1) where g
is a root of a monic lift of an irreducible polynomial over F_p. Witt
coordinates and addition polynomials are never materialised.
"""
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from sympy import Poly, symbols

from padic_lift.core.config import resolve_size_limit, settings
from padic_lift.core.exceptions import (
    InvalidInput,
    NonUnit,
    NotIrreducible,
    PrecisionError,
    guard_size,
)
from padic_lift.services.padic_core import (
    IntPolynomial,
    Number,
    Polynomial,
    Valuation,
    require_prime,
    residue_of,
    valuation,
)

logger = logging.getLogger(__name__)

# Monic lifts of irreducible polynomials over F_p, keyed by (p, f); constant term first.
BUILTIN_MODULI: Dict[Tuple[int, int], Tuple[int, ...]] = {
    (2, 2): (1, 1, 1),
    (3, 2): (1, 0, 1),
    (5, 2): (2, 0, 1),
    (2, 3): (1, 1, 0, 1),
    (3, 3): (1, 2, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
}

_Z = symbols("z")


@lru_cache(maxsize=128)
def is_irreducible_mod_p(coefficients: Tuple[int, ...], p: int) -> bool:
    """Irreducibility of the reduction over F_p (sympy factors over GF(p))."""
    reduced = [c % p for c in reversed(coefficients)]
    if not any(reduced):
        return False
    return bool(Poly(reduced, _Z, modulus=p).is_irreducible)


# ============ CONTEXT ============

class UnramifiedContext(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    f: int = Field(..., ge=1)
    modulus: IntPolynomial
    precision: int = Field(..., ge=1)

    @field_validator("p")
    @classmethod
    def p_is_prime(cls, v: int) -> int:
        return require_prime(v)

    @model_validator(mode="after")
    def check_modulus(self) -> "UnramifiedContext":
        if self.f > settings.MAX_RESIDUE_DEGREE:
            raise InvalidInput(f"residue degree {self.f} exceeds {settings.MAX_RESIDUE_DEGREE}")
        if self.modulus.degree != self.f or self.modulus.leading_coefficient != 1:
            raise InvalidInput(f"modulus {self.modulus} must be monic of degree {self.f}")
        if not is_irreducible_mod_p(self.modulus.coefficients, self.p):
            raise NotIrreducible(f"{self.modulus} is reducible modulo {self.p}")
        return self

    @classmethod
    def builtin(cls, p: int, f: int, precision: int) -> "UnramifiedContext":
        if f == 1:
            coeffs: Tuple[int, ...] = (0, 1)
        elif (p, f) in BUILTIN_MODULI:
            coeffs = BUILTIN_MODULI[(p, f)]
        else:
            raise InvalidInput(f"no built-in modulus for p={p}, f={f}; pass one explicitly")
        return cls(p=p, f=f, modulus=IntPolynomial(coefficients=coeffs), precision=precision)

    @property
    def q(self) -> int:
        return self.p ** self.f

    @property
    def residue_modulus(self) -> int:
        return self.p ** self.precision

    @property
    def cardinality(self) -> int:
        return self.q ** self.precision

    def with_precision(self, n: int) -> "UnramifiedContext":
        if n == self.precision:
            return self
        return UnramifiedContext(p=self.p, f=self.f, modulus=self.modulus, precision=n)

    def element(self, coeffs: Sequence[int]) -> "OkElement":
        return OkElement(context=self, coeffs=tuple(coeffs))

    def scalar(self, c: Number) -> "OkElement":
        return self.element([residue_of(c, self.residue_modulus)])

    @property
    def zero(self) -> "OkElement":
        return self.element([])

    @property
    def one(self) -> "OkElement":
        return self.scalar(1)

    @property
    def generator(self) -> "OkElement":
        if self.f == 1:
            # z - 0 is the modulus, so the basis element 1 is the only coordinate
            return self.zero
        return self.element([0, 1])

    def from_index(self, index: int) -> "OkElement":
        coeffs, base = [], self.residue_modulus
        for _ in range(self.f):
            index, c = divmod(index, base)
            coeffs.append(c)
        return self.element(coeffs)

    def elements(self, size_limit: Optional[int] = None) -> Iterator["OkElement"]:
        """Every element of O_K/p^N in index order."""
        guard_size(self.cardinality, resolve_size_limit(size_limit), "unramified residue ring")
        for i in range(self.cardinality):
            yield self.from_index(i)

    def __str__(self) -> str:
        return f"W_{self.precision}(F_{self.q}) mod {self.modulus}"


# ============ ELEMENTS ============

class OkElement(BaseModel):
    """Coordinates over the power basis, each canonical in [0, p^N)."""
    model_config = ConfigDict(frozen=True)

    context: UnramifiedContext
    coeffs: Tuple[int, ...]

    @model_validator(mode="before")
    @classmethod
    def canonicalize(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("context"), UnramifiedContext):
            ctx = data["context"]
            raw = list(data.get("coeffs", ()))
            if len(raw) > ctx.f:
                raise InvalidInput(f"{len(raw)} coordinates for a degree-{ctx.f} extension")
            raw += [0] * (ctx.f - len(raw))
            data = {**data, "coeffs": tuple(int(c) % ctx.residue_modulus for c in raw)}
        return data

    @property
    def precision(self) -> int:
        return self.context.precision

    @property
    def index(self) -> int:
        base = self.context.residue_modulus
        return sum(c * base ** j for j, c in enumerate(self.coeffs))

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    @property
    def is_unit(self) -> bool:
        return any(c % self.context.p for c in self.coeffs)

    def _align(self, other: Any) -> Tuple["OkElement", "OkElement"]:
        if isinstance(other, (int, Fraction)):
            return self, self.context.scalar(other)
        if not isinstance(other, OkElement):
            raise InvalidInput(f"cannot combine {type(other).__name__} with an O_K element")
        a, b = self.context, other.context
        if (a.p, a.f, a.modulus) != (b.p, b.f, b.modulus):
            raise InvalidInput("elements live in different unramified contexts")
        n = min(a.precision, b.precision)
        return self.truncate(n), other.truncate(n)

    def __add__(self, other: Any) -> "OkElement":
        a, b = self._align(other)
        return a.context.element([x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self) -> "OkElement":
        return self.context.element([-c for c in self.coeffs])

    def __sub__(self, other: Any) -> "OkElement":
        a, b = self._align(other)
        return a.context.element([x - y for x, y in zip(a.coeffs, b.coeffs)])

    def __rsub__(self, other: Any) -> "OkElement":
        return (-self) + other

    def __mul__(self, other: Any) -> "OkElement":
        a, b = self._align(other)
        ctx = a.context
        f, mod = ctx.f, ctx.residue_modulus
        prod = [0] * (2 * f - 1)
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    prod[i + j] += x * y
        # reduce by the monic modulus from the top degree down
        m = ctx.modulus.coefficients
        for i in range(len(prod) - 1, f - 1, -1):
            c = prod[i] % mod
            if c:
                for j in range(f):
                    prod[i - f + j] -= c * m[j]
            prod[i] = 0
        return ctx.element(prod[:f])

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "OkElement":
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.context.one, self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "OkElement":
        if not self.is_unit:
            raise NonUnit(self.valuation())
        ctx = self.context
        # x^(q-2) inverts the residue; Newton y <- y (2 - x y) doubles the precision
        y = (self.truncate(1) ** (ctx.q - 2)).lift(ctx.precision)
        for _ in range(ctx.precision.bit_length() + 1):
            if self * y == ctx.one:
                break
            y = y * (2 - self * y)
        if self * y != ctx.one:
            raise RuntimeError(f"inverse of {self} did not converge")
        return y

    def valuation(self) -> Valuation:
        if self.is_zero:
            return Valuation.at_least(self.precision)
        return Valuation.finite(min(valuation(c, self.context.p).value for c in self.coeffs if c))

    def truncate(self, m: int) -> "OkElement":
        if m > self.precision or m < 1:
            raise PrecisionError(f"cannot truncate precision {self.precision} to {m}")
        if m == self.precision:
            return self
        return self.context.with_precision(m).element(self.coeffs)

    def lift(self, n: int) -> "OkElement":
        if n < self.precision:
            raise PrecisionError(f"lift target {n} is below precision {self.precision}")
        return self.context.with_precision(n).element(self.coeffs)

    def __str__(self) -> str:
        names = ["1", "g"] + [f"g^{j}" for j in range(2, self.context.f)]
        terms = [f"{c}*{names[j]}" if j else str(c) for j, c in enumerate(self.coeffs) if c]
        return (" + ".join(terms) or "0") + f" (mod {self.context.p}^{self.precision})"


class WittCylinder(BaseModel):
    """The fiber of reduction to depth N over a residue."""
    model_config = ConfigDict(frozen=True)

    depth: int = Field(..., ge=1)
    residue: OkElement

    @model_validator(mode="after")
    def residue_at_depth(self) -> "WittCylinder":
        if self.residue.precision != self.depth:
            raise PrecisionError(f"cylinder residue must have precision {self.depth}")
        return self

    def contains(self, x: OkElement) -> bool:
        return x.precision >= self.depth and x.truncate(self.depth) == self.residue


# ============ RING OPERATIONS ============

def truncate(x: OkElement, m: int) -> OkElement:
    return x.truncate(m)


def evaluate_polynomial_ok(f: Polynomial, x: OkElement) -> OkElement:
    """Horner evaluation of an integral (or p-integral rational) polynomial at x."""
    ctx = x.context
    acc = ctx.zero
    for c in reversed(f.coefficients):
        acc = acc * x + ctx.scalar(c)
    return acc


def teichmuller(xbar: OkElement, target_n: int) -> OkElement:
    """
    The unique lift of ``xbar`` (read at depth 1) fixed by z -> z^q, at precision target_n.
    """
    ctx = xbar.context.with_precision(target_n)
    xi = ctx.element(xbar.truncate(1).coeffs)
    q = ctx.q
    for _ in range(target_n):
        nxt = xi ** q
        if nxt == xi:
            break
        xi = nxt
    if xi ** q != xi:
        raise RuntimeError(f"Teichmüller iteration did not stabilise for {xbar}")
    return xi


@lru_cache(maxsize=64)
def _frobenius_generator_image(ctx: UnramifiedContext) -> OkElement:
    """The root of the modulus congruent to g^p, Hensel-lifted to full precision."""
    modulus = ctx.modulus
    d_modulus = modulus.derivative()
    r = ctx.generator ** ctx.p
    for _ in range(ctx.precision + 1):
        value = evaluate_polynomial_ok(modulus, r)
        if value.is_zero:
            break
        slope = evaluate_polynomial_ok(d_modulus, r)
        if not slope.is_unit:
            # separable reduction makes this impossible
            raise RuntimeError(f"{modulus} has a repeated root modulo {ctx.p}")
        r = r - value * slope.inverse()
    if not evaluate_polynomial_ok(modulus, r).is_zero:
        raise RuntimeError(f"Frobenius lift of the generator did not converge in {ctx}")
    logger.debug(f"🔍 Frobenius sends g to {r}")
    return r


def frobenius(x: OkElement) -> OkElement:
    """The automorphism lifting z -> z^p on the residue field."""
    ctx = x.context
    r = _frobenius_generator_image(ctx)
    acc, power = ctx.zero, ctx.one
    for c in x.coeffs:
        acc = acc + power * c
        power = power * r
    return acc


def _divide_by_p(y: OkElement) -> OkElement:
    ctx = y.context
    if any(c % ctx.p for c in y.coeffs):
        raise PrecisionError(f"{y} is not divisible by {ctx.p}")
    return ctx.with_precision(ctx.precision - 1).element([c // ctx.p for c in y.coeffs])


def teichmuller_digits(x: OkElement, n: int) -> List[OkElement]:
    """Depth-1 digits d_0..d_{n-1} with x = sum_i T(d_i) p^i modulo p^n."""
    if n > x.precision:
        raise PrecisionError(f"need precision {n}, element has {x.precision}")
    digits: List[OkElement] = []
    y = x.truncate(n)
    for i in range(n):
        d = y.truncate(1)
        digits.append(d)
        if i == n - 1:
            break
        y = _divide_by_p(y - teichmuller(d, y.precision))
    return digits


def witt_coordinates(x: OkElement, n: int) -> List[OkElement]:
    """Witt components x_i = d_i^(p^i) of the truncated vector pi_n(x)."""
    p = x.context.p
    return [d ** (p ** i) for i, d in enumerate(teichmuller_digits(x, n))]


def verschiebung_shift_check(z: OkElement, n: int) -> bool:
    """pi_{n+1}(p z) = V(F(pi_n(z))): multiplication by p shifts and Frobenius-twists the digits."""
    if z.precision < n + 1:
        raise PrecisionError(f"precision {z.precision} < {n + 1}")
    p = z.context.p
    shifted = witt_coordinates((z * p).truncate(n + 1), n + 1)
    expected = [z.context.with_precision(1).zero] + [w ** p for w in witt_coordinates(z, n)]
    holds = shifted == expected
    if not holds:
        logger.warning(f"⚠️ Verschiebung identity fails for {z}")
    return holds


def witt_cylinder_partition(ctx: UnramifiedContext, n: int, size_limit: Optional[int] = None) -> List[WittCylinder]:
    if n > ctx.precision:
        raise PrecisionError(f"depth {n} exceeds context precision {ctx.precision}")
    level = ctx.with_precision(n)
    return [WittCylinder(depth=n, residue=e) for e in level.elements(size_limit)]


def residue_field_elements(ctx: UnramifiedContext) -> List[OkElement]:
    return list(ctx.with_precision(1).elements())
