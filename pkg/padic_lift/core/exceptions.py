"""
Error hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it and a
human-readable ``detail``; structured context (valuations, witnesses) is kept
as attributes so reports can echo it.
"""
from typing import Any, Optional


class ExitCode:
    OK = 0
    INTERNAL = 1
    CERTIFICATION_FAILED = 2
    INVALID_INPUT = 3
    SIZE_LIMIT = 4


class PadicLiftError(Exception):
    exit_code: int = ExitCode.INTERNAL

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "detail": self.detail, **self.context}


# ============ INPUT ERRORS ============

class InvalidInput(PadicLiftError):
    exit_code = ExitCode.INVALID_INPUT


class NotPrime(InvalidInput):
    def __init__(self, p: int):
        super().__init__(f"{p} is not prime", p=p)


class NonUnit(InvalidInput):
    def __init__(self, valuation: Any, detail: Optional[str] = None):
        super().__init__(detail or f"element is not a unit (valuation {valuation})", valuation=str(valuation))
        self.valuation = valuation


class PrecisionError(InvalidInput):
    pass


class DegenerateAffine(InvalidInput):
    def __init__(self):
        super().__init__("affine map with zero slope has no image ball")


class DepthTooSmall(InvalidInput):
    def __init__(self, p: int, depth: int, size: int):
        super().__init__(f"{size} states do not embed into {p}^{depth} cylinders", p=p, depth=depth, size=size)


class OutOfRange(InvalidInput):
    def __init__(self, index: int, value: int, size: int):
        super().__init__(f"successor[{index}] = {value} is outside [0, {size})", index=index, value=value)
        self.index = index


class DigitOutOfRange(InvalidInput):
    def __init__(self, position: int, digit: int, p: int):
        super().__init__(f"digit {digit} at position {position} is outside [0, {p})", position=position, digit=digit)


class DuplicateCenters(InvalidInput):
    def __init__(self, center: Any):
        super().__init__(f"center {center} occurs twice", center=str(center))


class NotIsometry(InvalidInput):
    def __init__(self, alpha: Any, p: int):
        super().__init__(f"alpha = {alpha} is not a unit in Z_{p}", alpha=str(alpha), p=p)


class NonCoprimeModuli(InvalidInput):
    def __init__(self, a: int, b: int):
        super().__init__(f"moduli {a} and {b} are not coprime", moduli=[a, b])


class NotIrreducible(InvalidInput):
    pass


class PolynomialSyntaxError(InvalidInput):
    pass


# ============ CERTIFICATION ERRORS ============

class CertificationFailed(PadicLiftError):
    exit_code = ExitCode.CERTIFICATION_FAILED


class DominanceRequired(CertificationFailed):
    def __init__(self, center: Any, radius_exp: int, reason: str):
        super().__init__(
            f"linear dominance fails on B({center}, p^-{radius_exp}): {reason}",
            center=str(center),
            radius_exp=radius_exp,
        )


class CertificateRequired(CertificationFailed):
    pass


class NotCongruencePreserving(CertificationFailed):
    def __init__(self, witness: Any):
        super().__init__(f"map is not congruence-preserving: {witness}", witness=witness)
        self.witness = witness


# ============ RESOURCE ERRORS ============

class SizeLimitExceeded(PadicLiftError):
    exit_code = ExitCode.SIZE_LIMIT

    def __init__(self, requested: int, limit: int, what: str = "enumeration"):
        super().__init__(f"{what} of size {requested} exceeds limit {limit}", requested=requested, limit=limit)


def guard_size(requested: int, limit: int, what: str = "enumeration") -> None:
    if requested > limit:
        raise SizeLimitExceeded(requested, limit, what)
