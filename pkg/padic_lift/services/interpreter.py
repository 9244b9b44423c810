"""
Ball systems and their interpreters: piecewise-affine models, interpolation at
centers, linear-dominance certificates, interpretation types, the robust
exactness certificate, multipliers, good reduction, strata and conjugacy.

Every norm comparison is an exact comparison of integer exponents.
"""
import logging
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence, Set, Tuple, Union

from sympy import Poly, QQ, interpolate, symbols

from padic_lift.core.config import resolve_size_limit, settings
from padic_lift.core.exceptions import (
    CertificateRequired,
    CertificationFailed,
    DepthTooSmall,
    DominanceRequired,
    DuplicateCenters,
    InvalidInput,
    NonUnit,
    guard_size,
)
from padic_lift.schemas.schemas import (
    AffineIsometry,
    AffinePiece,
    BallCertificate,
    BallSystem,
    CertifiedReport,
    CommutationVerdict,
    CycleMultiplier,
    CylinderEntry,
    DominanceStatus,
    DominanceVerdict,
    GoodReductionKind,
    GoodReductionVerdict,
    InterpolationReport,
    InterpretationKind,
    InterpretationType,
    MultiplierEntry,
    PiecewiseAffine,
    PipelineReport,
    Stability,
    UnramifiedPipelineReport,
)
from padic_lift.services.graph import FunctionalGraph, stats
from padic_lift.services.padic_core import (
    INFINITY,
    Ball,
    BallNesting,
    NormExponent,
    Number,
    Polynomial,
    Valuation,
    ball_nesting,
    exponent_of,
    gauss_norm_on_ball,
    make_polynomial,
    minimal_covering_ball,
    recenter,
    require_prime,
    residue_of,
    valuation,
)
from padic_lift.services.unramified import (
    OkElement,
    UnramifiedContext,
    evaluate_polynomial_ok,
)

logger = logging.getLogger(__name__)

_Z = symbols("z")


# ============ BALL SYSTEMS ============

def ball_system_from_graph(g: FunctionalGraph, p: int, depth: int, size_limit: Optional[int] = None) -> BallSystem:
    """Cylinders B(x, p^-depth) for x < |X| as both domain and targets, tau = successor."""
    require_prime(p)
    if p ** depth < g.size:
        raise DepthTooSmall(p, depth, g.size)
    guard_size(g.size, resolve_size_limit(size_limit), "ball system")
    balls = tuple(Ball(center=x, radius_exp=depth, p=p) for x in range(g.size))
    return BallSystem(balls=balls, tau=g.successor, targets=balls)


def synthesize_piecewise_affine(bs: BallSystem, units: Optional[Sequence[Number]] = None) -> PiecewiseAffine:
    """
    psi_i(z) = b_tau(i) + u_i (z - a_i) with v(u_i) = t-exp - r-exp, so psi_i maps
    ball i exactly onto its target. ``units`` picks the unit part of each slope.
    """
    p = bs.p
    pieces = []
    for i, ball in enumerate(bs.balls):
        target = bs.target_of(i)
        unit = Fraction(1) if units is None else Fraction(units[i])
        if unit == 0 or valuation(unit, p).value != 0:
            raise NonUnit(valuation(unit, p), detail=f"slope unit {unit} for ball {i} is not a {p}-adic unit")
        slope = unit * Fraction(p) ** (target.radius_exp - ball.radius_exp)
        pieces.append(AffinePiece(source_center=ball.center, target_center=target.center, slope=slope))
    return PiecewiseAffine(pieces=tuple(pieces))


def units_from_candidate(f: Polynomial, bs: BallSystem) -> List[Fraction]:
    """
    Unit parts that make each affine piece the linearisation of ``f`` where the
    derivative at the center already has the right size; 1 elsewhere.
    """
    p, df = bs.p, f.derivative()
    units = []
    for i, ball in enumerate(bs.balls):
        delta = bs.target_of(i).radius_exp - ball.radius_exp
        slope = Fraction(df.evaluate(ball.center))
        if slope != 0 and valuation(slope, p).value == delta:
            units.append(slope / Fraction(p) ** delta)
        else:
            units.append(Fraction(1))
    return units


def interpolate_at_centers(bs: BallSystem) -> InterpolationReport:
    """The unique degree < N polynomial with P(a_i) = b_tau(i), exact over Q."""
    centers = [b.center for b in bs.balls]
    seen: Set[int] = set()
    for c in centers:
        if c in seen:
            raise DuplicateCenters(c)
        seen.add(c)
    values = [bs.target_of(i).center for i in range(len(centers))]

    expr = interpolate(list(zip(centers, values)), _Z)
    coeffs = [Fraction(int(c.p), int(c.q)) for c in reversed(Poly(expr, _Z, domain=QQ).all_coeffs())]
    poly = make_polynomial(coeffs)
    for a, b in zip(centers, values):
        if poly.evaluate(a) != b:
            raise RuntimeError(f"interpolant misses ({a}, {b})")

    p = bs.p
    vals = [valuation(c, p) for c in coeffs] if coeffs else []
    integral = poly.is_p_integral(p)
    warnings = []
    if not integral:
        bad = [k for k, v in enumerate(vals) if v.is_finite and v.value < 0]
        warnings.append(
            f"coefficients {bad} are not {p}-integral: the interpolant fixes center values only, "
            f"no ball mapping property follows"
        )
        logger.warning(f"⚠️ Interpolant {poly} is not {p}-integral")
    return InterpolationReport(polynomial=poly, coefficient_valuations=vals, p_integral=integral, warnings=warnings)


# ============ LINEAR DOMINANCE ============

def check_linear_dominance(f: Polynomial, b: Ball) -> DominanceVerdict:
    """
    Pass iff min_{k>=2} (v(c_k) + (k-1) n) > v(c_1) for the Taylor coefficients at
    the center; a vanishing linear term is reported as degenerate.
    """
    coeffs = recenter(f, b.center).coefficients
    recentered = [str(c) for c in coeffs]
    c1 = coeffs[1] if len(coeffs) > 1 else 0
    if c1 == 0:
        return DominanceVerdict(
            status=DominanceStatus.DEGENERATE_LINEAR_TERM,
            c1_valuation=Valuation.infinity(),
            violating_index=1,
            recentered=recentered,
        )
    v1 = exponent_of(c1, b.p)
    worst, violating = INFINITY, None
    for k in range(2, len(coeffs)):
        if coeffs[k] == 0:
            continue
        e = exponent_of(coeffs[k], b.p) + (k - 1) * b.radius_exp
        if e <= v1 and violating is None:
            violating = k
        worst = min(worst, e)
    slack = INFINITY if worst.is_infinite else NormExponent.of(worst.value - v1.value)
    return DominanceVerdict(
        status=DominanceStatus.PASS if worst > v1 else DominanceStatus.FAIL,
        c1_valuation=Valuation.finite(v1.value),
        violating_index=violating,
        slack=slack,
        recentered=recentered,
    )


def dominance_perturbation_threshold(f: Polynomial, b: Ball) -> NormExponent:
    """
    Exponent v(c_1) + n: adding any h with Gauss-norm exponent above it on ``b``
    leaves the dominance verdict unchanged.
    """
    c1 = recenter(f, b.center).coefficient(1)
    if c1 == 0:
        raise DominanceRequired(b.center, b.radius_exp, "linear term vanishes")
    return exponent_of(c1, b.p) + b.radius_exp


def _center_value(f: Polynomial, b: Ball, radius_exp: int) -> int:
    value = f.evaluate(b.center)
    if isinstance(value, Fraction) and value.denominator != 1:
        return residue_of(value, b.p ** radius_exp)
    return int(value)


def image_ball(f: Polynomial, b: Ball) -> Ball:
    """B(f(a), n + v(c_1)); exact when linear dominance holds."""
    verdict = check_linear_dominance(f, b)
    if not verdict.passed:
        raise DominanceRequired(b.center, b.radius_exp, verdict.status.value)
    radius_exp = b.radius_exp + verdict.c1_valuation.value
    if radius_exp < 0:
        raise InvalidInput(f"image of {b} is larger than the unit ball")
    return Ball(center=_center_value(f, b, radius_exp), radius_exp=radius_exp, p=b.p)


def enumerate_image(f: Polynomial, b: Ball, depth: int) -> Set[int]:
    modulus = b.p ** depth
    return {f.evaluate_mod(x, modulus) for x in b.residues(depth)}


def image_by_enumeration(f: Polynomial, b: Ball, depth: Optional[int] = None) -> Tuple[Ball, bool]:
    """Minimal ball covering f(b) mod p^depth, and whether the image fills it."""
    if depth is None:
        depth = b.radius_exp + settings.CROSS_CHECK_EXTRA_DEPTH
    return minimal_covering_ball(enumerate_image(f, b, depth), b.p, depth)


def _kind(sigma: int) -> InterpretationKind:
    if sigma > 0:
        return InterpretationKind.CONTRACTIVE
    if sigma == 0:
        return InterpretationKind.INDIFFERENT
    return InterpretationKind.EXPANSIVE


def classify_ball(f: Polynomial, source: Ball, target: Ball, allow_enumeration: bool = False) -> InterpretationType:
    """
    sigma-exponent = (n + v(c_1)) - t-exp: positive contractive, zero indifferent,
    negative expansive. Without dominance the image is only known by enumeration.
    """
    verdict = check_linear_dominance(f, source)
    if verdict.passed:
        image = image_ball(f, source)
        sigma = image.radius_exp - target.radius_exp
        meets = ball_nesting(image, target) != BallNesting.DISJOINT
        return InterpretationType(kind=_kind(sigma), sigma_exponent=sigma, meets_target=meets, image=image)
    if not allow_enumeration:
        raise DominanceRequired(source.center, source.radius_exp, verdict.status.value)
    depth = max(source.radius_exp, target.radius_exp) + settings.CROSS_CHECK_EXTRA_DEPTH
    residues = enumerate_image(f, source, depth)
    cover, _ = image_by_enumeration(f, source, depth)
    sigma = cover.radius_exp - target.radius_exp
    return InterpretationType(
        kind=_kind(sigma),
        sigma_exponent=sigma,
        meets_target=any(target.contains(r) for r in residues),
        image=cover,
        enumerated_only=True,
    )


# ============ INCLUSION BY COMMUTATION ============

def check_inclusion_by_commutation(
    f: Polynomial, g: FunctionalGraph, p: int, depth: int, size_limit: Optional[int] = None
) -> CommutationVerdict:
    """
    f(x) = F(x) mod p^depth on every state x, which for polynomial maps is the same as
    f(B_x) being inside B_F(x). Residues beyond |X| are unconstrained and only counted.
    """
    require_prime(p)
    modulus = p ** depth
    if g.size > modulus:
        raise DepthTooSmall(p, depth, g.size)
    guard_size(modulus, resolve_size_limit(size_limit), "commutation check")
    for x in range(g.size):
        if f.evaluate_mod(x, modulus) != g.successor[x]:
            logger.info(f"❌ Commutation fails at state {x}: f(x) = {f.evaluate_mod(x, modulus)}, F(x) = {g.successor[x]}")
            return CommutationVerdict(commutes=False, witness=x, checked=x + 1)
    into = sum(1 for x in range(g.size, modulus) if f.evaluate_mod(x, modulus) < g.size)
    return CommutationVerdict(
        commutes=True, checked=g.size, surplus_into_domain=into, surplus_outside=modulus - g.size - into
    )


def check_inclusion_by_commutation_ok(
    f: Polynomial, g: FunctionalGraph, ctx: UnramifiedContext, size_limit: Optional[int] = None
) -> CommutationVerdict:
    """The same check on Witt cylinders of depth ctx.precision, vertices in OkElement index order."""
    if g.size != ctx.cardinality:
        raise InvalidInput(f"graph has {g.size} vertices, {ctx} has {ctx.cardinality} cylinders")
    checked = 0
    for x in ctx.elements(size_limit):
        checked += 1
        if evaluate_polynomial_ok(f, x).index != g.successor[x.index]:
            return CommutationVerdict(commutes=False, witness=x.index, checked=checked)
    return CommutationVerdict(commutes=True, checked=checked)


# ============ ROBUST EXACTNESS ============

def finite_point_control(f: Polynomial, bs: BallSystem) -> List[Valuation]:
    """v(f(a_i) - b_tau(i)) for every ball: the centers land in their targets iff each is >= t-exp."""
    return [valuation(Fraction(f.evaluate(b.center)) - bs.target_of(i).center, bs.p) for i, b in enumerate(bs.balls)]


def _enumerated_verdicts(f: Polynomial, source: Ball, target: Ball) -> Tuple[bool, bool, bool]:
    depth = max(source.radius_exp, target.radius_exp) + settings.CROSS_CHECK_EXTRA_DEPTH
    residues = enumerate_image(f, source, depth)
    inside = [target.contains(r) for r in residues]
    inclusion = all(inside)
    exact = inclusion and len(residues) == source.p ** (depth - target.radius_exp)
    return any(inside), inclusion, exact


def _enumeration_agrees(f: Polynomial, source: Ball, image: Ball) -> bool:
    depth = max(source.radius_exp, image.radius_exp) + settings.CROSS_CHECK_EXTRA_DEPTH
    return enumerate_image(f, source, depth) == set(image.residues(depth))


def robust_exactness_certificate(
    f: Polynomial, psi: PiecewiseAffine, bs: BallSystem, cross_check: bool = False
) -> CertifiedReport:
    """
    eps_i is the Gauss-norm exponent of f - psi_i on ball i. When every eps_i exceeds
    every target exponent, f is an exact interpreter: dominance holds on each ball and
    its image is the target. Per-ball classification is always reported.
    """
    if len(psi.pieces) != len(bs.balls):
        raise InvalidInput(f"{len(psi.pieces)} affine pieces for {len(bs.balls)} balls")
    p = bs.p
    entries: List[BallCertificate] = []
    agrees: Optional[bool] = True if cross_check else None
    for i, (ball, piece) in enumerate(zip(bs.balls, psi.pieces)):
        # 1. Distance to the affine piece and the center offset
        target = bs.target_of(i)
        eps = gauss_norm_on_ball(f - piece.as_polynomial(), ball)
        offset = valuation(Fraction(f.evaluate(ball.center)) - target.center, p)

        # 2. Dominance and classification; enumeration stands in when dominance fails
        dominance = check_linear_dominance(f, ball)
        interpretation = classify_ball(f, ball, target, allow_enumeration=f.is_p_integral(p))
        if dominance.passed:
            image: Optional[Ball] = interpretation.image
            nesting = ball_nesting(image, target)
            inclusion = nesting in (BallNesting.EQUAL, BallNesting.FIRST_INSIDE_SECOND)
            exact = nesting == BallNesting.EQUAL
            if cross_check and f.is_p_integral(p):
                agrees = agrees and _enumeration_agrees(f, ball, image)
        else:
            image = None
            _, inclusion, exact = _enumerated_verdicts(f, ball, target)
        logger.debug(f"🔍 Ball {i} {ball}: eps={eps}, dominance={dominance.status.value}, exact={exact}")
        entries.append(
            BallCertificate(
                index=i,
                source=ball,
                target=target,
                epsilon=eps,
                center_offset=offset,
                dominance=dominance,
                image=image,
                interpretation=interpretation,
                inclusion=inclusion,
                exact=exact,
            )
        )

    # 3. The global verdict: strict inequality, ties fail
    min_eps = min(e.epsilon for e in entries)
    max_t = max(e.target.radius_exp for e in entries)
    certified = min_eps > max_t
    failing = None if certified else next(e.index for e in entries if not e.epsilon > max_t)
    if certified:
        logger.info(f"✅ Certified exact: min eps exponent {min_eps} > max target exponent {max_t}")
    else:
        logger.info(f"❌ Certificate fails at ball {failing}: eps exponent {entries[failing].epsilon} <= {max_t}")
    return CertifiedReport(
        balls=entries,
        certified_exact=certified,
        min_epsilon=min_eps,
        max_target_exponent=max_t,
        failing_ball=failing,
        interpreter=all(e.interpretation.meets_target for e in entries),
        with_inclusion=all(e.inclusion for e in entries),
        exact=all(e.exact for e in entries),
        enumeration_agrees=agrees,
    )


# ============ MULTIPLIERS & STRATA ============

def _stability(v: Valuation) -> Stability:
    if v.is_infinite:
        return Stability.SUPERATTRACTING
    if v.value > 0:
        return Stability.CONTRACTIVE
    if v.value == 0:
        return Stability.INDIFFERENT
    return Stability.EXPANSIVE


def multiplier_report(
    f: Polynomial, bs: BallSystem, certificate: Optional[CertifiedReport] = None
) -> List[MultiplierEntry]:
    """|f'(a_i)| for every fixed ball; a certified exact interpreter must show v(lambda) = t-exp - r-exp."""
    df, p = f.derivative(), bs.p
    entries = []
    for i in bs.fixed_indices:
        ball = bs.balls[i]
        v = valuation(df.evaluate(ball.center), p)
        dominance = check_linear_dominance(f, ball)
        if certificate is not None and certificate.certified_exact:
            expected = bs.target_of(i).radius_exp - ball.radius_exp
            if v.is_infinite or v.value != expected:
                raise CertificationFailed(f"multiplier valuation {v} at ball {i} contradicts the certificate ({expected})")
        entries.append(MultiplierEntry(ball_index=i, valuation=v, stability=_stability(v), dominance_holds=dominance.passed))
    return entries


def stratum_signature(
    f: Union[Polynomial, PiecewiseAffine], bs: BallSystem, require_exact: bool = True
) -> Tuple[Valuation, ...]:
    """
    Multiplier valuations over the fixed balls, in index order. Piecewise-affine
    models are exact by construction and read off their slopes.
    """
    if isinstance(f, PiecewiseAffine):
        return tuple(valuation(f.pieces[i].slope, bs.p) for i in bs.fixed_indices)
    if require_exact:
        psi = synthesize_piecewise_affine(bs, units_from_candidate(f, bs))
        if not robust_exactness_certificate(f, psi, bs).certified_exact:
            raise CertificateRequired(f"{f} is not a certified exact interpreter of this ball system")
    else:
        logger.warning(f"⚠️ Signature of {f} computed without an exactness certificate")
    return tuple(entry.valuation for entry in multiplier_report(f, bs))


# ============ GOOD REDUCTION ============

def good_reduction_check(
    f: Polynomial, g: FunctionalGraph, p: Optional[int] = None, context: Optional[UnramifiedContext] = None
) -> GoodReductionVerdict:
    """
    Strict good reduction of a polynomial map: integral coefficients and a unit
    leading coefficient. If it holds, compare the reduction with F on the residue
    field; infinity stays fixed since the reduced degree is at least one.
    """
    if context is None and p is None:
        raise InvalidInput("good reduction needs a prime or an unramified context")
    p = context.p if context is not None else require_prime(p)
    if f.degree < 1:
        return GoodReductionVerdict(kind=GoodReductionKind.NOT_STRICT, reason="constant map")
    if not f.is_p_integral(p):
        return GoodReductionVerdict(kind=GoodReductionKind.NOT_STRICT, reason="coefficient not integral")
    lead = valuation(f.leading_coefficient, p)
    if lead.value != 0:
        return GoodReductionVerdict(
            kind=GoodReductionKind.NOT_STRICT,
            reason=f"leading coefficient has valuation {lead}; degree drops under reduction",
        )

    if context is not None:
        residue = context.with_precision(1)
        if g.size != residue.q:
            raise InvalidInput(f"graph has {g.size} vertices, residue field has {residue.q}")
        for x in residue.elements():
            if evaluate_polynomial_ok(f, x).index != g.successor[x.index]:
                return GoodReductionVerdict(kind=GoodReductionKind.STRICT_GOOD_MISMATCH, mismatch_vertex=x.index)
    else:
        if g.size != p:
            raise InvalidInput(f"graph has {g.size} vertices, F_{p} has {p}")
        for x in range(p):
            if f.evaluate_mod(x, p) != g.successor[x]:
                return GoodReductionVerdict(kind=GoodReductionKind.STRICT_GOOD_MISMATCH, mismatch_vertex=x)
    return GoodReductionVerdict(kind=GoodReductionKind.STRICT_GOOD_MATCHES)


# ============ CONJUGACY ============

def conjugate_affine_isometry(f: Polynomial, sigma: AffineIsometry) -> Polynomial:
    """sigma^-1 o f o sigma, expanded exactly; sigma carries its prime and is a unit-slope map."""
    inner = f.compose(sigma.as_polynomial()) - make_polynomial([sigma.beta])
    return inner * make_polynomial([Fraction(1, sigma.alpha)])


def conjugate_ball(b: Ball, sigma: AffineIsometry) -> Ball:
    """sigma^-1(B) = B((c - beta) / alpha, r); an isometry keeps the radius."""
    if sigma.p != b.p:
        raise InvalidInput(f"isometry over Z_{sigma.p} applied to a ball in Z_{b.p}")
    center = (Fraction(b.center) - sigma.beta) / sigma.alpha
    return Ball(center=residue_of(center, b.modulus), radius_exp=b.radius_exp, p=b.p)


# ============ PIPELINE ============

def certify_pipeline(
    f: Polynomial,
    g: FunctionalGraph,
    p: int,
    depth: int,
    units: Optional[Sequence[Number]] = None,
    cross_check: bool = True,
    size_limit: Optional[int] = None,
) -> PipelineReport:
    """Synthesis of psi, the robust certificate, the commutation check and the multipliers in one pass."""
    # 1. Ball system and psi
    bs = ball_system_from_graph(g, p, depth, size_limit)
    if units is None:
        units = units_from_candidate(f, bs)
    psi = synthesize_piecewise_affine(bs, units)

    # 2. Certificate, then the residue-level commutation check
    certificate = robust_exactness_certificate(f, psi, bs, cross_check=cross_check and f.is_p_integral(p))
    commutation = check_inclusion_by_commutation(f, g, p, depth, size_limit)

    # 3. Multipliers at the centers
    multipliers = multiplier_report(f, bs, certificate)

    warnings = []
    if not f.is_p_integral(p):
        warnings.append(f"{f} is not {p}-integral; residue checks are skipped")
    if certificate.enumeration_agrees is False:
        raise CertificationFailed("enumeration disagrees with the certified images")
    return PipelineReport(
        polynomial=f,
        psi=psi,
        certificate=certificate,
        commutation=commutation,
        multipliers=multipliers,
        warnings=warnings,
    )


# ============ UNRAMIFIED VARIANTS ============

def check_linear_dominance_ok(f: Polynomial, center: OkElement, radius_exp: int) -> DominanceVerdict:
    """
    Dominance on the Witt ball center + p^n O_K, with Taylor coefficients computed
    at the center's working precision. Coefficients that vanish at that precision
    only have a lower bound and make the verdict inconclusive when it matters.
    """
    ctx = center.context
    n = len(f.coefficients)
    coeffs: List[OkElement] = []
    for k in range(n):
        acc = ctx.zero
        for j in range(k, n):
            acc = acc + (center ** (j - k)) * (comb(j, k) * f.coefficients[j])
        coeffs.append(acc)
    recentered = [str(c) for c in coeffs]
    c1 = coeffs[1] if n > 1 else ctx.zero
    v1 = c1.valuation()
    if not v1.is_finite:
        status = DominanceStatus.DEGENERATE_LINEAR_TERM if f.degree < 1 else DominanceStatus.INCONCLUSIVE
        return DominanceVerdict(status=status, c1_valuation=v1, violating_index=1, recentered=recentered)
    worst: Optional[int] = None
    violating, inconclusive = None, False
    for k in range(2, n):
        v = coeffs[k].valuation()
        bound = v.value + (k - 1) * radius_exp
        if v.kind == "at_least" and bound <= v1.value:
            inconclusive = True
        if v.is_finite:
            if bound <= v1.value and violating is None:
                violating = k
            worst = bound if worst is None else min(worst, bound)
    if violating is not None:
        status = DominanceStatus.FAIL
    elif inconclusive:
        status = DominanceStatus.INCONCLUSIVE
    else:
        status = DominanceStatus.PASS
    slack = INFINITY if worst is None else NormExponent.of(worst - v1.value)
    return DominanceVerdict(
        status=status, c1_valuation=v1, violating_index=violating, slack=slack, recentered=recentered
    )


def _iterate_ok(f: Polynomial, x: OkElement, times: int) -> OkElement:
    for _ in range(times):
        x = evaluate_polynomial_ok(f, x)
    return x


def cycle_multiplier_ok(f: Polynomial, cycle: Sequence[int], ctx: UnramifiedContext) -> CycleMultiplier:
    """
    Multiplier of a residue-field cycle (depth-1 indices) at working precision
    ctx.precision. When the cycle is non-degenerate its periodic point is
    Hensel-lifted in O_K first; otherwise the residue centers are used.
    """
    m, df = len(cycle), f.derivative()
    residue = ctx.with_precision(1)
    start = ctx.element(residue.from_index(cycle[0]).coeffs)

    def chain(x: OkElement) -> OkElement:
        acc = ctx.one
        for _ in range(m):
            acc = acc * evaluate_polynomial_ok(df, x)
            x = evaluate_polynomial_ok(f, x)
        return acc

    lifted = not (chain(start) - 1).truncate(1).is_zero
    x = start
    if lifted:
        for _ in range(ctx.precision + 1):
            value = _iterate_ok(f, x, m) - x
            if value.is_zero:
                break
            x = x - value * (chain(x) - 1).inverse()
    mu = chain(x)
    v = mu.valuation()
    stability = Stability.SUPERATTRACTING if v.kind == "at_least" else _stability(v)
    logger.debug(f"🔍 Cycle {list(cycle)} multiplier valuation {v} (lifted={lifted})")
    return CycleMultiplier(cycle=list(cycle), valuation=v, stability=stability, lifted=lifted)


def certify_pipeline_ok(
    f: Polynomial, g: FunctionalGraph, ctx: UnramifiedContext, size_limit: Optional[int] = None
) -> UnramifiedPipelineReport:
    """
    Commutation on Witt cylinders of depth ctx.precision, dominance per cylinder at
    twice that precision, and multipliers of every residue-field cycle of f.
    """
    commutation = check_inclusion_by_commutation_ok(f, g, ctx, size_limit)
    working = ctx.with_precision(2 * ctx.precision + 2)
    cylinders = []
    for x in ctx.elements(size_limit):
        center = working.element(x.coeffs)
        verdict = check_linear_dominance_ok(f, center, ctx.precision)
        sigma = verdict.c1_valuation.value if verdict.passed else None
        cylinders.append(CylinderEntry(index=x.index, dominance=verdict, sigma_exponent=sigma))

    residue = ctx.with_precision(1)
    residue_graph = FunctionalGraph(
        successor=tuple(evaluate_polynomial_ok(f, x).index for x in residue.elements(size_limit))
    )
    multipliers = [cycle_multiplier_ok(f, cycle, working) for cycle in stats(residue_graph).cycles]
    warnings = []
    if not all(c.dominance.passed for c in cylinders):
        warnings.append(f"linear dominance fails on some depth-{ctx.precision} cylinders")
    return UnramifiedPipelineReport(
        polynomial=f,
        context=str(ctx),
        commutation=commutation,
        cylinders=cylinders,
        cycle_multipliers=multipliers,
        warnings=warnings,
    )
