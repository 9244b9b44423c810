"""
Horizontal and vertical arithmetic on residue rings: congruence preservation,
the dynamic CRT split of Z/mZ into prime-power factors, compatible towers over
Z/p^nZ, Hensel lifting of cycles, and profinite limit checks.
"""
import logging
from math import gcd, prod
from typing import Dict, List, Optional, Sequence

from sympy import divisors, factorint
from sympy.ntheory.modular import crt

from padic_lift.core.config import resolve_size_limit, settings
from padic_lift.core.exceptions import InvalidInput, NonCoprimeModuli, NotCongruencePreserving, guard_size
from padic_lift.schemas.schemas import (
    CompatibilityVerdict,
    CpVerdict,
    CpWitness,
    DcrtDecomposition,
    HenselDegenerate,
    HenselInvalidRequest,
    HenselLifted,
    HenselLiftResult,
    HenselNotExactPeriod,
    HenselNotPeriodic,
    ParabolicGrowth,
    ProductPhaseVerdict,
    RigidityVerdict,
    Route2Verdict,
    Tower,
)
from padic_lift.services.graph import (
    FunctionalGraph,
    cycle_length_from,
    graph_of_polynomial_mod,
    graph_product_many,
    product_components,
    product_index,
    refine_graph,
    stats,
)
from padic_lift.services.padic_core import (
    Ball,
    IntPolynomial,
    PadicInt,
    Polynomial,
    gauss_norm_on_ball,
    is_prime,
    require_prime,
)

logger = logging.getLogger(__name__)


# ============ CONGRUENCE PRESERVATION ============

def is_congruence_preserving(g: FunctionalGraph, size_limit: Optional[int] = None) -> CpVerdict:
    """
    x = y mod d implies f(x) = f(y) mod d, for every proper divisor d > 1 of m.
    Divisors are tried largest first; each x is compared against its class
    representative x mod d, so the first witness pair is (x mod d, x).
    """
    m = g.size
    guard_size(m, settings.CP_SIZE_LIMIT if size_limit is None else size_limit, "congruence-preservation check")
    for d in sorted(divisors(m), reverse=True):
        if d in (1, m):
            continue
        for x in range(d, m):
            r = x % d
            if (g.successor[x] - g.successor[r]) % d:
                witness = CpWitness(d=d, x=r, y=x, fx=g.successor[r], fy=g.successor[x])
                logger.debug(f"🔍 Not congruence-preserving mod {d}: f({r}) = {witness.fx}, f({x}) = {witness.fy}")
                return CpVerdict(is_cp=False, witness=witness)
    return CpVerdict(is_cp=True)


def count_congruence_preserving(m: int) -> int:
    """
    Number of congruence-preserving self-maps of Z/mZ. A prime-power factor p^k
    contributes prod_{j<=k} p^(p^j): each residue mod p^j picks one of p lifts.
    """
    if m < 1:
        raise InvalidInput(f"modulus must be positive, got {m}")
    total = 1
    for p, k in factorint(m).items():
        for j in range(1, k + 1):
            total *= p ** (p ** j)
    return total


# ============ DYNAMIC CRT ============

def _prime_power_moduli(m: int, factorization: Optional[Dict[int, int]] = None) -> List[int]:
    factors = factorint(m) if factorization is None else factorization
    if prod(p ** k for p, k in factors.items()) != m:
        raise InvalidInput(f"factorization {factors} does not multiply to {m}")
    for p in factors:
        require_prime(p)
    return [p ** k for p, k in sorted(factors.items())]


def theta(x: int, moduli: Sequence[int]) -> int:
    """Row-major index of (x mod q_1, ..., x mod q_r) in the product graph."""
    return product_index([x % q for q in moduli], moduli)


def theta_inverse(index: int, moduli: Sequence[int]) -> int:
    residues = product_components(index, moduli)
    value = crt(list(moduli), list(residues))
    if value is None:
        raise NonCoprimeModuli(*moduli[:2])
    return int(value[0])


def dcrt_decompose(
    g: FunctionalGraph,
    factorization: Optional[Dict[int, int]] = None,
    size_limit: Optional[int] = None,
    cp_size_limit: Optional[int] = None,
) -> DcrtDecomposition:
    """
    Split a congruence-preserving map on Z/mZ into its prime-power components and
    verify that theta is a graph isomorphism onto their product, edge by edge.
    ``size_limit`` caps the product graph; the congruence-preservation walk has
    its own cap, ``cp_size_limit`` (default ``settings.CP_SIZE_LIMIT``).
    """
    m = g.size
    verdict = is_congruence_preserving(g, cp_size_limit)
    if not verdict.is_cp:
        raise NotCongruencePreserving(verdict.witness.model_dump())
    moduli = _prime_power_moduli(m, factorization)

    components = []
    for q in moduli:
        table: List[Optional[int]] = [None] * q
        for x in range(m):
            value = g.successor[x] % q
            r = x % q
            if table[r] is None:
                table[r] = value
            elif table[r] != value:
                raise NotCongruencePreserving({"d": q, "x": r, "y": x})
        components.append(FunctionalGraph(successor=tuple(table)))

    product = graph_product_many(components, size_limit)
    images = {theta(x, moduli) for x in range(m)}
    if len(images) != m:
        raise RuntimeError(f"theta is not a bijection onto the product of {moduli}")
    for x in range(m):
        if product.successor[theta(x, moduli)] != theta(g.successor[x], moduli):
            raise RuntimeError(f"theta breaks the edge {x} -> {g.successor[x]}")
    logger.info(f"✅ Z/{m}Z split into components mod {moduli}")
    return DcrtDecomposition(modulus=m, moduli=moduli, components=components, isomorphism_verified=True)


def dcrt_assemble(components: Sequence[FunctionalGraph], size_limit: Optional[int] = None) -> FunctionalGraph:
    """Glue maps on pairwise coprime Z/q_iZ into one map on Z/(prod q_i)Z through the CRT basis."""
    if not components:
        raise InvalidInput("need at least one component")
    moduli = [c.size for c in components]
    for i, a in enumerate(moduli):
        for b in moduli[i + 1:]:
            if gcd(a, b) != 1:
                raise NonCoprimeModuli(a, b)
    for comp in components:
        verdict = is_congruence_preserving(comp, size_limit)
        if not verdict.is_cp:
            raise NotCongruencePreserving(verdict.witness.model_dump())

    m = prod(moduli)
    guard_size(m, resolve_size_limit(size_limit), "assembled residue ring")
    basis = [int(crt(moduli, [1 if j == i else 0 for j in range(len(moduli))])[0]) for i in range(len(moduli))]
    successor = tuple(
        sum(comp.successor[x % q] * e for comp, q, e in zip(components, moduli, basis)) % m for x in range(m)
    )
    assembled = FunctionalGraph(successor=successor)
    if not is_congruence_preserving(assembled, max(m, settings.CP_SIZE_LIMIT)).is_cp:
        raise RuntimeError("assembled map lost congruence preservation")
    return assembled


def verify_product_phase_space(
    local_polys: Sequence[Polynomial],
    primes: Sequence[int],
    depths: Sequence[int],
    g: FunctionalGraph,
    size_limit: Optional[int] = None,
) -> ProductPhaseVerdict:
    """Pi o Phi = F o Pi over every residue tuple, Pi being the CRT gluing map."""
    if not len(local_polys) == len(primes) == len(depths):
        raise InvalidInput("one prime and one depth per local polynomial")
    moduli = [require_prime(p) ** k for p, k in zip(primes, depths)]
    if prod(moduli) != g.size:
        raise InvalidInput(f"local moduli {moduli} do not multiply to {g.size}")
    guard_size(g.size, resolve_size_limit(size_limit), "product phase space")
    for index in range(g.size):
        point = product_components(index, moduli)
        image = [P.evaluate_mod(x, q) for P, x, q in zip(local_polys, point, moduli)]
        glued = theta_inverse(product_index(image, moduli), moduli)
        if glued != g.successor[theta_inverse(index, moduli)]:
            return ProductPhaseVerdict(commutes=False, witness=list(point))
    return ProductPhaseVerdict(commutes=True)


# ============ TOWERS ============

def build_tower(P: Polynomial, p: int, max_n: int, size_limit: Optional[int] = None) -> Tower:
    require_prime(p)
    if max_n < 1:
        raise InvalidInput(f"tower height must be positive, got {max_n}")
    guard_size(p ** max_n, resolve_size_limit(size_limit), "tower level")
    levels = tuple(graph_of_polynomial_mod(P, p ** n, size_limit) for n in range(1, max_n + 1))
    tower = Tower(p=p, levels=levels)
    verdict = check_tower_compatibility(tower)
    if not verdict:
        raise RuntimeError(f"polynomial tower incompatible at level {verdict.level}, residue {verdict.residue}")
    top = levels[-1]
    for n in range(1, max_n):
        if refine_graph(top, p, max_n, n) != levels[n - 1]:
            raise RuntimeError(f"level {n} is not the reduction of level {max_n}")
    logger.debug(f"🔍 Built {P} tower over Z/{p}^n, n <= {max_n}")
    return tower


def check_tower_compatibility(t: Tower) -> CompatibilityVerdict:
    """pi o f_{n+1} = f_n o pi at every level; the witness is a residue mod p^{n+1}."""
    for n in range(1, t.height):
        low, high, q = t.level(n), t.level(n + 1), t.p ** n
        for z in range(high.size):
            if high.successor[z] % q != low.successor[z % q]:
                return CompatibilityVerdict(compatible=False, level=n + 1, residue=z)
    return CompatibilityVerdict(compatible=True)


def reduction_preserves_cycles(t: Tower) -> CompatibilityVerdict:
    """Every level-(n+1) cycle reduces onto a level-n cycle whose length divides its own."""
    for n in range(1, t.height):
        low_stats, q = stats(t.level(n)), t.p ** n
        for cycle in stats(t.level(n + 1)).cycles:
            projected = cycle[0] % q
            if low_stats.tail_depth[projected] != 0:
                return CompatibilityVerdict(compatible=False, level=n + 1, residue=cycle[0])
            length = len(low_stats.cycles[low_stats.cycle_of[projected]])
            if len(cycle) % length:
                return CompatibilityVerdict(compatible=False, level=n + 1, residue=cycle[0])
    return CompatibilityVerdict(compatible=True)


# ============ HENSEL LIFTING ============

def _iterate_mod(P: Polynomial, x: int, times: int, modulus: int) -> int:
    for _ in range(times):
        x = P.evaluate_mod(x, modulus)
    return x


def _chain_derivative(P: Polynomial, x: int, m: int, modulus: int) -> int:
    """(P^m)'(x) as the product of P' along the orbit."""
    dP = P.derivative()
    acc = 1
    for _ in range(m):
        acc = acc * dP.evaluate_mod(x, modulus) % modulus
        x = P.evaluate_mod(x, modulus)
    return acc


def hensel_lift_cycle(P: Polynomial, p: int, xbar: int, m: int, target_n: int) -> HenselLiftResult:
    """
    Lift a residue point of exact period m to Z/p^target_n, one Newton step per
    level on F(z) = P^m(z) - z. Every failure mode comes back as a variant.
    """
    # 1. Request checks
    if not is_prime(p):
        return HenselInvalidRequest(reason=f"{p} is not prime")
    if m < 1 or target_n < 1:
        return HenselInvalidRequest(reason=f"period and target precision must be positive (got m={m}, N={target_n})")

    # 2. Residue period: m-periodic, then exact
    xbar %= p
    landing = _iterate_mod(P, xbar, m, p)
    if landing != xbar:
        logger.info(f"⚠️ {xbar} is not periodic of period {m} mod {p} (lands on {landing})")
        return HenselNotPeriodic(residue=xbar, period=m, landing=landing)
    for d in divisors(m):
        if d < m and _iterate_mod(P, xbar, d, p) == xbar:
            return HenselNotExactPeriod(divisor=d)

    # 3. Residue multiplier decides whether Newton applies
    mu = _chain_derivative(P, xbar, m, p)
    if mu == 1 % p:
        logger.info(f"⚠️ Multiplier of the {m}-cycle through {xbar} is 1 mod {p}; no unique lift")
        return HenselDegenerate(multiplier_residue=mu, period=m)

    # 4. One Newton step per level
    x, trace = xbar, [xbar]
    for n in range(1, target_n):
        modulus = p ** (n + 1)
        F = (_iterate_mod(P, x, m, modulus) - x) % modulus
        dF = (_chain_derivative(P, x, m, modulus) - 1) % modulus
        x = (x - F * pow(dF, -1, modulus)) % modulus
        trace.append(x)

    # 5. Verify and collect the lifted orbit
    modulus = p ** target_n
    if _iterate_mod(P, x, m, modulus) != x:
        raise RuntimeError(f"Newton lift {x} is not {m}-periodic mod {p}^{target_n}")
    orbit = [x]
    for _ in range(m - 1):
        orbit.append(P.evaluate_mod(orbit[-1], modulus))
    logger.debug(f"🔍 Lifted {xbar} to {x} mod {p}^{target_n}, trace {trace}")
    return HenselLifted(
        point=PadicInt(p=p, precision=target_n, value=x),
        period=m,
        multiplier=_chain_derivative(P, x, m, modulus),
        trace=trace,
        orbit=orbit,
    )


def detect_parabolic_growth(
    P: Polynomial, p: int, max_n: int, seed: int = 0, size_limit: Optional[int] = None
) -> ParabolicGrowth:
    """Length of the cycle reached from ``seed`` at each level; non-constant lengths flag parabolic growth."""
    require_prime(p)
    guard_size(p ** max_n, resolve_size_limit(size_limit), "tower level")
    lengths = [
        cycle_length_from(graph_of_polynomial_mod(P, p ** n, size_limit), seed % p ** n) for n in range(1, max_n + 1)
    ]
    return ParabolicGrowth(seed=seed, lengths=lengths, parabolic=len(set(lengths)) > 1)


# ============ PROFINITE LIMITS ============

def locally_constant_lift_check(t: Tower) -> CompatibilityVerdict:
    """
    The locally constant lifts z -> F_n(z mod p^n) form a uniformly Cauchy sequence:
    sup |lc_{n+1} - lc_n| <= p^-n, evaluated on every residue mod p^{n+1}.
    """
    for n in range(1, t.height):
        low, high, q = t.level(n), t.level(n + 1), t.p ** n
        for z in range(t.p ** (n + 1)):
            if (high.successor[z] - low.successor[z % q]) % q:
                return CompatibilityVerdict(compatible=False, level=n + 1, residue=z)
    return CompatibilityVerdict(compatible=True)


def route2_cauchy_check(seq: Sequence[Polynomial], t: Tower, c_exp: int) -> Route2Verdict:
    """
    Level correctness (seq[n] induces F_n mod p^n) and uniform Cauchy control
    (Gauss exponent of seq[n+1] - seq[n] on Z_p at least n - c_exp), 1-based levels.
    """
    if len(seq) != t.height:
        raise InvalidInput(f"{len(seq)} polynomials for a tower of height {t.height}")
    level_witness = None
    for n, P in enumerate(seq, start=1):
        q = t.p ** n
        level = t.level(n)
        bad = next((z for z in range(q) if P.evaluate_mod(z, q) != level.successor[z]), None)
        if bad is not None:
            level_witness = (n, bad)
            break

    cauchy_witness = None
    unit_ball = Ball(center=0, radius_exp=0, p=t.p)
    for n in range(1, t.height):
        gap = gauss_norm_on_ball(seq[n] - seq[n - 1], unit_ball)
        if gap < n - c_exp:
            cauchy_witness = (n, gap)
            break
    return Route2Verdict(
        level_correct=level_witness is None,
        cauchy=cauchy_witness is None,
        level_witness=level_witness,
        cauchy_witness=cauchy_witness,
    )


def rigidity_check(c1: int, c2: int, p: int, n: int) -> RigidityVerdict:
    """Graphs of z^2 + c1 and z^2 + c2 mod p^n coincide whenever c1 = c2 mod p^n."""
    require_prime(p)
    q = p ** n
    g1 = graph_of_polynomial_mod(IntPolynomial(coefficients=(c1, 0, 1)), q)
    g2 = graph_of_polynomial_mod(IntPolynomial(coefficients=(c2, 0, 1)), q)
    verdict = RigidityVerdict(congruent=(c1 - c2) % q == 0, identical=g1 == g2)
    if not verdict.holds:
        raise RuntimeError(f"congruent parameters {c1}, {c2} gave different graphs mod {q}")
    return verdict
