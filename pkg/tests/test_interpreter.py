import itertools
import random
from fractions import Fraction

import pytest

from padic_lift.core.exceptions import (
    CertificateRequired,
    DepthTooSmall,
    DominanceRequired,
    DuplicateCenters,
    InvalidInput,
    NonUnit,
    NotIsometry,
)
from padic_lift.schemas.schemas import (
    AffineIsometry,
    BallSystem,
    DominanceStatus,
    GoodReductionKind,
    InterpretationKind,
    Stability,
)
from padic_lift.services.graph import frobenius_graph, from_successors, graph_of_polynomial_mod, identity_graph
from padic_lift.services.interpreter import (
    ball_system_from_graph,
    certify_pipeline,
    certify_pipeline_ok,
    check_inclusion_by_commutation,
    check_inclusion_by_commutation_ok,
    check_linear_dominance,
    check_linear_dominance_ok,
    classify_ball,
    conjugate_affine_isometry,
    conjugate_ball,
    cycle_multiplier_ok,
    dominance_perturbation_threshold,
    enumerate_image,
    finite_point_control,
    good_reduction_check,
    image_ball,
    image_by_enumeration,
    interpolate_at_centers,
    multiplier_report,
    robust_exactness_certificate,
    stratum_signature,
    synthesize_piecewise_affine,
    units_from_candidate,
)
from padic_lift.services.padic_core import (
    Ball,
    IntPolynomial,
    RationalPolynomial,
    Valuation,
    gauss_norm_on_ball,
    valuation,
)
from padic_lift.services.unramified import UnramifiedContext
from tests.conftest import poly


def squaring_system():
    return ball_system_from_graph(graph_of_polynomial_mod(poly(0, 0, 1), 4), 2, 2)


class TestBallSystem:
    def test_from_graph(self, example_graph):
        bs = ball_system_from_graph(example_graph, 2, 2)
        assert [b.center for b in bs.balls] == [0, 1, 2, 3]
        assert bs.target_of(2) == Ball(center=1, radius_exp=2, p=2)
        assert bs.fixed_indices == [3]

    def test_depth_too_small(self):
        with pytest.raises(DepthTooSmall):
            ball_system_from_graph(from_successors([0, 1, 2]), 2, 1)

    def test_overlapping_balls(self):
        b = Ball(center=1, radius_exp=1, p=2)
        with pytest.raises(DuplicateCenters):
            BallSystem(balls=[b, Ball(center=3, radius_exp=1, p=2)], tau=[0, 1], targets=[b, b])


class TestSynthesis:
    def test_default_units(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        psi = synthesize_piecewise_affine(bs)
        assert [(pc.source_center, pc.target_center, pc.slope) for pc in psi.pieces] == [(0, 1, 1), (1, 0, 1)]

    def test_explicit_units(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        psi = synthesize_piecewise_affine(bs, [-1, Fraction(1, 3)])
        assert psi.pieces[0].as_polynomial().coefficients == (1, -1)
        assert isinstance(psi.pieces[1].as_polynomial(), RationalPolynomial)

    def test_psi_maps_balls_onto_targets(self, example_graph):
        bs = ball_system_from_graph(example_graph, 3, 2)
        psi = synthesize_piecewise_affine(bs, [1, 2, 4, 5])
        for i, piece in enumerate(psi.pieces):
            assert image_ball(piece.as_polynomial(), bs.balls[i]) == bs.target_of(i)

    def test_non_unit_slope(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        with pytest.raises(NonUnit):
            synthesize_piecewise_affine(bs, [1, 2])

    def test_units_from_candidate(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        assert units_from_candidate(poly(1, -1, 8), bs) == [-1, 15]
        assert units_from_candidate(poly(0, 0, 1), squaring_system()) == [1, 1, 1, 1]


class TestInterpolation:
    def test_swap(self, swap_graph):
        report = interpolate_at_centers(ball_system_from_graph(swap_graph, 2, 1))
        assert report.polynomial.coefficients == (1, -1)
        assert report.p_integral
        assert report.warnings == []

    def test_non_integral_interpolant(self):
        report = interpolate_at_centers(ball_system_from_graph(from_successors([1, 0, 1, 3]), 2, 2))
        assert report.polynomial.coefficients == (1, Fraction(-7, 3), Fraction(3, 2), Fraction(-1, 6))
        assert not report.p_integral
        assert report.warnings

    def test_single_ball_is_constant(self):
        bs = BallSystem(
            balls=[Ball(center=5, radius_exp=2, p=2)], tau=[0], targets=[Ball(center=3, radius_exp=2, p=2)]
        )
        assert interpolate_at_centers(bs).polynomial.coefficients == (3,)


class TestDominance:
    def test_pass(self):
        verdict = check_linear_dominance(poly(0, 0, 1), Ball(center=3, radius_exp=2, p=2))
        assert verdict.status == DominanceStatus.PASS
        assert verdict.c1_valuation == Valuation.finite(1)
        assert verdict.slack == 1

    def test_degenerate(self):
        verdict = check_linear_dominance(poly(0, 0, 1), Ball(center=0, radius_exp=1, p=2))
        assert verdict.status == DominanceStatus.DEGENERATE_LINEAR_TERM
        assert verdict.violating_index == 1

    def test_fail(self):
        verdict = check_linear_dominance(poly(0, 0, 1), Ball(center=1, radius_exp=1, p=2))
        assert verdict.status == DominanceStatus.FAIL
        assert verdict.violating_index == 2

    def test_affine_always_passes(self):
        assert check_linear_dominance(poly(1, -1), Ball(center=0, radius_exp=1, p=2)).passed

    def test_image_ball(self):
        assert image_ball(poly(0, 0, 1), Ball(center=3, radius_exp=2, p=2)) == Ball(center=9, radius_exp=3, p=2)
        with pytest.raises(DominanceRequired):
            image_ball(poly(0, 0, 1), Ball(center=0, radius_exp=1, p=2))

    def test_image_matches_enumeration(self):
        b = Ball(center=3, radius_exp=2, p=2)
        cover, fills = image_by_enumeration(poly(0, 0, 1), b, depth=6)
        assert cover == image_ball(poly(0, 0, 1), b)
        assert fills

    def test_perturbation_threshold(self):
        b = Ball(center=0, radius_exp=1, p=2)
        assert dominance_perturbation_threshold(poly(1, -1), b) == 1
        assert check_linear_dominance(poly(1, -1, 4), b).passed

    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_dominance_gives_similarity(self, p):
        rng = random.Random(70 + p)
        certified = 0
        for _ in range(120):
            f = poly(*[rng.randrange(-12, 13) for _ in range(rng.randint(2, 4))])
            n = rng.randint(1, 2)
            b = Ball(center=rng.randrange(p ** n), radius_exp=n, p=p)
            verdict = check_linear_dominance(f, b)
            if not verdict.passed:
                continue
            certified += 1
            points = [b.center + p ** n * rng.randrange(-40, 41) for _ in range(8)]
            for x, y in itertools.combinations(points, 2):
                if x == y:
                    continue
                expected = verdict.c1_valuation.value + valuation(x - y, p).value
                assert valuation(f.evaluate(x) - f.evaluate(y), p).value == expected
        assert certified > 0

    @pytest.mark.parametrize("p", [2, 3])
    def test_perturbation_below_threshold_keeps_dominance(self, p):
        rng = random.Random(90 + p)
        checked = 0
        for _ in range(150):
            f = poly(*[rng.randrange(-12, 13) for _ in range(rng.randint(2, 4))])
            n = rng.randint(1, 2)
            b = Ball(center=rng.randrange(p ** n), radius_exp=n, p=p)
            verdict = check_linear_dominance(f, b)
            if not verdict.passed:
                continue
            threshold = dominance_perturbation_threshold(f, b)
            scale = p ** (threshold.value + 1)
            h = poly(*[scale * rng.randrange(-5, 6) for _ in range(rng.randint(1, 5))])
            assert gauss_norm_on_ball(h, b) > threshold
            perturbed = check_linear_dominance(f + h, b)
            assert perturbed.passed
            assert perturbed.c1_valuation == verdict.c1_valuation
            checked += 1
        assert checked > 0


class TestClassification:
    def test_contractive(self):
        t = classify_ball(poly(0, 0, 1), Ball(center=3, radius_exp=2, p=2), Ball(center=1, radius_exp=2, p=2))
        assert t.kind == InterpretationKind.CONTRACTIVE
        assert t.sigma_exponent == 1
        assert t.meets_target

    def test_indifferent(self):
        t = classify_ball(poly(1, -1), Ball(center=0, radius_exp=1, p=2), Ball(center=1, radius_exp=1, p=2))
        assert t.kind == InterpretationKind.INDIFFERENT

    def test_expansive(self):
        t = classify_ball(poly(0, 1), Ball(center=0, radius_exp=2, p=2), Ball(center=0, radius_exp=3, p=2))
        assert t.kind == InterpretationKind.EXPANSIVE
        assert t.sigma_exponent == -1

    def test_enumeration_fallback(self):
        source = Ball(center=1, radius_exp=1, p=2)
        with pytest.raises(DominanceRequired):
            classify_ball(poly(0, 0, 1), source, source)
        t = classify_ball(poly(0, 0, 1), source, source, allow_enumeration=True)
        assert t.enumerated_only
        assert t.kind == InterpretationKind.CONTRACTIVE
        assert t.meets_target


class TestCommutation:
    def test_swap(self, swap_graph):
        verdict = check_inclusion_by_commutation(poly(1, -1), swap_graph, 2, 1)
        assert verdict.commutes
        assert verdict.checked == 2

    def test_witness(self):
        verdict = check_inclusion_by_commutation(poly(1, 1), identity_graph(2), 2, 1)
        assert not verdict.commutes
        assert verdict.witness == 0

    def test_surplus_counted(self):
        verdict = check_inclusion_by_commutation(poly(1, -2, 1), from_successors([1, 0, 1]), 2, 2)
        assert verdict.commutes
        assert verdict.surplus_into_domain == 1
        assert verdict.surplus_outside == 0

    @pytest.mark.parametrize("p, depth", [(2, 2), (3, 1), (3, 2), (5, 1)])
    def test_matches_ball_inclusion(self, p, depth):
        rng = random.Random(p * 10 + depth)
        modulus = p ** depth
        for _ in range(40):
            f = poly(*[rng.randrange(-9, 10) for _ in range(rng.randint(1, 4))])
            size = rng.randint(1, modulus)
            successor = [f.evaluate_mod(x, modulus) % size for x in range(size)]
            if rng.random() < 0.5:
                successor[rng.randrange(size)] = rng.randrange(size)
            g = from_successors(successor)

            included = all(
                enumerate_image(f, Ball(center=x, radius_exp=depth, p=p), depth + 2)
                <= set(Ball(center=g.successor[x], radius_exp=depth, p=p).residues(depth + 2))
                for x in range(size)
            )
            assert check_inclusion_by_commutation(f, g, p, depth).commutes is included

    def test_over_f4(self, gf4):
        assert check_inclusion_by_commutation_ok(poly(0, 0, 1), frobenius_graph(gf4), gf4).commutes
        assert not check_inclusion_by_commutation_ok(poly(0, 1), frobenius_graph(gf4), gf4).commutes


class TestRobustCertificate:
    def test_swap_exact(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        psi = synthesize_piecewise_affine(bs, [-1, -1])
        cert = robust_exactness_certificate(poly(1, -1), psi, bs, cross_check=True)
        assert cert.certified_exact
        assert cert.min_epsilon.is_infinite
        assert cert.exact
        assert cert.enumeration_agrees
        assert all(e.interpretation.kind == InterpretationKind.INDIFFERENT for e in cert.balls)

    def test_default_units_still_certify(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        cert = robust_exactness_certificate(poly(1, -1), synthesize_piecewise_affine(bs), bs)
        assert cert.certified_exact
        assert cert.min_epsilon == 2

    def test_perturbed_polynomial(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        cert = robust_exactness_certificate(poly(1, -1, 8), synthesize_piecewise_affine(bs, [-1, -1]), bs)
        assert cert.certified_exact
        assert cert.min_epsilon == 3

    def test_single_ball_identity(self):
        bs = ball_system_from_graph(identity_graph(1), 2, 1)
        cert = robust_exactness_certificate(poly(0, 1), synthesize_piecewise_affine(bs), bs)
        assert cert.certified_exact

    def test_failure_names_a_ball(self):
        bs = ball_system_from_graph(identity_graph(2), 2, 1)
        cert = robust_exactness_certificate(poly(1, 1), synthesize_piecewise_affine(bs), bs)
        assert not cert.certified_exact
        assert cert.failing_ball == 0
        assert not cert.interpreter

    def test_tie_does_not_certify(self):
        bs = squaring_system()
        cert = robust_exactness_certificate(poly(0, 0, 1), synthesize_piecewise_affine(bs), bs)
        assert cert.min_epsilon == 2
        assert not cert.certified_exact
        assert cert.with_inclusion
        assert not cert.exact

    def test_finite_point_control(self, swap_graph):
        bs = ball_system_from_graph(swap_graph, 2, 1)
        assert finite_point_control(poly(1, -1, 8), bs) == [Valuation.infinity(), Valuation.finite(3)]


class TestMultipliers:
    def test_squaring(self):
        entries = multiplier_report(poly(0, 0, 1), squaring_system())
        assert [e.ball_index for e in entries] == [0, 1]
        assert entries[0].stability == Stability.SUPERATTRACTING
        assert entries[1].valuation == Valuation.finite(1)
        assert entries[1].stability == Stability.CONTRACTIVE

    def test_signature_needs_certificate(self):
        bs = squaring_system()
        with pytest.raises(CertificateRequired):
            stratum_signature(poly(0, 0, 1), bs)
        assert stratum_signature(poly(0, 0, 1), bs, require_exact=False) == (Valuation.infinity(), Valuation.finite(1))

    def test_signature_of_affine_model(self):
        bs = squaring_system()
        psi = synthesize_piecewise_affine(bs)
        assert stratum_signature(psi, bs) == (Valuation.finite(0), Valuation.finite(0))

    @pytest.mark.parametrize("p, depth", [(3, 2), (5, 1), (7, 1)])
    def test_odd_primes(self, p, depth):
        bs = ball_system_from_graph(graph_of_polynomial_mod(poly(0, 0, 1), p ** depth), p, depth)
        sig = stratum_signature(poly(0, 0, 1), bs, require_exact=False)
        assert sig == (Valuation.infinity(), Valuation.finite(0))


class TestGoodReduction:
    def test_matches(self):
        assert good_reduction_check(poly(1, 0, 1), from_successors([1, 0]), p=2).kind == GoodReductionKind.STRICT_GOOD_MATCHES

    def test_mismatch(self, swap_graph):
        verdict = good_reduction_check(poly(0, 0, 1), swap_graph, p=2)
        assert verdict.kind == GoodReductionKind.STRICT_GOOD_MISMATCH
        assert verdict.mismatch_vertex == 0

    def test_leading_coefficient_not_unit(self, swap_graph):
        assert good_reduction_check(poly(0, 1, 2), swap_graph, p=2).kind == GoodReductionKind.NOT_STRICT

    def test_constant(self, swap_graph):
        assert good_reduction_check(poly(1), swap_graph, p=2).kind == GoodReductionKind.NOT_STRICT

    def test_over_f4(self, gf4):
        verdict = good_reduction_check(poly(0, 0, 1), frobenius_graph(gf4), context=gf4)
        assert verdict.kind == GoodReductionKind.STRICT_GOOD_MATCHES


class TestConjugacy:
    def test_translation(self):
        sigma = AffineIsometry(alpha=1, beta=1, p=2)
        assert conjugate_affine_isometry(poly(0, 0, 1), sigma).coefficients == (0, 2, 1)

    def test_identity(self):
        f = poly(3, 1, 4, 1)
        assert conjugate_affine_isometry(f, AffineIsometry(alpha=1, beta=0, p=5)).coefficients == f.coefficients

    def test_not_isometry(self):
        with pytest.raises(NotIsometry):
            AffineIsometry(alpha=2, beta=0, p=2)
        with pytest.raises(NotIsometry):
            AffineIsometry(alpha=6, beta=1, p=3)

    def test_ball_from_another_prime(self):
        with pytest.raises(InvalidInput):
            conjugate_ball(Ball(center=1, radius_exp=1, p=3), AffineIsometry(alpha=1, beta=0, p=2))

    def test_classification_is_invariant(self):
        f, b = poly(0, 0, 1), Ball(center=3, radius_exp=2, p=2)
        sigma = AffineIsometry(alpha=-1, beta=1, p=2)
        h = conjugate_affine_isometry(f, sigma)
        b_conj = conjugate_ball(b, sigma)
        assert b_conj == Ball(center=2, radius_exp=2, p=2)
        assert check_linear_dominance(h, b_conj).c1_valuation == check_linear_dominance(f, b).c1_valuation
        assert image_ball(h, b_conj) == conjugate_ball(image_ball(f, b), sigma)

    @pytest.mark.parametrize("p", [2, 3])
    def test_random_isometries_preserve_verdicts(self, p):
        rng = random.Random(500 + p)
        passed = 0
        for _ in range(150):
            f = poly(*[rng.randrange(-20, 21) for _ in range(rng.randint(2, 4))])
            n = rng.randint(1, 3)
            b = Ball(center=rng.randrange(p ** n), radius_exp=n, p=p)
            alpha = rng.choice([a for a in range(-p ** 2, p ** 2 + 1) if a % p])
            sigma = AffineIsometry(alpha=alpha, beta=rng.randrange(-30, 31), p=p)
            h, b_conj = conjugate_affine_isometry(f, sigma), conjugate_ball(b, sigma)

            before, after = check_linear_dominance(f, b), check_linear_dominance(h, b_conj)
            assert before.passed == after.passed
            if before.passed:
                passed += 1
                assert before.c1_valuation == after.c1_valuation
                assert image_ball(h, b_conj) == conjugate_ball(image_ball(f, b), sigma)

            x = b_conj.center
            sigma_x = alpha * x + sigma.beta
            assert valuation(h.derivative().evaluate(x), p) == valuation(f.derivative().evaluate(sigma_x), p)
        assert passed > 0


class TestPipeline:
    def test_swap(self, swap_graph):
        report = certify_pipeline(poly(1, -1), swap_graph, 2, 1)
        assert report.certificate.certified_exact
        assert report.commutation.commutes
        assert report.multipliers == []

    def test_identity_with_shift_fails(self):
        report = certify_pipeline(poly(1, 1), identity_graph(2), 2, 1)
        assert not report.certificate.certified_exact
        assert not report.commutation.commutes
        assert report.commutation.witness == 0


class TestUnramified:
    def setup_class(self):
        self.ctx = UnramifiedContext.builtin(2, 2, precision=4)

    def test_dominance_at_generator(self):
        g = self.ctx.generator
        assert check_linear_dominance_ok(poly(0, 0, 1), g, 2).status == DominanceStatus.PASS
        verdict = check_linear_dominance_ok(poly(0, 0, 1), g, 1)
        assert verdict.status == DominanceStatus.FAIL
        assert verdict.violating_index == 2

    def test_dominance_at_zero_is_inconclusive(self):
        verdict = check_linear_dominance_ok(poly(0, 0, 1), self.ctx.zero, 2)
        assert verdict.status == DominanceStatus.INCONCLUSIVE

    @pytest.mark.parametrize(
        "cycle, expected, stability",
        [
            ([0], Valuation.at_least(4), Stability.SUPERATTRACTING),
            ([1], Valuation.finite(1), Stability.CONTRACTIVE),
            ([2, 3], Valuation.finite(2), Stability.CONTRACTIVE),
        ],
    )
    def test_cycle_multipliers(self, cycle, expected, stability):
        entry = cycle_multiplier_ok(poly(0, 0, 1), cycle, self.ctx)
        assert entry.valuation == expected
        assert entry.stability == stability
        assert entry.lifted

    def test_pipeline_over_f4(self, gf4):
        report = certify_pipeline_ok(poly(0, 0, 1), frobenius_graph(gf4), gf4)
        assert report.commutation.commutes
        assert [c.cycle for c in report.cycle_multipliers] == [[0], [1], [2, 3]]
        assert report.cycle_multipliers[2].valuation == Valuation.finite(2)
        assert report.warnings
