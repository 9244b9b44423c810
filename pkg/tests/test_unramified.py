import random

import pytest

from padic_lift.core.exceptions import InvalidInput, NonUnit, NotIrreducible, PrecisionError
from padic_lift.services.graph import frobenius_graph
from padic_lift.services.padic_core import IntPolynomial, Valuation
from padic_lift.services.unramified import (
    UnramifiedContext,
    evaluate_polynomial_ok,
    frobenius,
    is_irreducible_mod_p,
    residue_field_elements,
    teichmuller,
    teichmuller_digits,
    truncate,
    verschiebung_shift_check,
    witt_coordinates,
    witt_cylinder_partition,
)
from tests.conftest import poly


class TestContext:
    @pytest.mark.parametrize("coefficients, p, expected", [((1, 1, 1), 2, True), ((1, 0, 1), 2, False), ((1, 0, 1), 3, True)])
    def test_irreducibility(self, coefficients, p, expected):
        assert is_irreducible_mod_p(coefficients, p) is expected

    def test_reducible_modulus_rejected(self):
        with pytest.raises(NotIrreducible):
            UnramifiedContext(p=2, f=2, modulus=IntPolynomial(coefficients=(1, 0, 1)), precision=1)

    def test_non_monic_rejected(self):
        with pytest.raises(InvalidInput):
            UnramifiedContext(p=3, f=2, modulus=IntPolynomial(coefficients=(1, 0, 2)), precision=1)

    def test_missing_builtin(self):
        with pytest.raises(InvalidInput):
            UnramifiedContext.builtin(7, 3, precision=1)

    def test_sizes(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        assert ctx.q == 4
        assert ctx.residue_modulus == 8
        assert ctx.cardinality == 64
        assert len(residue_field_elements(ctx)) == 4

    def test_index_round_trip(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=2)
        assert ctx.element([1, 3]).index == 13
        assert ctx.from_index(13).coeffs == (1, 3)
        assert [x.index for x in ctx.elements()] == list(range(16))


class TestArithmetic:
    def test_generator_squared_in_f4(self, gf4):
        g = gf4.generator
        assert (g * g).coeffs == (1, 1)
        assert g ** 3 == gf4.one

    def test_inverse_at_precision_three(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        g = ctx.generator
        inv = g.inverse()
        assert inv.coeffs == (7, 7)
        assert g * inv == ctx.one

    def test_every_unit_inverts(self):
        ctx = UnramifiedContext.builtin(3, 2, precision=2)
        for x in ctx.elements():
            if x.is_unit:
                assert x * x.inverse() == ctx.one

    def test_non_unit(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        x = ctx.element([2, 4])
        assert x.valuation() == Valuation.finite(1)
        with pytest.raises(NonUnit):
            x.inverse()

    def test_zero_valuation(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        assert ctx.zero.valuation() == Valuation.at_least(3)

    def test_truncate(self):
        ctx = UnramifiedContext.builtin(2, 1, precision=3)
        assert truncate(ctx.scalar(5), 1).coeffs == (1,)
        with pytest.raises(PrecisionError):
            ctx.scalar(5).truncate(4)

    def test_mixed_precision(self):
        ctx = UnramifiedContext.builtin(3, 2, precision=3)
        x = ctx.element([10, 4]) + ctx.with_precision(1).element([2, 2])
        assert x.precision == 1
        assert x.coeffs == (0, 0)

    def test_polynomial_evaluation(self, gf4):
        g = gf4.generator
        assert evaluate_polynomial_ok(poly(1, 1, 1), g).is_zero
        assert evaluate_polynomial_ok(poly(0, 0, 1), g) == g + 1

    @pytest.mark.parametrize("p, f, n", [(2, 2, 4), (3, 2, 3), (5, 2, 3), (2, 3, 3)])
    def test_truncate_is_a_ring_map(self, p, f, n):
        ctx = UnramifiedContext.builtin(p, f, precision=n)
        rng = random.Random(p * 100 + f * 10 + n)
        for _ in range(60):
            x = ctx.element([rng.randrange(ctx.residue_modulus) for _ in range(f)])
            y = ctx.element([rng.randrange(ctx.residue_modulus) for _ in range(f)])
            for m in range(1, n + 1):
                assert truncate(x + y, m) == truncate(x, m) + truncate(y, m)
                assert truncate(x * y, m) == truncate(x, m) * truncate(y, m)


class TestTeichmuller:
    def test_lift_of_two_mod_nine(self):
        xbar = UnramifiedContext.builtin(3, 1, precision=1).scalar(2)
        assert teichmuller(xbar, 2).coeffs == (8,)

    def test_cube_root_of_unity(self, gf4):
        xi = teichmuller(gf4.generator, 2)
        assert xi ** 3 == xi.context.one
        assert xi.truncate(1) == gf4.generator

    def test_fixed_by_q_power(self):
        ctx = UnramifiedContext.builtin(3, 2, precision=1)
        for xbar in ctx.elements():
            xi = teichmuller(xbar, 3)
            assert xi ** 9 == xi

    def test_digits_reconstruct(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        for x in ctx.elements():
            digits = teichmuller_digits(x, 3)
            total = ctx.zero
            for i, d in enumerate(digits):
                total = total + teichmuller(d, 3) * (2 ** i)
            assert total == x

    @pytest.mark.parametrize("p", [2, 3, 5])
    @pytest.mark.parametrize("f", [1, 2])
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_lifts_are_idempotent_and_multiplicative(self, p, f, n):
        residues = residue_field_elements(UnramifiedContext.builtin(p, f, precision=1))
        lifts = {x.index: teichmuller(x, n) for x in residues}
        for x in residues:
            xi = lifts[x.index]
            assert xi ** (p ** f) == xi
            assert xi.truncate(1) == x
            assert teichmuller(xi, n) == xi
        for x in residues:
            for y in residues:
                assert lifts[(x * y).index] == lifts[x.index] * lifts[y.index]


class TestFrobenius:
    def test_graph_on_f4(self, gf4):
        assert list(frobenius_graph(gf4).successor) == [0, 1, 3, 2]

    def test_order_equals_residue_degree(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        for x in ctx.elements():
            assert frobenius(frobenius(x)) == x

    def test_ring_homomorphism(self):
        ctx = UnramifiedContext.builtin(3, 2, precision=2)
        g = ctx.generator
        for x in ctx.elements():
            assert frobenius(x * g) == frobenius(x) * frobenius(g)
            assert frobenius(x + g) == frobenius(x) + frobenius(g)

    def test_reduces_to_pth_power(self):
        ctx = UnramifiedContext.builtin(3, 2, precision=2)
        for x in ctx.elements():
            assert frobenius(x).truncate(1) == (x ** 3).truncate(1)

    def test_commutes_with_teichmuller(self):
        ctx = UnramifiedContext.builtin(2, 3, precision=1)
        for xbar in ctx.elements():
            xi = teichmuller(xbar, 3)
            assert frobenius(xi) == xi ** 2

    @pytest.mark.parametrize("p, f, n", [(2, 2, 3), (3, 2, 2), (5, 2, 2), (2, 3, 2)])
    def test_preserves_valuation_and_cylinders(self, p, f, n):
        ctx = UnramifiedContext.builtin(p, f, precision=n)
        for x in ctx.elements():
            image = frobenius(x)
            assert image.valuation() == x.valuation()
            for m in range(1, n):
                assert image.truncate(m) == frobenius(x.truncate(m))


class TestWittCylinders:
    def test_partition_sizes(self):
        assert len(witt_cylinder_partition(UnramifiedContext.builtin(2, 1, precision=2), 2)) == 4
        assert len(witt_cylinder_partition(UnramifiedContext.builtin(2, 2, precision=1), 1)) == 4

    def test_partition_is_disjoint_cover(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=2)
        cylinders = witt_cylinder_partition(ctx, 1)
        for x in ctx.elements():
            assert sum(c.contains(x) for c in cylinders) == 1

    def test_coordinates_are_teichmuller_powers(self):
        ctx = UnramifiedContext.builtin(3, 1, precision=2)
        assert [w.coeffs for w in witt_coordinates(ctx.scalar(2), 2)] == [(2,), (1,)]

    def test_verschiebung_shift_exhaustive(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=3)
        assert all(verschiebung_shift_check(z, 2) for z in ctx.elements())

    def test_verschiebung_needs_precision(self):
        ctx = UnramifiedContext.builtin(2, 2, precision=2)
        with pytest.raises(PrecisionError):
            verschiebung_shift_check(ctx.one, 2)
