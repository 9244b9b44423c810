import math
import random

import networkx as nx
import pytest

from padic_lift.core.exceptions import DigitOutOfRange, InvalidInput, OutOfRange, SizeLimitExceeded
from padic_lift.services.graph import (
    Encoding,
    cycle_length_from,
    cylinder_partition,
    encode,
    from_successors,
    graph_of_polynomial_mod,
    graph_product,
    graph_product_many,
    identity_graph,
    indegree_under_extension,
    product_components,
    product_index,
    refine_graph,
    refinement_map,
    stats,
)
from tests.conftest import poly


def _rotate(cycle):
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


class TestFunctionalGraph:
    def test_rejects_out_of_range(self):
        with pytest.raises(OutOfRange):
            from_successors([0, 2])

    def test_rejects_empty(self):
        with pytest.raises(InvalidInput):
            from_successors([])

    def test_iterate(self, example_graph):
        assert example_graph.iterate(2, 2) == 0
        assert example_graph.iterate(3, 10) == 3


class TestStats:
    def test_leaves(self):
        s = stats(from_successors([0, 1, 4, 2, 2, 4, 1]))
        assert s.leaves == [3, 5, 6]
        assert s.indegrees == [1, 2, 2, 0, 2, 0, 0]

    def test_quadratic_mod_three(self):
        s = stats(from_successors([1, 2, 2]))
        assert s.cycles == [[2]]
        assert s.fixed_points == [2]
        assert s.tail_depth == [2, 1, 0]

    def test_example_graph(self, example_graph):
        s = stats(example_graph)
        assert s.cycles == [[0, 1], [3]]
        assert s.periodic == [0, 1, 3]
        assert s.cycle_of == [0, 0, 0, 1]
        assert s.tail_depth == [0, 0, 1, 0]

    def test_cycle_length_from(self, example_graph):
        assert cycle_length_from(example_graph, 2) == 2
        assert cycle_length_from(example_graph, 3) == 1

    def test_matches_networkx(self):
        rng = random.Random(7)
        for _ in range(60):
            m = rng.randint(1, 40)
            succ = [rng.randrange(m) for _ in range(m)]
            s = stats(from_successors(succ))
            digraph = nx.DiGraph()
            digraph.add_nodes_from(range(m))
            digraph.add_edges_from((x, y) for x, y in enumerate(succ))
            oracle = {_rotate(c) for c in nx.simple_cycles(digraph)}
            assert {tuple(c) for c in s.cycles} == oracle
            assert sum(len(c) for c in s.cycles) == len(s.periodic)
            assert s.leaves == sorted(v for v in range(m) if digraph.in_degree(v) == 0)


class TestEncoding:
    def test_least_significant_first(self):
        assert encode((2, 0, 1), 3) == 11
        assert Encoding(p=3, digits=3).decode(11) == (2, 0, 1)

    def test_digit_out_of_range(self):
        with pytest.raises(DigitOutOfRange):
            encode((0, 2), 2)

    def test_wrong_length(self):
        with pytest.raises(InvalidInput):
            Encoding(p=2, digits=3).encode((1, 0))

    def test_cylinders(self):
        balls = cylinder_partition(3, 2)
        assert len(balls) == 9
        assert all(b.radius_exp == 2 for b in balls)

    def test_cylinder_size_guard(self):
        with pytest.raises(SizeLimitExceeded):
            cylinder_partition(2, 12, size_limit=1000)

    def test_refinement(self):
        assert refinement_map(2, 2, 1) == [0, 1, 0, 1]
        with pytest.raises(InvalidInput):
            refinement_map(2, 1, 2)

    def test_refine_graph(self):
        fine = graph_of_polynomial_mod(poly(1, 0, 1), 8)
        assert refine_graph(fine, 2, 3, 2) == graph_of_polynomial_mod(poly(1, 0, 1), 4)

    def test_refine_graph_disagreement(self):
        with pytest.raises(InvalidInput):
            refine_graph(from_successors([0, 1, 1, 1]), 2, 2, 1)


class TestProducts:
    def test_row_major(self):
        assert product_index((1, 2), (2, 3)) == 5
        assert product_components(5, (2, 3)) == (1, 2)

    def test_swap_times_loop(self):
        g = graph_product(from_successors([1, 0]), from_successors([0]))
        assert list(g.successor) == [1, 0]

    def test_coprime_cycles_merge(self):
        g = graph_product(from_successors([1, 0]), from_successors([1, 2, 0]))
        assert stats(g).cycle_lengths == [6]

    def test_periods_combine_by_lcm(self):
        def periodic_by_walk(g, v):
            w = g.successor[v]
            for _ in range(g.size):
                if w == v:
                    return True
                w = g.successor[w]
            return False

        rng = random.Random(8)
        for _ in range(200):
            m1, m2 = rng.randint(1, 8), rng.randint(1, 8)
            g1 = from_successors([rng.randrange(m1) for _ in range(m1)])
            g2 = from_successors([rng.randrange(m2) for _ in range(m2)])
            g = graph_product(g1, g2)
            st = stats(g)
            for x1 in range(m1):
                for x2 in range(m2):
                    v = product_index((x1, x2), (m1, m2))
                    periodic = periodic_by_walk(g1, x1) and periodic_by_walk(g2, x2)
                    assert periodic_by_walk(g, v) is periodic
                    assert (st.tail_depth[v] == 0) is periodic
                    period = math.lcm(cycle_length_from(g1, x1), cycle_length_from(g2, x2))
                    assert cycle_length_from(g, v) == period
                    if periodic:
                        assert len(st.cycles[st.cycle_of[v]]) == period

    def test_product_of_identities(self):
        assert graph_product_many([identity_graph(2), identity_graph(3)]) == identity_graph(6)

    def test_size_guard(self):
        with pytest.raises(SizeLimitExceeded):
            graph_product(identity_graph(40), identity_graph(40), size_limit=1000)


class TestInducedGraphs:
    def test_polynomial_mod_six(self):
        assert list(graph_of_polynomial_mod(poly(1, 0, 1), 6).successor) == [1, 2, 5, 4, 5, 2]

    def test_negative_coefficients(self):
        assert list(graph_of_polynomial_mod(poly(1, -1), 4).successor) == [1, 0, 3, 2]

    def test_indegree_over_f9(self):
        s = indegree_under_extension(poly(1, 0, 1), 3, 2)
        assert s.indegrees[0] == 2

    def test_indegree_over_f5(self):
        s = indegree_under_extension(poly(1, 0, 1), 5, 1)
        assert s.indegrees[0] == 2

    def test_leaves_shrink_under_extension(self):
        base = indegree_under_extension(poly(1, 0, 1), 3, 1)
        assert 0 in base.leaves
        assert 0 not in indegree_under_extension(poly(1, 0, 1), 3, 2).leaves
