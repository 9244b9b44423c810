import logging
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from padic_lift.core.config import resolve_size_limit
from padic_lift.core.exceptions import DigitOutOfRange, InvalidInput, OutOfRange, guard_size
from padic_lift.services.padic_core import Ball, Polynomial, require_prime
from padic_lift.services.unramified import UnramifiedContext, evaluate_polynomial_ok, frobenius

logger = logging.getLogger(__name__)


# ============ FUNCTIONAL GRAPHS ============

class FunctionalGraph(BaseModel):
    """A self-map of {0..m-1} given by its successor table; fixed points are self-loops."""
    model_config = ConfigDict(frozen=True)

    successor: Tuple[int, ...]

    @model_validator(mode="after")
    def successors_in_range(self) -> "FunctionalGraph":
        m = len(self.successor)
        if m == 0:
            raise InvalidInput("a functional graph needs at least one vertex")
        for i, s in enumerate(self.successor):
            if not 0 <= s < m:
                raise OutOfRange(i, s, m)
        return self

    @property
    def size(self) -> int:
        return len(self.successor)

    def __getitem__(self, x: int) -> int:
        return self.successor[x]

    def iterate(self, x: int, times: int) -> int:
        for _ in range(times):
            x = self.successor[x]
        return x


class GraphStats(BaseModel):
    indegrees: List[int]
    leaves: List[int]
    cycles: List[List[int]]
    tail_depth: List[int]
    cycle_of: List[int]

    @model_validator(mode="after")
    def indegrees_account_for_every_edge(self) -> "GraphStats":
        if sum(self.indegrees) != len(self.indegrees):
            raise ValueError("indegrees must sum to the number of vertices")
        return self

    @property
    def periodic(self) -> List[int]:
        return sorted(v for v, d in enumerate(self.tail_depth) if d == 0)

    @property
    def cycle_lengths(self) -> List[int]:
        return [len(c) for c in self.cycles]

    @property
    def fixed_points(self) -> List[int]:
        return [c[0] for c in self.cycles if len(c) == 1]


def from_successors(succ: Sequence[int]) -> FunctionalGraph:
    return FunctionalGraph(successor=tuple(int(s) for s in succ))


def identity_graph(m: int) -> FunctionalGraph:
    return FunctionalGraph(successor=tuple(range(m)))


def stats(g: FunctionalGraph) -> GraphStats:
    """Single visited-marking pass: every vertex is walked until it meets a known vertex."""
    m, succ = g.size, g.successor
    indegrees = [0] * m
    for s in succ:
        indegrees[s] += 1

    state = [0] * m  # 0 unseen, 1 on the current walk, 2 settled
    tail = [0] * m
    cycle_of = [-1] * m
    cycles: List[List[int]] = []
    for start in range(m):
        if state[start]:
            continue
        path: List[int] = []
        pos: Dict[int, int] = {}
        v = start
        while state[v] == 0:
            state[v] = 1
            pos[v] = len(path)
            path.append(v)
            v = succ[v]
        if state[v] == 1:
            loop = path[pos[v]:]
            k = loop.index(min(loop))
            cycles.append(loop[k:] + loop[:k])
            for u in loop:
                cycle_of[u] = len(cycles) - 1
                state[u] = 2
            path = path[:pos[v]]
        for u in reversed(path):
            tail[u] = tail[succ[u]] + 1
            cycle_of[u] = cycle_of[succ[u]]
            state[u] = 2

    # deterministic cycle order: by smallest vertex
    order = sorted(range(len(cycles)), key=lambda i: cycles[i][0])
    rank = {old: new for new, old in enumerate(order)}
    return GraphStats(
        indegrees=indegrees,
        leaves=[v for v in range(m) if indegrees[v] == 0],
        cycles=[cycles[i] for i in order],
        tail_depth=tail,
        cycle_of=[rank[c] for c in cycle_of],
    )


def cycle_length_from(g: FunctionalGraph, seed: int) -> int:
    """Length of the cycle eventually reached from ``seed``."""
    seen: Dict[int, int] = {}
    v, step = seed, 0
    while v not in seen:
        seen[v] = step
        v = g.successor[v]
        step += 1
    return step - seen[v]


# ============ ENCODING & CYLINDERS ============

class Encoding(BaseModel):
    """enc_n: Sigma^n -> [0, p^n), digits read least significant first."""
    model_config = ConfigDict(frozen=True)

    p: int
    digits: int = Field(..., ge=1)

    @field_validator("p")
    @classmethod
    def p_is_prime(cls, v: int) -> int:
        return require_prime(v)

    def encode(self, x: Sequence[int]) -> int:
        if len(x) != self.digits:
            raise InvalidInput(f"expected {self.digits} digits, got {len(x)}")
        return encode(x, self.p)

    def decode(self, value: int) -> Tuple[int, ...]:
        if not 0 <= value < self.p ** self.digits:
            raise InvalidInput(f"{value} is not a depth-{self.digits} center")
        out = []
        for _ in range(self.digits):
            value, d = divmod(value, self.p)
            out.append(d)
        return tuple(out)


def encode(x: Sequence[int], p: int) -> int:
    total = 0
    for i, d in enumerate(x):
        if not 0 <= d < p:
            raise DigitOutOfRange(i, d, p)
        total += d * p ** i
    return total


def cylinder_partition(p: int, n: int, size_limit: Optional[int] = None) -> List[Ball]:
    require_prime(p)
    guard_size(p ** n, resolve_size_limit(size_limit), "cylinder partition")
    return [Ball(center=c, radius_exp=n, p=p) for c in range(p ** n)]


def refinement_map(p: int, n: int, m: int) -> List[int]:
    """Index of the depth-m cylinder containing each depth-n cylinder (m <= n)."""
    if m > n:
        raise InvalidInput(f"cannot coarsen depth {n} to finer depth {m}")
    return [c % p ** m for c in range(p ** n)]


def refine_graph(g: FunctionalGraph, p: int, n: int, m: int) -> FunctionalGraph:
    """Reduce a depth-n cylinder graph to depth m; every x in a depth-m class must agree mod p^m."""
    if g.size != p ** n:
        raise InvalidInput(f"graph has {g.size} vertices, depth {n} needs {p ** n}")
    q = p ** m
    table: List[Optional[int]] = [None] * q
    for x, c in enumerate(refinement_map(p, n, m)):
        image = g.successor[x] % q
        if table[c] is None:
            table[c] = image
        elif table[c] != image:
            raise InvalidInput(f"depth-{n} graph does not reduce to depth {m}: vertices {c} and {x} disagree")
    return FunctionalGraph(successor=tuple(table))


# ============ PRODUCTS ============

def product_index(indices: Sequence[int], sizes: Sequence[int]) -> int:
    """Row-major index of a tuple: (x1, x2) -> x1 * |X2| + x2."""
    index = 0
    for x, size in zip(indices, sizes):
        index = index * size + x
    return index


def product_components(index: int, sizes: Sequence[int]) -> Tuple[int, ...]:
    out = []
    for size in reversed(sizes):
        index, x = divmod(index, size)
        out.append(x)
    return tuple(reversed(out))


def graph_product(g1: FunctionalGraph, g2: FunctionalGraph, size_limit: Optional[int] = None) -> FunctionalGraph:
    m1, m2 = g1.size, g2.size
    guard_size(m1 * m2, resolve_size_limit(size_limit), "graph product")
    return FunctionalGraph(
        successor=tuple(g1.successor[x1] * m2 + g2.successor[x2] for x1 in range(m1) for x2 in range(m2))
    )


def graph_product_many(graphs: Sequence[FunctionalGraph], size_limit: Optional[int] = None) -> FunctionalGraph:
    if not graphs:
        return identity_graph(1)
    return reduce(lambda a, b: graph_product(a, b, size_limit), graphs)


# ============ INDUCED GRAPHS ============

def graph_of_polynomial_mod(P: Polynomial, m: int, size_limit: Optional[int] = None) -> FunctionalGraph:
    if m < 1:
        raise InvalidInput(f"modulus must be positive, got {m}")
    guard_size(m, resolve_size_limit(size_limit), "residue ring")
    return FunctionalGraph(successor=tuple(P.evaluate_mod(x, m) for x in range(m)))


def graph_of_polynomial_ok(P: Polynomial, ctx: UnramifiedContext, size_limit: Optional[int] = None) -> FunctionalGraph:
    """The map induced by P on O_K/p^N, vertices in OkElement index order."""
    return FunctionalGraph(
        successor=tuple(evaluate_polynomial_ok(P, x).index for x in ctx.elements(size_limit))
    )


def frobenius_graph(ctx: UnramifiedContext, size_limit: Optional[int] = None) -> FunctionalGraph:
    """Frobenius on Witt cylinders of depth ctx.precision (x -> x^p on the residue field at depth 1)."""
    return FunctionalGraph(successor=tuple(frobenius(x).index for x in ctx.elements(size_limit)))


def indegree_under_extension(P: Polynomial, p: int, f: int, size_limit: Optional[int] = None) -> GraphStats:
    """Stats of the map induced by P on F_{p^f}; shows leaves disappearing under extension."""
    if f > 4:
        raise InvalidInput(f"residue degree {f} exceeds 4")
    ctx = UnramifiedContext.builtin(p, f, precision=1)
    guard_size(ctx.q, resolve_size_limit(size_limit), "residue field")
    result = stats(graph_of_polynomial_ok(P, ctx, size_limit))
    logger.debug(f"🔍 {P} over F_{ctx.q}: {len(result.leaves)} leaves, {len(result.cycles)} cycles")
    return result
