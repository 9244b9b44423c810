import json
import logging
import re
from argparse import Namespace
from typing import Any, List, Optional

from pydantic import ValidationError
from sympy import Poly, ZZ, symbols
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from padic_lift.core.config import resolve_size_limit, settings
from padic_lift.core.exceptions import InvalidInput, PolynomialSyntaxError
from padic_lift.schemas.schemas import GraphFile, JobSpec
from padic_lift.services.graph import FunctionalGraph, from_successors, graph_of_polynomial_mod
from padic_lift.services.padic_core import IntPolynomial, require_prime
from padic_lift.services.unramified import UnramifiedContext

logger = logging.getLogger(__name__)

_Z = symbols("z")

# integers, z, + - * ^ and parentheses; nothing else reaches the sympy parser
POLYNOMIAL_GRAMMAR = re.compile(r"^[0-9z+\-*^()\s]+$")


def safe_get(args: Namespace, key: str, default: Any = None) -> Any:
    """Reads an optional argparse attribute that not every subcommand defines."""
    value = getattr(args, key, None)
    return default if value is None else value


# ============ POLYNOMIALS ============

def parse_polynomial(text: Optional[str]) -> IntPolynomial:
    """
    Parses an integer-coefficient polynomial in z, e.g. "z^2 + 1" or "(z-1)*(z+2)".
    The string is checked against the grammar before sympy expands it.
    """
    if not text or not POLYNOMIAL_GRAMMAR.match(text):
        raise PolynomialSyntaxError(f"'{text}' is not an integer polynomial in z (allowed: digits z + - * ^ ( ))")
    try:
        expr = parse_expr(
            text,
            local_dict={"z": _Z},
            transformations=standard_transformations + (convert_xor,),
        )
        poly = Poly(expr, _Z, domain=ZZ)
    except Exception as e:
        raise PolynomialSyntaxError(f"cannot parse '{text}': {str(e)}")
    return IntPolynomial(coefficients=[int(c) for c in reversed(poly.all_coeffs())])


# ============ GRAPH INPUTS ============

def _read_source(source: str) -> Any:
    text = source.strip()
    if not text.startswith(("[", "{")):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read().strip()
        except OSError as e:
            raise InvalidInput(f"cannot read graph file {source}: {str(e)}")
    if text.startswith(("[", "{")):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidInput(f"graph file is not valid JSON: {str(e)}")
        return {"successors": data} if isinstance(data, list) else data
    # line-oriented: whitespace-separated successor table
    try:
        return {"successors": [int(tok) for tok in text.split()]}
    except ValueError:
        raise InvalidInput("graph file must be JSON or a whitespace-separated successor table")


def load_graph_file(source: Optional[str]) -> GraphFile:
    """Accepts a path, an inline JSON document, or an inline successor list like "[1,0]"."""
    if not source:
        raise InvalidInput("an --input graph is required")
    try:
        return GraphFile.model_validate(_read_source(source))
    except ValidationError as e:
        raise InvalidInput(f"invalid graph file: {str(e)}")


def resolve_graph(gf: GraphFile, size_limit: Optional[int] = None) -> FunctionalGraph:
    if gf.successors is not None:
        return from_successors(gf.successors)
    if gf.polynomial is not None:
        return graph_of_polynomial_mod(parse_polynomial(gf.polynomial), gf.m, size_limit)
    raise InvalidInput("graph file lists components; use 'dcrt --mode assemble'")


def resolve_components(gf: GraphFile, size_limit: Optional[int] = None) -> List[FunctionalGraph]:
    if gf.components is None:
        raise InvalidInput("assembly needs a graph file with a components list")
    return [resolve_graph(c, size_limit) for c in gf.components]


def export_graph(g: FunctionalGraph) -> dict:
    """Graph-file form of a graph; re-ingests through load_graph_file."""
    return {"m": g.size, "successors": list(g.successor)}


# ============ PARAMETERS ============

def get_prime(args: Namespace) -> int:
    p = safe_get(args, "p")
    if p is None:
        raise InvalidInput("--p is required")
    return require_prime(p)


def get_size_limit(args: Namespace) -> int:
    return resolve_size_limit(safe_get(args, "size_limit"))


def get_precision(args: Namespace) -> int:
    return safe_get(args, "precision", settings.DEFAULT_PRECISION)


def get_context(args: Namespace, precision: int) -> UnramifiedContext:
    return UnramifiedContext.builtin(get_prime(args), safe_get(args, "f", 1), precision=precision)


def build_job(args: Namespace, **parameters: Any) -> JobSpec:
    """Echo of everything the run depends on."""
    return JobSpec(
        command=args.command,
        input=safe_get(args, "input"),
        polynomial=safe_get(args, "polynomial"),
        p=safe_get(args, "p"),
        f=safe_get(args, "f", 1),
        depth=safe_get(args, "depth"),
        precision=safe_get(args, "precision"),
        max_n=safe_get(args, "max_n"),
        parameters=parameters,
        size_limit=get_size_limit(args),
        json_out=safe_get(args, "json"),
        dot_out=safe_get(args, "dot"),
    )
