import logging
import os
from argparse import Namespace

from padic_lift.core.exceptions import ExitCode, InvalidInput
from padic_lift.dependencies import (
    build_job,
    export_graph,
    get_precision,
    get_prime,
    get_size_limit,
    load_graph_file,
    parse_polynomial,
    resolve_components,
    resolve_graph,
    safe_get,
)
from padic_lift.schemas.schemas import HenselLifted, Report
from padic_lift.services.arith_dynamics import (
    build_tower,
    check_tower_compatibility,
    dcrt_assemble,
    dcrt_decompose,
    detect_parabolic_growth,
    hensel_lift_cycle,
    is_congruence_preserving,
    locally_constant_lift_check,
    reduction_preserves_cycles,
    rigidity_check,
    route2_cauchy_check,
)
from padic_lift.services.graph import graph_of_polynomial_mod, stats
from padic_lift.services.padic_core import IntPolynomial
from padic_lift.services.rendering import renderer

logger = logging.getLogger(__name__)


# ============ DYNAMIC CRT ============

def cmd_dcrt(args: Namespace) -> Report:
    """Decompose a map on Z/mZ into prime-power components, or assemble components back."""
    limit = get_size_limit(args)
    gf = load_graph_file(args.input)
    if args.mode == "decompose":
        g = resolve_graph(gf, limit)
        decomposition = dcrt_decompose(g, size_limit=limit)
        if safe_get(args, "dot"):
            renderer.write_panels(
                decomposition.components, args.dot, "component", title=f"DCRT components of Z/{g.size}Z"
            )
        return Report(
            job=build_job(args, mode=args.mode),
            results={
                "graph": export_graph(g),
                "decomposition": decomposition.model_dump(mode="json"),
                "components": [export_graph(c) for c in decomposition.components],
            },
            certificates={"theta_isomorphism": decomposition.isomorphism_verified},
        )

    if args.mode == "assemble":
        components = resolve_components(gf, limit)
        g = dcrt_assemble(components, size_limit=limit)
        if safe_get(args, "dot"):
            renderer.write_dot(g, args.dot, name=f"assembled_{g.size}")
        return Report(
            job=build_job(args, mode=args.mode),
            results={"graph": export_graph(g), "moduli": [c.size for c in components]},
            certificates={"congruence_preserving": is_congruence_preserving(g, max(g.size, limit)).is_cp},
        )
    raise InvalidInput(f"unknown dcrt mode {args.mode}")


# ============ TOWERS ============

def cmd_tower(args: Namespace) -> Report:
    """Compatible tower of a polynomial over Z/p^nZ with per-level cycle data."""
    p, max_n = get_prime(args), args.max_n
    P = parse_polynomial(args.polynomial)
    tower = build_tower(P, p, max_n, get_size_limit(args))
    compatibility = check_tower_compatibility(tower)
    cycles = reduction_preserves_cycles(tower)
    growth = detect_parabolic_growth(P, p, max_n, seed=args.seed, size_limit=get_size_limit(args))
    if growth.parabolic:
        logger.info(f"⚠️ Cycle through {args.seed} grows with the level: {growth.lengths}")
    if safe_get(args, "dot"):
        renderer.write_tower(tower, args.dot)
    ok = bool(compatibility) and bool(cycles)
    return Report(
        job=build_job(args, seed=args.seed),
        results={
            "levels": [
                {"level": n, "size": g.size, "cycle_lengths": stats(g).cycle_lengths}
                for n, g in enumerate(tower.levels, start=1)
            ],
            "growth": growth.model_dump(mode="json"),
        },
        certificates={
            "compatibility": compatibility.model_dump(mode="json"),
            "reduction_preserves_cycles": cycles.model_dump(mode="json"),
        },
        exit_code=ExitCode.OK if ok else ExitCode.CERTIFICATION_FAILED,
    )


def cmd_hensel(args: Namespace) -> Report:
    """Lift a residue cycle point to Z/p^N; degenerate or non-exact periods exit 2 with the report."""
    p = get_prime(args)
    P = parse_polynomial(args.polynomial)
    result = hensel_lift_cycle(P, p, args.xbar, args.m, get_precision(args))
    lifted = isinstance(result, HenselLifted)
    if lifted:
        logger.info(f"✅ Lifted {args.xbar} to {result.point}")
    return Report(
        job=build_job(args, xbar=args.xbar, m=args.m),
        results={"hensel": result.model_dump(mode="json")},
        warnings=[] if lifted else [f"no unique lift: {result.kind}"],
        exit_code=ExitCode.OK if lifted else ExitCode.CERTIFICATION_FAILED,
    )


# ============ PROFINITE CHECKS ============

def cmd_profinite_check(args: Namespace) -> Report:
    """Locally constant lifts of the tower, and the Cauchy check of an approximating sequence."""
    p, max_n = get_prime(args), args.max_n
    P = parse_polynomial(args.polynomial)
    tower = build_tower(P, p, max_n, get_size_limit(args))
    sequence = [parse_polynomial(s) for s in args.sequence] if safe_get(args, "sequence") else [P] * max_n
    locally_constant = locally_constant_lift_check(tower)
    route2 = route2_cauchy_check(sequence, tower, args.c_exp)
    ok = bool(locally_constant) and route2.passed
    return Report(
        job=build_job(args, sequence=[str(s) for s in sequence], c_exp=args.c_exp),
        certificates={
            "locally_constant": locally_constant.model_dump(mode="json"),
            "route2": route2.model_dump(mode="json"),
        },
        exit_code=ExitCode.OK if ok else ExitCode.CERTIFICATION_FAILED,
    )


def cmd_rigidity(args: Namespace) -> Report:
    p = get_prime(args)
    verdict = rigidity_check(args.c1, args.c2, p, args.n)
    if safe_get(args, "dot"):
        q = p ** args.n
        for c in (args.c1, args.c2):
            g = graph_of_polynomial_mod(IntPolynomial(coefficients=(c, 0, 1)), q)
            renderer.write_dot(g, os.path.join(args.dot, f"quadratic_c{c}.dot"), name=f"c{c}")
    return Report(
        job=build_job(args, c1=args.c1, c2=args.c2, n=args.n),
        results={"rigidity": verdict.model_dump(mode="json"), "holds": verdict.holds},
    )


# ============ REGISTRATION ============

def register(subparsers, common) -> None:
    dcrt = subparsers.add_parser("dcrt", parents=[common], help="dynamic CRT decomposition / assembly")
    dcrt.add_argument("--input", required=True, help="graph file; components list for assemble")
    dcrt.add_argument("--mode", choices=["decompose", "assemble"], default="decompose")
    dcrt.set_defaults(handler=cmd_dcrt)

    tower = subparsers.add_parser("tower", parents=[common], help="compatible tower of a polynomial")
    tower.add_argument("--polynomial", required=True)
    tower.add_argument("--p", type=int, required=True)
    tower.add_argument("--max-n", type=int, required=True)
    tower.add_argument("--seed", type=int, default=0, help="residue whose cycle length is tracked")
    tower.set_defaults(handler=cmd_tower)

    hensel = subparsers.add_parser("hensel", parents=[common], help="Hensel-lift a periodic residue")
    hensel.add_argument("--polynomial", required=True)
    hensel.add_argument("--p", type=int, required=True)
    hensel.add_argument("--xbar", type=int, required=True)
    hensel.add_argument("--m", type=int, required=True, help="exact period at the residue level")
    hensel.add_argument("--precision", type=int, help="target precision N")
    hensel.set_defaults(handler=cmd_hensel)

    profinite = subparsers.add_parser("profinite-check", parents=[common], help="limit checks on a tower")
    profinite.add_argument("--polynomial", required=True)
    profinite.add_argument("--p", type=int, required=True)
    profinite.add_argument("--max-n", type=int, required=True)
    profinite.add_argument("--sequence", nargs="+", help="one polynomial per level (default: constant)")
    profinite.add_argument("--c-exp", type=int, default=0)
    profinite.set_defaults(handler=cmd_profinite_check)

    rigidity = subparsers.add_parser("rigidity", parents=[common], help="compare z^2 + c graphs mod p^n")
    rigidity.add_argument("--c1", type=int, required=True)
    rigidity.add_argument("--c2", type=int, required=True)
    rigidity.add_argument("--p", type=int, required=True)
    rigidity.add_argument("--n", type=int, required=True)
    rigidity.set_defaults(handler=cmd_rigidity)
