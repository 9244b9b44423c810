import logging
from argparse import Namespace
from fractions import Fraction

from padic_lift.core.exceptions import ExitCode, InvalidInput
from padic_lift.dependencies import (
    build_job,
    export_graph,
    get_prime,
    get_size_limit,
    load_graph_file,
    parse_polynomial,
    resolve_graph,
    safe_get,
)
from padic_lift.schemas.schemas import Report
from padic_lift.services.graph import frobenius_graph, stats
from padic_lift.services.interpreter import (
    ball_system_from_graph,
    certify_pipeline,
    certify_pipeline_ok,
    check_linear_dominance,
    classify_ball,
    finite_point_control,
    good_reduction_check,
    interpolate_at_centers,
    multiplier_report,
    stratum_signature,
    synthesize_piecewise_affine,
)
from padic_lift.services.rendering import renderer
from padic_lift.services.unramified import UnramifiedContext

logger = logging.getLogger(__name__)


def _require(args: Namespace, key: str) -> int:
    value = safe_get(args, key)
    if value is None:
        raise InvalidInput(f"--{key.replace('_', '-')} is required")
    return value


# ============ ENCODE ============

def cmd_encode(args: Namespace) -> Report:
    """Graph file -> cylinder ball system at the requested depth."""
    p, depth = get_prime(args), _require(args, "depth")
    g = resolve_graph(load_graph_file(args.input), get_size_limit(args))
    bs = ball_system_from_graph(g, p, depth, get_size_limit(args))
    logger.info(f"✅ Encoded {g.size} states into {p}-adic cylinders of depth {depth}")
    if safe_get(args, "dot"):
        renderer.write_dot(g, args.dot, name="encoded", labels=[str(b) for b in bs.balls])
    return Report(
        job=build_job(args),
        results={"graph": export_graph(g), "ball_system": bs.model_dump(mode="json")},
    )


# ============ CERTIFY ============

def _certify_unramified(args: Namespace) -> Report:
    p, depth = get_prime(args), _require(args, "depth")
    ctx = UnramifiedContext.builtin(p, args.f, precision=depth)
    f = parse_polynomial(args.polynomial)
    if safe_get(args, "frobenius"):
        g = frobenius_graph(ctx, get_size_limit(args))
    else:
        g = resolve_graph(load_graph_file(args.input), get_size_limit(args))
    report = certify_pipeline_ok(f, g, ctx, get_size_limit(args))
    verified = report.commutation.commutes
    if verified:
        logger.info(f"✅ {f} commutes with the graph on Witt cylinders of depth {depth} over F_{ctx.q}")
    else:
        logger.warning(f"❌ {f} breaks commutation at cylinder {report.commutation.witness}")
    return Report(
        job=build_job(args, frobenius=bool(safe_get(args, "frobenius"))),
        results={"graph": export_graph(g), "pipeline": report.model_dump(mode="json")},
        certificates={"commutation": report.commutation.model_dump(mode="json")},
        warnings=report.warnings,
        exit_code=ExitCode.OK if verified else ExitCode.CERTIFICATION_FAILED,
    )


def cmd_certify(args: Namespace) -> Report:
    """
    Synthesis of psi, robust certification of the given polynomial, commutation and
    multipliers. Exit 0 iff the polynomial is certified exact.
    """
    if safe_get(args, "f", 1) > 1:
        return _certify_unramified(args)
    p, depth = get_prime(args), _require(args, "depth")
    g = resolve_graph(load_graph_file(args.input), get_size_limit(args))
    f = parse_polynomial(args.polynomial)
    report = certify_pipeline(f, g, p, depth, size_limit=get_size_limit(args))
    cert = report.certificate
    warnings = list(report.warnings)
    if not cert.certified_exact:
        entry = cert.balls[cert.failing_ball]
        warnings.append(
            f"ball {entry.index} {entry.source}: eps exponent {entry.epsilon} does not exceed "
            f"max target exponent {cert.max_target_exponent}; dominance {entry.dominance.status.value}"
        )
    return Report(
        job=build_job(args),
        results={
            "graph": export_graph(g),
            "psi": report.psi.model_dump(mode="json"),
            "commutation": report.commutation.model_dump(mode="json"),
            "multipliers": [m.model_dump(mode="json") for m in report.multipliers],
        },
        certificates={"robust_exactness": cert.model_dump(mode="json")},
        warnings=warnings,
        exit_code=ExitCode.OK if cert.certified_exact else ExitCode.CERTIFICATION_FAILED,
    )


# ============ SYNTHESIZE & CLASSIFY ============

def cmd_synthesize(args: Namespace) -> Report:
    """Piecewise-affine exact model plus the interpolating polynomial at the centers."""
    p, depth = get_prime(args), _require(args, "depth")
    g = resolve_graph(load_graph_file(args.input), get_size_limit(args))
    bs = ball_system_from_graph(g, p, depth, get_size_limit(args))
    try:
        units = [Fraction(u) for u in args.units] if safe_get(args, "units") else None
    except ValueError as e:
        raise InvalidInput(f"--units must be rationals: {str(e)}")
    psi = synthesize_piecewise_affine(bs, units)
    interpolation = interpolate_at_centers(bs)
    return Report(
        job=build_job(args, units=[str(u) for u in units] if units else None),
        results={
            "psi": psi.model_dump(mode="json"),
            "interpolation": interpolation.model_dump(mode="json"),
            "psi_signature": [str(v) for v in stratum_signature(psi, bs)],
        },
        warnings=interpolation.warnings,
    )


def cmd_classify(args: Namespace) -> Report:
    """Per-ball dominance and interpretation type of a polynomial, with multipliers and reduction."""
    p, depth = get_prime(args), _require(args, "depth")
    g = resolve_graph(load_graph_file(args.input), get_size_limit(args))
    f = parse_polynomial(args.polynomial)
    bs = ball_system_from_graph(g, p, depth, get_size_limit(args))
    warnings = []
    balls = []
    for i, ball in enumerate(bs.balls):
        interpretation = classify_ball(f, ball, bs.target_of(i), allow_enumeration=True)
        if interpretation.enumerated_only:
            warnings.append(f"ball {i}: linear dominance fails, image known by enumeration only")
        balls.append(
            {
                "index": i,
                "dominance": check_linear_dominance(f, ball).model_dump(mode="json"),
                "interpretation": interpretation.model_dump(mode="json"),
            }
        )
    results = {
        "balls": balls,
        "center_offsets": [str(v) for v in finite_point_control(f, bs)],
        "multipliers": [m.model_dump(mode="json") for m in multiplier_report(f, bs)],
        "signature": [str(v) for v in stratum_signature(f, bs, require_exact=False)],
        "cycles": stats(g).cycles,
    }
    if g.size == p:
        results["good_reduction"] = good_reduction_check(f, g, p=p).model_dump(mode="json")
    return Report(job=build_job(args), results=results, warnings=warnings)


# ============ REGISTRATION ============

def register(subparsers, common) -> None:
    encode = subparsers.add_parser("encode", parents=[common], help="encode a graph as p-adic cylinders")
    encode.add_argument("--input", required=True, help="graph file (JSON, line table) or inline list")
    encode.add_argument("--p", type=int, required=True)
    encode.add_argument("--depth", type=int, required=True)
    encode.set_defaults(handler=cmd_encode)

    certify = subparsers.add_parser("certify", parents=[common], help="certify a polynomial interpreter")
    certify.add_argument("--input", help="graph file (not needed with --frobenius)")
    certify.add_argument("--polynomial", required=True)
    certify.add_argument("--p", type=int, required=True)
    certify.add_argument("--f", type=int, default=1, help="residue degree of the unramified lift")
    certify.add_argument("--depth", type=int, required=True)
    certify.add_argument("--frobenius", action="store_true", help="use the Frobenius graph of F_{p^f}")
    certify.set_defaults(handler=cmd_certify)

    synthesize = subparsers.add_parser("synthesize", parents=[common], help="build psi and the center interpolant")
    synthesize.add_argument("--input", required=True)
    synthesize.add_argument("--p", type=int, required=True)
    synthesize.add_argument("--depth", type=int, required=True)
    synthesize.add_argument("--units", nargs="+", help="unit part of each slope, e.g. 1 -1 1/3")
    synthesize.set_defaults(handler=cmd_synthesize)

    classify = subparsers.add_parser("classify", parents=[common], help="classify a polynomial ball by ball")
    classify.add_argument("--input", required=True)
    classify.add_argument("--polynomial", required=True)
    classify.add_argument("--p", type=int, required=True)
    classify.add_argument("--depth", type=int, required=True)
    classify.set_defaults(handler=cmd_classify)
