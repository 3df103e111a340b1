"""
Command-line entry point: `cleangog <command> ...`.

Exit codes:
    0  success (certificate emitted, input clean, certificate valid, suite passed)
    1  negative verdict: the element is the identity (separate), the certificate
       is rejected (verify) or a suite found counterexamples (lemmalab)
    2  the element lies outside the finite-index subgroup; a NonPWitness is printed
    3  a cap was exceeded or no depth up to the cap separated the element
    4  invalid input: unreadable file, schema error, unknown name, unclean graph;
       also a clean graph whose collapse is unsupported (status "unsupported")

Command output goes to stdout as JSON; failures are reported on stderr as a
CommandResponse document. A certificate is only printed or written on exit 0.
"""

# Import argparse for the command-line surface.
import argparse
# Import json for command output.
import json
# Import sys for stdout/stderr and the exit status.
import sys
# Import Path for certificate files.
from pathlib import Path
# Import typing for type hints.
from typing import Any, Callable, Dict, List, Optional

# Import ValidationError to map schema errors onto the invalid-input exit code.
from pydantic import ValidationError

# Import toolkit modules.
from . import __version__
from .caps import DEFAULT_ELEMENT_CAP, DEFAULT_MONOMIAL_CAP, DEFAULT_ORDER_CAP
from .exceptions import (
    CapExceeded,
    CleanGogError,
    DepthExceeded,
    IdentityElement,
    InvalidInput,
    NotClean,
    OutsideSubgroup,
    UnalignedCollapse,
)
from .fixtures import fixture_names, load_gog
from .freegrp import Basis, format_word, parse_word
from .gog import (
    GraphOfGroups,
    britton_reduce,
    collapse,
    format_gog_word,
    parse_gog_word,
    pi1_presentation,
    polyfree_chain,
    validate_clean,
)
from .lemmalab import SUITES, LabParams, run_suite
from .logger import ToolkitLogger
from .pfiltration import build_lambda_oracle, layer_dims
from .registry import Registry
from .schemas import SUPPORTED_PRIMES, CertificateModel, CommandResponse, RunConfig
from .separator import Certificate, kernel_cover, lift_gog, rewrite_into_cover, separate, verify_certificate

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_NON_P = 2
EXIT_CAP = 3
EXIT_INVALID = 4

COMMANDS = Registry("command")


def _emit(data: Any) -> None:
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _report(status: str, message: str, data: Optional[Dict[str, Any]] = None) -> None:
    response = CommandResponse(status=status, message=message, data=data)
    sys.stderr.write(response.model_dump_json() + "\n")


def _load_clean(path: str) -> GraphOfGroups:
    g = GraphOfGroups.from_model(load_gog(path))
    validate_clean(g).raise_for_status()
    return g


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        p=args.p, depth_cap=args.depth_cap, element_cap=args.element_cap,
        monomial_cap=args.monomial_cap, order_cap=args.order_cap, seed=args.seed,
        jobs=args.jobs, input_path=getattr(args, "path", None), cert_out=args.cert_out,
    )


def _depth(args: argparse.Namespace, config: RunConfig) -> int:
    """
    --depth when given, the depth cap otherwise.

    Raises:
        InvalidInput: if --depth is below 1
    """
    depth = config.depth_cap if args.depth is None else args.depth
    if depth < 1:
        raise InvalidInput(f"--depth must be at least 1, got {depth}")
    return depth


def _rank(args: argparse.Namespace) -> int:
    if args.rank < 1:
        raise InvalidInput(f"--rank must be at least 1, got {args.rank}")
    return args.rank


@COMMANDS.register("validate", "Check that a graph of groups is algebraically clean")
def cmd_validate(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    report = validate_clean(GraphOfGroups.from_model(load_gog(args.path)))
    if not report.ok:
        _report("error", f"not clean: {', '.join(sorted(set(report.kinds())))}",
                {"diagnostics": report.diagnostics})
        return EXIT_INVALID
    _emit({"path": args.path, "clean": True})
    return EXIT_OK


@COMMANDS.register("collapse", "Collapse a spanning tree and print the one-vertex presentation")
def cmd_collapse(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    c = collapse(_load_clean(args.path))
    _emit(c.summary())
    return EXIT_OK


@COMMANDS.register("reduce", "Print the Britton normal form of a word")
def cmd_reduce(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    c = collapse(_load_clean(args.path))
    w = parse_gog_word(args.word, c)
    reduced = britton_reduce(w, c)
    _emit({"word": format_gog_word(w), "reduced": format_gog_word(reduced), "identity": reduced.is_identity()})
    return EXIT_OK


@COMMANDS.register("separate", "Find a finite quotient in which a word survives")
def cmd_separate(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    c = collapse(_load_clean(args.path))
    w = parse_gog_word(args.word, c)
    with_timing = log.performance_monitor("separate")(separate)
    result = with_timing(c, w, config.p, config)
    if not isinstance(result, Certificate):
        _emit(result.to_model().model_dump())
        log.info("element outside the finite-index subgroup", order=result.order)
        return EXIT_NON_P
    document = result.to_model().model_dump()
    if config.cert_out:
        Path(config.cert_out).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        _emit({"certificate": config.cert_out, "degree": result.degree, "meta": document["meta"]})
    else:
        _emit(document)
    log.log_metric("certificate_degree", result.degree, depth=result.meta.depth)
    return EXIT_OK


@COMMANDS.register("verify", "Check a certificate against the graph of groups and the word")
def cmd_verify(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    try:
        cert = CertificateModel.model_validate_json(Path(args.cert).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InvalidInput(f"cannot read {args.cert}: {exc}")
    c = collapse(_load_clean(args.path))
    w = parse_gog_word(args.word, c)
    if cert.p not in SUPPORTED_PRIMES:
        _report("error", "certificate rejected", {"failures": [f"unsupported prime {cert.p}"]})
        return EXIT_NEGATIVE
    kc = kernel_cover(c.extensions(), cert.p, config.monitor())
    cov = lift_gog(c, kc)
    try:
        cover_word = rewrite_into_cover(w, kc, cov)
    except OutsideSubgroup:
        _report("error", "certificate rejected", {"failures": ["word is outside the finite-index subgroup"]})
        return EXIT_NEGATIVE
    verdict = verify_certificate(cert, pi1_presentation(cov.presentation), cover_word, cover_index=kc.size)
    if not verdict:
        _report("error", "certificate rejected", {"failures": verdict.failures})
        return EXIT_NEGATIVE
    _emit({"valid": True, "degree": cert.degree, "p": cert.p})
    return EXIT_OK


@COMMANDS.register("lemmalab", "Run a property suite (--list shows the suites)")
def cmd_lemmalab(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    if args.list or not args.suite:
        _emit(SUITES.describe())
        return EXIT_OK if args.list else EXIT_INVALID
    params = LabParams(p=config.p, rank=_rank(args), depth=_depth(args, config), seed=config.seed,
                       count=args.count, config=config, fixtures=args.fixture)
    report = run_suite(args.suite, params)
    _emit(report.to_dict())
    log.log_response("lemmalab", "ok" if report.ok else "failed", suite=args.suite, checks=report.checks)
    return EXIT_OK if report.ok else EXIT_NEGATIVE


@COMMANDS.register("info", "Summarize a graph of groups: presentation, poly-free chain, layer dimensions")
def cmd_info(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    g = _load_clean(args.path)
    c = collapse(g)
    chain = polyfree_chain(c)
    depth = _depth(args, config)
    oracle = build_lambda_oracle(config.p, c.basis.rank, depth, config.monitor())
    _emit({
        "vertices": len(g.graph.vertices),
        "edges": len(g.graph.representatives()),
        "presentation": c.summary(),
        "loop_count": len(c.loops),
        "polyfree": {
            "quotient_rank": chain.quotient_rank,
            "chain": chain.chain,
            "chain_length": chain.chain_length,
            "relators_project_trivially": chain.relators_project_trivially,
            "kernel_factors": chain.kernel_factors,
        },
        "p": config.p,
        "layer_dims": layer_dims(oracle),
    })
    return EXIT_OK


@COMMANDS.register("pfilt dims", "Dimensions of the layers L_j of the lower p-central filtration of F")
def cmd_pfilt_dims(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    rank, depth = _rank(args), _depth(args, config)
    oracle = build_lambda_oracle(config.p, rank, depth, config.monitor())
    _emit({"p": config.p, "rank": rank, "depth": depth, "dims": layer_dims(oracle)})
    return EXIT_OK


@COMMANDS.register("pfilt member", "Deepest filtration layer containing a free word")
def cmd_pfilt_member(args: argparse.Namespace, config: RunConfig, log: ToolkitLogger) -> int:
    rank, depth = _rank(args), _depth(args, config)
    w = parse_word(args.word, Basis.standard(rank))
    oracle = build_lambda_oracle(config.p, rank, depth, config.monitor())
    members = [oracle.member(w, j) for j in range(1, depth + 1)]
    _emit({"word": format_word(w), "p": config.p, "depth": depth,
           "member": members, "level": sum(members)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=2, help="prime (2, 3 or 5)")
    common.add_argument("--depth-cap", type=int, default=None, help="largest filtration depth")
    common.add_argument("--element-cap", type=int, default=DEFAULT_ELEMENT_CAP)
    common.add_argument("--monomial-cap", type=int, default=DEFAULT_MONOMIAL_CAP)
    common.add_argument("--order-cap", type=int, default=DEFAULT_ORDER_CAP)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="depth search workers")
    common.add_argument("--cert-out", default=None, help="write the certificate here")
    common.add_argument("--log-level", default="WARNING")

    parser = argparse.ArgumentParser(prog="cleangog", description="Residual p-finiteness toolkit for "
                                     "graphs of free groups with clean edge maps")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, *positional: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=COMMANDS.get(name).description)
        for arg in positional:
            p.add_argument(arg)
        return p

    add("validate", "path")
    add("collapse", "path")
    add("reduce", "path", "word")
    add("separate", "path", "word")
    add("verify", "cert", "path", "word")
    lab = add("lemmalab")
    lab.add_argument("suite", nargs="?", choices=SUITES.names())
    lab.add_argument("--list", action="store_true", help="list the suites")
    lab.add_argument("--rank", type=int, default=2)
    lab.add_argument("--depth", type=int, default=None)
    lab.add_argument("--count", type=int, default=None, help="sample count")
    lab.add_argument("--fixture", action="append", default=None, choices=fixture_names(),
                     help="restrict fixture-driven suites to this fixture (repeatable)")
    info = add("info", "path")
    info.add_argument("--depth", type=int, default=None)

    pfilt = sub.add_parser("pfilt", help="lower p-central filtration of a free group")
    pfilt_sub = pfilt.add_subparsers(dest="pfilt_command", required=True)
    dims = pfilt_sub.add_parser("dims", parents=[common], help=COMMANDS.get("pfilt dims").description)
    member = pfilt_sub.add_parser("member", parents=[common], help=COMMANDS.get("pfilt member").description)
    member.add_argument("word")
    for p in (dims, member):
        p.add_argument("--rank", type=int, default=2)
        p.add_argument("--depth", type=int, default=None)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, IdentityElement):
        return EXIT_NEGATIVE
    if isinstance(exc, (CapExceeded, DepthExceeded)):
        return EXIT_CAP
    return EXIT_INVALID


def _status(exc: Exception, code: int) -> str:
    if code == EXIT_CAP:
        return "limit"
    if isinstance(exc, UnalignedCollapse):
        return "unsupported"
    return "error"


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    name = args.command if args.command != "pfilt" else f"pfilt {args.pfilt_command}"
    log = ToolkitLogger("cleangog", level=args.log_level.upper())
    log.log_request(name)
    try:
        config = _config(args)
        code = COMMANDS.get(name).execute(args, config, log)
    except (CleanGogError, ValidationError) as exc:
        code = _exit_code(exc)
        status = _status(exc, code)
        data: Dict[str, Any] = {"exception": type(exc).__name__, "exit_code": code}
        if isinstance(exc, CapExceeded):
            data.update(cap=exc.cap, limit=exc.limit, requested=exc.requested)
        if isinstance(exc, (NotClean, UnalignedCollapse)):
            data.update(diagnostics=exc.diagnostics)
        if isinstance(exc, ValidationError):
            message = f"invalid input: {exc.error_count()} validation errors"
        else:
            message = str(exc) or type(exc).__name__
        _report(status, message, data)
        if code == EXIT_INVALID:
            log.error(message, command=name)
    log.log_response(name, str(code))
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
