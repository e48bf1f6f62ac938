#!/usr/bin/env python3

import argparse
import json
import logging
import sys
from typing import Dict, List, Optional

from .analyzer import FamilyAnalyzer
from .decomp import decompose_family
from .documents import (
    DocumentReader,
    certificate_document,
    decomposition_document,
    family_document,
    write_document,
)
from .errors import JointSimError, SchemaError, VerificationFailure
from .famgen import GenSpec, Recipe, generate
from .reporter import ReportGenerator, certificate_section, checks_section, decomposition_section
from .simjoint import joint_similarity, verify_similarity

logger = logging.getLogger(__name__)

TOLERANCE_FLAGS = ("tol_rank", "tol_commute", "tol_cluster", "tol_contraction", "tol_spectrum")


def setup_logging(verbose: bool = False):
    """
    Configure logging for the application.

    Args:
        verbose: Enable debug logging if True
    """
    level = logging.DEBUG if verbose else logging.INFO

    logging.basicConfig(
        level=level,
        format='%(asctime)s [%(levelname)s] %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def _overrides(args) -> Dict[str, Optional[float]]:
    return {name: getattr(args, name, None) for name in TOLERANCE_FLAGS}


def _read_family(args):
    return DocumentReader(args.input).read_family(_overrides(args))


def cmd_analyze(args) -> int:
    family = _read_family(args)
    analyzer = FamilyAnalyzer(p_max=args.p_max)
    analysis = analyzer.analyze(family)
    write_document(analyzer.to_document(analysis), args.output)
    ReportGenerator(args.report).generate_report("analyze", family, analyzer.create_summary(analysis))
    logger.info(f"✓ Analysis complete: commutator residual {analysis.commutator_residual:.4g}")
    return 0


def cmd_decompose(args) -> int:
    family = _read_family(args)
    decomp = decompose_family(family)
    write_document({"family": family.name, **decomposition_document(decomp)}, args.output)
    ReportGenerator(args.report).generate_report("decompose", family, decomposition_section(decomp))
    logger.info(f"✓ Decomposition complete: {len(decomp.parts)} parts, alpha {decomp.alpha:.6g}")
    return 0


def cmd_similarize(args) -> int:
    family = _read_family(args)
    reporter = ReportGenerator(args.report)
    try:
        cert = joint_similarity(family)
    except VerificationFailure as e:
        if e.certificate is not None:
            write_document(certificate_document(e.certificate, family.name), args.output)
            reporter.generate_report("similarize", family, certificate_section(e.certificate), status="failed")
        raise
    write_document(certificate_document(cert, family.name), args.output)
    reporter.generate_report("similarize", family, certificate_section(cert))
    logger.info(f"✓ Certificate: ||Y|| = {cert.norm_Y:.6g} <= {cert.bound:.6g}")
    return 0


def cmd_verify(args) -> int:
    family = _read_family(args)
    Y = DocumentReader(args.similarity).read_similarity(family.n)
    report = verify_similarity(family, Y)
    worst, worst_norm = report.worst_member

    checks = {
        "contraction": report.contraction,
        "balance": report.balanced,
        "bound": report.within_bound is not False,
    }
    details = {
        "contraction": f"worst {worst} = {worst_norm:.12g}",
        "balance": f"||Y|| = {report.norm_Y:.12g}, ||Y^-1|| = {report.norm_Yinv:.12g}",
        "bound": f"{report.bound:.6g}" if report.bound is not None else f"skipped ({report.bound_note})",
    }
    write_document({
        "family": family.name,
        "passed": report.passed,
        "conjugated_norms": report.conjugated_norms,
        "worst_member": worst,
        "worst_norm": worst_norm,
        "norm_Y": report.norm_Y,
        "norm_Yinv": report.norm_Yinv,
        "balanced": report.balanced,
        "bound": report.bound,
        "within_bound": report.within_bound,
        "K": report.K,
        "r": report.r,
        "alpha": report.alpha,
    }, args.output)
    ReportGenerator(args.report).generate_report(
        "verify", family, checks_section(checks, details), status="ok" if report.passed else "failed"
    )
    for name, ok in checks.items():
        logger.info(f"{'✓' if ok else '✗'} {name}: {details[name]}")
    if not report.passed:
        failed = [name for name, ok in checks.items() if not ok]
        raise VerificationFailure(f"Verification failed: {', '.join(failed)}", worst_member=worst, norm=worst_norm)
    return 0


def cmd_generate(args) -> int:
    settings = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                settings = json.load(f)
        except UnicodeDecodeError as e:
            raise SchemaError(f"{args.config} is not UTF-8 text: {e}") from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"{args.config} is not valid JSON: {e}") from e
        if not isinstance(settings, dict):
            raise SchemaError(f"{args.config}: generator config must be an object")
    for key in ("seed", "n", "recipe", "spectral_radius_cap", "norm_cap", "size", "m", "cond_cap"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    spec = GenSpec.from_dict(settings)
    family = generate(spec)
    family.tolerances = family.tolerances.with_overrides(**_overrides(args))
    write_document(family_document(family), args.output)
    logger.info(f"✓ Generated '{family.name}': {len(family)} members of size {family.n}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', '-v', action='store_true', help='Enable verbose debug logging')
    common.add_argument('--output', '-o', type=str, default=None, help='Write the JSON document here (default: stdout)')
    common.add_argument('--report', type=str, default=None, help='Also write a markdown report to this path')
    common.add_argument('--p-max', type=int, default=1000, help='Largest power sampled by power-bound checks')
    for name in TOLERANCE_FLAGS:
        common.add_argument(
            f"--{name.replace('_', '-')}",
            dest=name,
            type=float,
            default=None,
            help=f"Override {name} (wins over the document's tolerances)"
        )

    parser = argparse.ArgumentParser(
        prog='jointsim',
        description='jointsim - Joint similarity of commuting power-bounded matrices to contractions',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  jointsim generate --recipe counterexample_unbounded --m 5 -o family.json
  jointsim analyze family.json --report analysis.md
  jointsim decompose family.json
  jointsim similarize family.json -o certificate.json
  jointsim verify family.json certificate.json

Exit codes:
  0 ok, 2 schema, 3 numerical failure, 4 commutativity,
  5 domain / power bound / singular, 6 verification failure
        """
    )
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('analyze', parents=[common], help='Profile every member and the family')
    p.add_argument('input', type=str, help='Family document (JSON)')
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('decompose', parents=[common], help='Joint spectral decomposition')
    p.add_argument('input', type=str, help='Family document (JSON)')
    p.set_defaults(handler=cmd_decompose)

    p = sub.add_parser('similarize', parents=[common], help='Build and certify a joint similarity')
    p.add_argument('input', type=str, help='Family document (JSON)')
    p.set_defaults(handler=cmd_similarize)

    p = sub.add_parser('verify', parents=[common], help='Re-check a claimed similarity from scratch')
    p.add_argument('input', type=str, help='Family document (JSON)')
    p.add_argument('similarity', type=str, help='Certificate or {"Y": ...} document (JSON)')
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('generate', parents=[common], help='Write a seeded test family')
    p.add_argument('--config', type=str, default=None, help='Generator settings (JSON object)')
    p.add_argument('--recipe', type=str, default=None, choices=[r.value for r in Recipe])
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--n', type=int, default=None, help='Dimension')
    p.add_argument('--size', type=int, default=None, help='Number of members')
    p.add_argument('--m', type=int, default=None, help='Truncation of the unbounded family')
    p.add_argument('--spectral-radius-cap', dest='spectral_radius_cap', type=float, default=None)
    p.add_argument('--norm-cap', dest='norm_cap', type=float, default=None)
    p.add_argument('--cond-cap', dest='cond_cap', type=float, default=None)
    p.set_defaults(handler=cmd_generate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the jointsim CLI.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    setup_logging(args.verbose)

    try:
        logger.info("=" * 70)
        logger.info(f"JOINTSIM - {args.command}")
        logger.info("=" * 70)

        code = args.handler(args)

        logger.info("=" * 70)
        logger.info(f"JOINTSIM - {args.command} complete")
        logger.info("=" * 70)
        return code

    except JointSimError as e:
        logger.error(f"✗ {type(e).__name__}: {str(e)}")
        sys.exit(e.exit_code)
    except (FileNotFoundError, IsADirectoryError) as e:
        logger.error(f"✗ Error: {str(e)}")
        sys.exit(SchemaError.exit_code)
    except KeyboardInterrupt:
        logger.warning("\n\n⚠️  Interrupted by user")
        sys.exit(130)
    except Exception as e:
        logger.error(f"✗ Unexpected error: {str(e)}")
        if args.verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)


if __name__ == '__main__':
    sys.exit(main())
