"""
Jacobian Flow CLI
=================

Command-line entry point for pullback solves.

Commands:
1. solve - Solve (g ∘ φ)·det ∇φ = f for two densities and write the results
2. convergence - Run a gallery problem over a ladder of grid sizes

Exit codes:
- 0: every gate passed
- 1: the solve finished but a gate failed (names on stderr)
- 2: usage, input or I/O error
- 3: solver or pipeline failure (stage on stderr)

Examples:
    python cli.py solve --f gallery:twin-bumps:src --g gallery:twin-bumps:dst --grid 65 --out run1
    python cli.py solve --f f.csv --g g.csv --method direct --margin 0.3 --render
    python cli.py convergence --problem twin-bumps --sizes 33,65,129
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config import get_config
from errors import (DomainError, FieldError, FlowError, InputError, InversionError, PipelineError,
                    PreconditionError, SolverError)
from handlers.output_writer import write_outputs
from handlers.run_config import RunConfig, load_config_file, load_density, parse_density_spec
from pipeline.solve import solve_pullback, solve_with_margin
from verify.convergence import run_convergence

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GATES = 1
EXIT_USAGE = 2
EXIT_PIPELINE = 3


def _parse_sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser; every default is None so unset flags can be told apart."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', dest='config_path', default=None, help='JSON config file')
    common.add_argument('--method', choices=['composed', 'direct'], default=None)
    common.add_argument('--steps', type=int, default=None, help='RK4 steps (scaled with N in studies)')
    common.add_argument('--out', default=None, help='Output directory')
    common.add_argument('--verbose', action='store_true', default=None, help='Debug logging')

    parser = argparse.ArgumentParser(prog='jacobian-flow', description=__doc__.split('\n\n')[1])
    sub = parser.add_subparsers(dest='command', required=True)

    solve = sub.add_parser('solve', parents=[common], help='Solve one density pair')
    solve.add_argument('--f', dest='f', default=None, help='Source density spec')
    solve.add_argument('--g', dest='g', default=None, help='Target density spec')
    solve.add_argument('--grid', type=int, default=None, help='Nodes per axis for gallery densities')
    solve.add_argument('--margin', type=float, default=None,
                       help='Guaranteed distance d of supp(f - g) from the boundary')
    solve.add_argument('--collar-width', dest='collar_width', type=float, default=None)
    solve.add_argument('--render', action='store_true', default=None, help='Write PGM renders')

    study = sub.add_parser('convergence', parents=[common], help='Grid refinement study')
    study.add_argument('--problem', default=None, help='Gallery problem name')
    study.add_argument('--sizes', type=_parse_sizes, default=None, help='e.g. 33,65,129')
    return parser


def parse_args(argv: Optional[List[str]] = None) -> RunConfig:
    """
    Resolve the command line into a RunConfig (flag > config file > default).

    Raises:
        SystemExit: Unknown flags or malformed values (argparse, exit code 2)
        InputError: Settings that do not validate
    """
    namespace = build_parser().parse_args(argv)
    flags = vars(namespace)
    config_path = flags.pop('config_path', None)
    file_values = load_config_file(config_path) if config_path else {}
    return RunConfig.from_sources(flags, file_values)


def _run_solve(run: RunConfig) -> int:
    f = load_density(parse_density_spec(run.f), run.grid)
    g = load_density(parse_density_spec(run.g), run.grid)
    config = run.pipeline_config()
    if run.margin is not None:
        phi, report = solve_with_margin(f, g, run.margin, config)
    else:
        phi, report = solve_pullback(f, g, config)
    report = write_outputs(report, phi, run, f, g)

    failed = report.gates()
    print(f"residual {report.residual_max:.3e} (gate {report.method_tol:.3e}), "
          f"min det {report.min_det:.4f}, outputs in {run.out}")
    if failed:
        print(f"failed gates: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GATES
    return EXIT_OK


def _run_convergence(run: RunConfig) -> int:
    config = run.pipeline_config()
    study = run_convergence(run.problem, run.sizes, config)
    out = run.ensure_output_dir()
    (out / 'convergence.json').write_text(study.model_dump_json(by_alias=True, indent=2), encoding='utf-8')

    print(f"{study.problem} ({study.method}): sizes {study.sizes}, residuals "
          f"{', '.join(f'{r:.3e}' for r in study.residuals)}, order {study.order}")
    failed = sorted({gate for report in study.reports for gate in report.gates()})
    if failed:
        print(f"failed gates: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GATES
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    get_config()
    try:
        run = parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    if run.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    logger.debug(f"Run configuration: {run.model_dump()}")

    try:
        if run.command == 'solve':
            return _run_solve(run)
        return _run_convergence(run)
    except PipelineError as e:
        print(f"error in stage '{e.stage}': {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except (SolverError, FlowError, InversionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE
    except (InputError, FieldError, DomainError, PreconditionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: cannot write {getattr(e, 'filename', None) or Path(run.out)}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
