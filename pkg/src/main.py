"""CLI entry point for the SM-MC simulator."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from src.engine import SerCurve, analytic_sweep, run_sweep
from src.errors import ConfigurationError, SimulationError
from src.figures import expand_preset, preset_names
from src.results import curve_filename, write_curve_csv, write_gnuplot, write_long_csv
from src.settings import describe, get_settings, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3e}"


def format_output(curves: Sequence[SerCurve], title: str = "SER results") -> str:
    """Format curves for display."""
    lines = ["=" * 60, f"SM-MC Simulator - {title}", "=" * 60]
    for curve in curves:
        info = describe(curve.config)
        lines.append(f"{curve.label}  (T_s={info['symbol_duration']}, r={info['separation']})")
        lines.append("-" * 60)
        lines.append(f"{'SNR[dB]':>8}  {'SER sim':>10}  {'ci95':>10}  {'SER analytic':>12}  kind")
        for p in curve.points:
            kind = p.analytic_kind.value if p.analytic_kind else ""
            lines.append(f"{p.snr_db:>8g}  {_fmt(p.ser_sim):>10}  {_fmt(p.ci95):>10}  {_fmt(p.ser_analytic):>12}  {kind}")
        lines.append("")
    lines.append("=" * 60)
    return "\n".join(lines)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "symbols": args.symbols,
        "replications": args.reps,
        "workers": args.workers,
    }


def _show_progress(args: argparse.Namespace) -> bool:
    return not args.quiet and sys.stderr.isatty()


def run_simulate(args: argparse.Namespace) -> List[SerCurve]:
    config = parse_config(args.config, _overrides(args))
    curve = run_sweep(config, progress=_show_progress(args))
    out_dir = Path(args.out)
    write_curve_csv(curve, out_dir / curve_filename(curve, 0))
    if args.dat:
        write_gnuplot([curve], out_dir / "curves.dat")
    return [curve]


def run_figure(
    name: str,
    overrides: Optional[Dict[str, Any]],
    out_dir: Path,
    full_scale: bool = False,
    dat: bool = False,
    progress: bool = False,
) -> List[SerCurve]:
    """Simulate every curve of a figure preset and write its CSV files."""
    preset = expand_preset(name, overrides, full_scale=full_scale)
    logger.info(f"{name}: {preset.description}")
    curves = [run_sweep(config, progress=progress) for config in preset.configs]
    for i, curve in enumerate(curves):
        write_curve_csv(curve, out_dir / curve_filename(curve, i))
    write_long_csv(curves, out_dir / f"{name}_all.csv")
    if dat:
        write_gnuplot(curves, out_dir / f"{name}.dat")
    return curves


def run_analytic(args: argparse.Namespace) -> List[SerCurve]:
    config = parse_config(args.config)
    curve = analytic_sweep(config)
    write_curve_csv(curve, args.out)
    return [curve]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.main",
        description="SM-MC simulator - SER of spatial-modulation molecular links",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="Enable debug logging")
    common.add_argument("--quiet", action="store_true", help="Only log warnings and errors")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--seed", type=int, help="Master seed")
    sim.add_argument("--symbols", type=int, help="Symbols per replication")
    sim.add_argument("--reps", type=int, help="Replications per SNR point")
    sim.add_argument("--workers", type=int, help="Worker processes")
    sim.add_argument("--out", type=Path, default=None, help="Output directory (default: SMMC_OUTPUT_DIR)")
    sim.add_argument("--dat", action="store_true", help="Also write gnuplot .dat data")

    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common, sim], help="Simulate one configured curve")
    simulate.add_argument("--config", type=Path, required=True, help="KEY=VALUE run configuration")

    figure = commands.add_parser("figure", parents=[common, sim], help="Reproduce a figure preset")
    figure.add_argument("name", choices=preset_names())
    figure.add_argument("--full-scale", action="store_true", help="1e6 symbols x 20 replications")

    analytic = commands.add_parser("analytic", parents=[common], help="Closed-form SER only")
    analytic.add_argument("--config", type=Path, required=True, help="KEY=VALUE run configuration")
    analytic.add_argument("--out", type=Path, required=True, help="Output CSV file")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and return the exit code."""
    args = build_parser().parse_args(argv)
    settings = get_settings()

    # Setup logging
    if args.verbose:
        level: Any = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = settings.log_level.upper()
    logging.basicConfig(level=level, format="%(levelname)s - %(name)s - %(message)s", stream=sys.stdout)

    if getattr(args, "out", None) is None:
        args.out = settings.output_dir

    try:
        if args.command == "simulate":
            curves = run_simulate(args)
        elif args.command == "figure":
            curves = run_figure(
                args.name,
                _overrides(args),
                Path(args.out),
                full_scale=args.full_scale,
                dat=args.dat,
                progress=_show_progress(args),
            )
        else:
            curves = run_analytic(args)
    except (ConfigurationError, ValidationError) as exc:
        logger.error(f"Configuration error: {exc}", exc_info=args.verbose)
        return EXIT_CONFIG
    except (SimulationError, ValueError, RuntimeError, OSError) as exc:
        logger.error(f"Run failed: {exc}", exc_info=args.verbose)
        return EXIT_RUNTIME

    if not args.quiet:
        print(format_output(curves, title=args.command))
    return EXIT_OK


def main() -> None:
    """CLI entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
