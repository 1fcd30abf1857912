#!/usr/bin/env python3
"""
Log-Convolution Laboratory - Normalized Solutions on Large Planar Domains

Computes the thresholds, fibration maps, energy landscapes, local minimizers,
mountain-pass solutions and whole-plane limits of the planar Schrödinger-Poisson
energy with a logarithmic convolution term, and writes JSON/CSV artifacts.

See README.md for full documentation.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

if sys.platform == "win32":
    os.system("")
    os.environ["PYTHONIOENCODING"] = "utf-8"
    if hasattr(sys.stdout, 'reconfigure'):
        sys.stdout.reconfigure(encoding='utf-8', errors='replace')
    if hasattr(sys.stderr, 'reconfigure'):
        sys.stderr.reconfigure(encoding='utf-8', errors='replace')

sys.path.insert(0, str(Path(__file__).parent))

from rich.console import Console
from rich.logging import RichHandler
from rich.progress import Progress, SpinnerColumn, TextColumn

console = Console(force_terminal=True)

from config import RunConfig
from core.errors import LabError
from output.artifacts import ArtifactWriter
from output.markdown import MarkdownReport
from pipeline import (
    run_asymptotics,
    run_constants,
    run_fibration,
    run_landscape,
    run_limit,
    run_probe,
    run_solve,
)

COMMANDS = ["constants", "fibration", "landscape", "solve", "limit", "asymptotics", "probe"]


def setup_logging(verbose: bool, quiet: bool):
    """Route library logging through rich."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def build_config(args) -> RunConfig:
    """Defaults, then preset, then config file, then explicit flags."""
    cfg = RunConfig.preset(args.preset) if args.preset else RunConfig()
    if args.config:
        data = RunConfig.load(Path(args.config)).to_dict()
        cfg = cfg.merged(data)

    overrides = {
        "shape": args.shape,
        "R": args.R,
        "n": args.n,
        "p": args.p,
        "alpha": args.alpha,
        "rho": args.rho,
        "mode": args.mode,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "workers": args.workers,
        "spacing": args.spacing,
    }
    if args.s_homotopy:
        overrides["s_homotopy"] = True
    return cfg.merged(overrides)


def _write_constants(writer: ArtifactWriter, thr):
    writer.write_json("thresholds.json", thr.to_dict())
    row = thr.to_dict()
    writer.write_csv("thresholds.csv", list(row.keys()), [list(row.values())])


def run_command(args):
    """Run one subcommand and emit its artifacts and report."""
    cfg = build_config(args)
    cfg.validate(args.command)
    writer = ArtifactWriter(cfg)
    results = {}

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    ) as progress:
        task = progress.add_task(f"Running {args.command}...", total=None)

        if args.command == "constants":
            progress.update(task, description="Computing constants and thresholds...")
            thr = run_constants(cfg)
            _write_constants(writer, thr)
            results["thresholds"] = thr

        elif args.command == "fibration":
            progress.update(task, description="Scanning the fiber map...")
            u, scan = run_fibration(cfg)
            writer.write_csv("fiber.csv", ["t", "h", "dh"], zip(scan.t, scan.h, scan.dh))
            writer.write_json("fiber.json", {
                "t_u": scan.t_u,
                "h_at_tu": scan.h_at_tu,
                "sign_changes": scan.sign_changes,
                "unique": scan.unique,
                "strict_max": scan.strict_max,
            })
            writer.write_field("fiber_field.json", u)
            results["scan"] = scan

        elif args.command == "landscape":
            progress.update(task, description="Placing bump families on the Pohozaev manifold...")
            tables = run_landscape(cfg)
            for kind, table in tables.items():
                writer.write_csv(
                    f"landscape_{kind}.csv",
                    ["n", "t", "energy", "kinetic", "chi0", "pohozaev_residual"],
                    ([r.n, r.t, r.energy, r.kinetic, r.chi0, r.pohozaev_residual] for r in table.rows),
                )
            writer.write_json("landscape.json", {
                kind: {"abscissa": t.abscissa, "slope": t.slope, "rows": [r.to_dict() for r in t.rows]}
                for kind, t in tables.items()
            })
            results["landscape"] = tables

        elif args.command == "solve":
            progress.update(task, description="Minimizing in the gradient ball...")
            outcome = run_solve(cfg)
            reports = [outcome.local_min]
            if outcome.mountain_pass is not None:
                reports.append(outcome.mountain_pass)
            for report in reports:
                writer.write_json(f"solve_{report.mode}.json", report.to_dict())
                writer.write_field(f"field_{report.mode}.json", report.solution)
                writer.write_csv(
                    f"convergence_{report.mode}.csv",
                    ["iteration", "energy", "residual", "step"],
                    ([e.iteration, e.energy, e.residual, e.step] for e in report.trace),
                )
            results["thresholds"] = outcome.thresholds
            results["reports"] = reports
            results["ground_state"] = outcome.ground_state

        elif args.command == "limit":
            progress.update(task, description="Shooting the radial ground state...")
            sol, cert = run_limit(cfg)
            r, values = sol.radial_samples()
            writer.write_csv("limit_profile.csv", ["r", "u"], zip(r, values))
            writer.write_json("limit.json", {"solution": sol.to_dict(), "decay": vars(cert)})
            results["limit"] = sol
            results["decay"] = cert

        elif args.command == "asymptotics":
            def on_row(row):
                progress.update(task, description=f"R={row.R:g}: {row.status}")

            progress.update(task, description=f"Sweeping R over {cfg.R_values}...")
            table = run_asymptotics(cfg, on_row=on_row)
            header = list(table.rows[0].to_dict().keys()) if table.rows else ["R"]
            writer.write_csv("asymptotics.csv", header, (list(r.to_dict().values()) for r in table.rows))
            writer.write_json("asymptotics.json", {
                "lambda_bar": table.lambda_bar,
                "lambda_reference": table.lambda_reference,
                "spacing": table.spacing,
                "m_rho": table.m_rho,
                "decreasing": table.decreasing,
                "failed": table.failed,
                "rows": [r.to_dict() for r in table.rows],
            })
            results["asymptotics"] = table

        elif args.command == "probe":
            progress.update(task, description=f"Probing masses {cfg.rho_values}...")
            probe = run_probe(cfg)
            writer.write_csv(
                "probe.csv",
                ["rho", "alpha", "ok", "energy", "gradient_norm", "reason"],
                ([r.rho, r.alpha, r.ok, r.energy, r.gradient_norm, r.reason] for r in probe.rows),
            )
            writer.write_json("probe.json", {
                "rho_critical": probe.rho_critical,
                "rows": [vars(r) for r in probe.rows],
            })
            results["probe"] = probe

        progress.update(task, description="Generating report...")

    report = MarkdownReport()
    markdown = report.generate(cfg, args.command, **results)

    for path in writer.written:
        console.print(f"[dim]{path}[/dim]")

    if args.report:
        output_path = Path(args.report)
        output_path.write_text(markdown)
        console.print(f"[green]Report saved to {output_path}[/green]")
    else:
        console.print()
        console.print(markdown)


def main():
    parser = argparse.ArgumentParser(
        description="Numerical laboratory for normalized solutions with a logarithmic convolution term",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python laboratory.py constants --rho 8 --R 16        # Thresholds
  python laboratory.py solve --preset local_min         # Local minimizer
  python laboratory.py solve --preset mountain_pass     # Both solutions
  python laboratory.py landscape --report landscape.md  # Bump families
  python laboratory.py asymptotics --preset asymptotics # Large-R sweep
        """,
    )

    parser.add_argument(
        "command",
        choices=COMMANDS,
        help="Experiment to run",
    )

    parser.add_argument("--preset", help="Named preset from presets/")
    parser.add_argument("--config", help="JSON config file (overrides the preset)")
    parser.add_argument("--shape", help="Domain shape (disk, square)")
    parser.add_argument("--R", type=float, help="Domain scale")
    parser.add_argument("--n", type=int, help="Grid nodes per axis")
    parser.add_argument("--p", type=float, help="Power of the local nonlinearity")
    parser.add_argument("--alpha", type=float, help="Coupling (default: -alpha_cap * alpha*)")
    parser.add_argument("--rho", type=float, help="Mass")
    parser.add_argument("--mode", choices=["min", "mp"], help="solve: local minimum or mountain pass")
    parser.add_argument("--s-homotopy", action="store_true", help="Continue the mountain pass in s from 1/2")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--workers", type=int, help="Worker cap of the asymptotics sweep")
    parser.add_argument("--spacing", type=float, help="Fixed grid spacing of the asymptotics sweep (n follows R)")
    parser.add_argument("-o", "--output-dir", help="Artifact directory (default: results)")
    parser.add_argument("--report", help="Write the markdown report to this file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings only")

    args = parser.parse_args()
    setup_logging(args.verbose, args.quiet)

    try:
        run_command(args)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted[/yellow]")
        sys.exit(1)
    except LabError as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(e.exit_code)
    except Exception as e:
        console.print(f"[red]Error: {e}[/red]")
        sys.exit(1)


if __name__ == "__main__":
    main()
