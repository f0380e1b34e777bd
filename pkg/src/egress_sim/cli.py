"""``egress-sim`` command line.

Exit codes: 0 success, 2 usage/validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .behavior import BehaviorParams
from .engine import SimConfig, events_to_text, run
from .experiment import MatrixSpecError, ResultsSchemaError, parse_matrix_spec, read_results, run_matrix, write_batch
from .layout import BUNDLED_MAPS, LayoutSyntaxError, LayoutValidationError, layout_stats, load_layout, parse_layout
from .report import render_csv, render_markdown, render_svg

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egress-sim", description="Active-shooter evacuation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-map", help="parse and validate a map file")
    p.add_argument("path")

    p = sub.add_parser("run", help="run one simulation")
    p.add_argument("--map", required=True, help=f"map file or bundled name ({', '.join(BUNDLED_MAPS)})")
    p.add_argument("--students", type=int, required=True)
    p.add_argument("--runtime", type=float, required=True, help="seconds")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--placement-seed", type=int, default=None, help="defaults to --seed")
    p.add_argument("--detector", type=_on_off, required=True, metavar="on|off")
    p.add_argument("--tick", type=float, default=1.0)
    p.add_argument("--officer-entry", type=float, default=300.0)
    p.add_argument("--student-speed", type=int, default=1)
    p.add_argument("--shooter-speed", type=int, default=1)
    p.add_argument("--officer-speed", type=int, default=2)
    defaults = BehaviorParams()
    for name in ("alpha", "beta", "gamma", "gamma_officer", "sigma", "epsilon"):
        p.add_argument(f"--{name.replace('_', '-')}", type=float, default=getattr(defaults, name))
    p.add_argument("--events", action="store_true", help="also print the event log")

    p = sub.add_parser("batch", help="run an experiment matrix")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="render a results file")
    p.add_argument("results")
    p.add_argument("--format", choices=("csv", "md", "svg"), required=True)
    p.add_argument("--out", default=None, help="write here instead of stdout")
    return parser


def cmd_validate_map(path: str) -> int:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        layout = parse_layout(text, name=Path(path).stem)
    except (LayoutSyntaxError, LayoutValidationError) as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    st = layout_stats(layout)
    print(f"rooms={st.room_count} exits={st.exit_count} floor_cells={st.floor_cell_count}")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        layout = load_layout(args.map)
    except OSError as exc:
        print(f"error: cannot read {args.map}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LayoutSyntaxError, LayoutValidationError) as exc:
        print(f"{args.map}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        params = BehaviorParams(
            alpha=args.alpha, beta=args.beta, gamma=args.gamma,
            gamma_officer=args.gamma_officer, sigma=args.sigma, epsilon=args.epsilon,
        )
        config = SimConfig(
            layout=layout,
            student_count=args.students,
            runtime=args.runtime,
            tick=args.tick,
            detector_enabled=args.detector,
            officer_entry=args.officer_entry,
            student_speed=args.student_speed,
            shooter_speed=args.shooter_speed,
            officer_speed=args.officer_speed,
            params=params,
            seed=args.seed,
            placement_seed=args.seed if args.placement_seed is None else args.placement_seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    outcome, events = run(config, layout)
    print(outcome.summary_line())
    if args.events:
        sys.stdout.write(events_to_text(events))
    return EXIT_OK


def cmd_batch(spec_path: str, out_dir: str) -> int:
    try:
        text = Path(spec_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {spec_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        spec = parse_matrix_spec(text)
        for name in spec.layouts:
            load_layout(name)
    except MatrixSpecError as exc:
        print(f"{spec_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LayoutSyntaxError, LayoutValidationError) as exc:
        print(f"{spec_path}: layout: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = run_matrix(spec)
    try:
        results, runs = write_batch(report, out_dir)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"cells={len(report.cells)} results={results} runs={runs} fingerprint={report.fingerprint}")
    return EXIT_OK


def cmd_report(results_path: str, fmt: str, out: str | None) -> int:
    try:
        text = Path(results_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {results_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        cells = read_results(text)
    except (ResultsSchemaError, ValueError) as exc:
        print(f"{results_path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rendered = {"csv": render_csv, "md": render_markdown, "svg": render_svg}[fmt](cells)
    if out is None:
        sys.stdout.write(rendered)
        return EXIT_OK
    try:
        Path(out).write_text(rendered, encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "validate-map":
        return cmd_validate_map(args.path)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "batch":
        return cmd_batch(args.spec, args.out)
    return cmd_report(args.results, args.format, args.out)


if __name__ == "__main__":
    sys.exit(main())
