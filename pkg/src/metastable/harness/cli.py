"""``metastable`` command line.

Config precedence, lowest first: built-in defaults, ``--config`` JSON file,
flags.  Exit codes: 0 all checks pass, 1 some check failed or a sigma was
aborted, 2 configuration or I/O error, 3 only INCONCLUSIVE verdicts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError
from ..metastability.audit import FAIL, INCONCLUSIVE, PASS
from .config import EXPERIMENTS, build_config, load_config
from .experiments import run_experiment
from .output import RowWriter
from .plot import KINDS, plot_file

EXIT_CODES = {PASS: 0, FAIL: 1, INCONCLUSIVE: 3}
EXIT_CONFIG = 2


def _sigmas(text: str):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad sigma list {text!r}") from err


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metastable",
                                description="Metastability experiments for Metropolis chains.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--seed", type=int)
        s.add_argument("--sigmas", type=_sigmas, help="comma-separated list, e.g. 0.4,0.3")
        s.add_argument("--replicas", type=int)
        s.add_argument("--grid-n", type=int, dest="grid_n")
        s.add_argument("--out", dest="output_dir", help="output directory")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--timings", action="store_true", default=None,
                       help="record wall_time_ms (breaks byte-identical reruns)")
    s = sub.add_parser("plot")
    s.add_argument("results", help="CSV or JSON results file")
    s.add_argument("--kind", choices=KINDS, default="sweep")
    s.add_argument("--quantity", action="append", help="plot only these quantities")
    s.add_argument("--out", help="SVG path (default: results path with .svg)")
    return p


def _summary(results, status) -> str:
    lines = []
    for res in results:
        for row in res.rows:
            if row.method in ("check", "closed-form") or row.method.startswith("aborted"):
                lines.append(f"  sigma={row.sigma} {row.quantity}={row.value} [{row.method}]")
    lines.append(f"overall: {status}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            out = args.out or str(Path(args.results).with_suffix(".svg"))
            plot_file(args.results, out, args.kind, args.quantity)
            print(out)
            return 0
        data = load_config(args.config) if args.config else {}
        sigmas = tuple(args.sigmas) if args.sigmas is not None else None
        config = build_config(args.command, data, seed=args.seed, sigmas=sigmas,
                              replicas=args.replicas, grid_n=args.grid_n,
                              output_dir=args.output_dir, format=args.format,
                              timings=args.timings)
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{config.experiment}.{config.format}"
        with RowWriter(path, config.format) as writer:
            results, status = run_experiment(config, writer.write)
        for res in results:
            for name, text in res.files.items():
                (out_dir / name).write_text(text)
    except (ConfigError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    print(_summary(results, status))
    print(path)
    return EXIT_CODES[status]


if __name__ == "__main__":
    sys.exit(main())
