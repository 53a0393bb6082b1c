"""``ahs control|heatmap|sweep|mtd --config FILE [--seed N] [--out PATH]``

Exit codes: 0 success, 2 bad configuration or program, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import ConfigurationError, IntegrationError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ahs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "control": "expected per-qubit counts of the control program",
        "heatmap": "relative fidelity over a grid of register placements",
        "sweep": "victim relative fidelity against attacker separation",
        "mtd": "relative fidelity without and with moving target defense",
    }
    for name in experiments.KINDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="root seed; overrides the config")
        p.add_argument("--out", type=Path, default=None, help="output path (default: config output.path or stdout)")
    return parser


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            raw = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(
                f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        cfg = experiments.load_config(raw, args.command, args.seed, args.config.parent)
        out = args.out or (Path(cfg.output["path"]) if cfg.output.get("path") else None)

        if args.command == "mtd":
            table, summary = experiments.cmd_mtd(cfg)
            if out is None:
                _write(None, summary)
            else:
                _write(out, table)
                _write(out.with_suffix(".summary.json"), summary)
        else:
            command = getattr(experiments, f"cmd_{args.command}")
            _write(out, command(cfg))
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
