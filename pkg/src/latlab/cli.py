"""Command line entry point: ``latlab <subcommand> [--config FILE] [--key value ...]``.

Exit codes: 0 success, 1 a checked criterion failed or a resource budget
ran out, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .errors import ConfigError, ResourceError
from .harness import ExperimentConfig, load_config, parse_value, run_experiment, to_json

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

_FLAGS = {
    "sample-lattices": [("--n", int), ("--N", int), ("--trials", int), ("--prime", int), ("--seed", int), ("--out", str)],
    "sphere-mc": [("--N", int), ("--n", int), ("--trials", int), ("--box-lo", float), ("--box-hi", float), ("--seed", int), ("--out", str)],
    "goodness": [("--N", int), ("--N-min", int), ("--N-max", int), ("--out", str)],
    "reference": [("--N", int), ("--K", float), ("--trials", int), ("--seed", int), ("--phi-max", float), ("--out", str)],
    "identities": [("--seed", int), ("--samples", int), ("--out", str)],
    "theorem1": [("--n", int), ("--N", int), ("--trials", int), ("--prime", int), ("--seed", int), ("--phi-max", float), ("--out", str)],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latlab", allow_abbrev=False, description="Short vectors of random lattices: experiments and checks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, flags in _FLAGS.items():
        p = sub.add_parser(name, allow_abbrev=False)
        p.add_argument("--config", help="key=value file; command-line flags override it")
        p.add_argument("--workers", type=int, help="parallel worker processes")
        for flag, typ in flags:
            p.add_argument(flag, type=typ, dest=flag[2:].replace("-", "_"))
    sub.add_parser("accept", help="run every acceptance check and report pass/fail")
    return parser


def _extra_pairs(tokens: list[str]) -> dict:
    """Turn leftover ``--key value`` tokens into config overrides."""
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"missing value for {tok}")
        out[key.replace("-", "_")] = parse_value(value)
    return out


def _run_accept() -> int:
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


def _failed(command: str, summary: dict) -> bool:
    if command == "sphere-mc":
        return not summary.get("passed", True)
    if command == "theorem1":
        return not summary.get("within_tolerance", True)
    if command == "identities":
        return not all(v for v in summary.values() if isinstance(v, bool))
    return False


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    warnings.simplefilter("always")
    warnings.showwarning = lambda message, *a, **k: print(f"latlab: warning: {message}", file=sys.stderr)
    try:
        if args.command == "accept":
            if rest:
                raise ConfigError(f"accept takes no options, got {rest}")
            return _run_accept()
        params = load_config(args.config) if args.config else {}
        params.update(_extra_pairs(rest))
        params.update({k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose") and v is not None})
        cfg = ExperimentConfig(args.command, params)
        result = run_experiment(cfg)
    except ConfigError as exc:
        print(f"latlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"latlab: {exc}; raise --node-budget or lower n", file=sys.stderr)
        return EXIT_FAIL
    if result.csv_text is not None and not cfg.out:
        sys.stdout.write(result.csv_text)
    else:
        print(to_json(result.summary))
    return EXIT_FAIL if _failed(args.command, result.summary) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
