"""Command line entry point: ``ergolab run`` and ``ergolab list``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from importlib import metadata
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ErgolabError
from .experiments import CATALOG, RUNNERS, Result, catalog_json, validate

CSV_SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def versions() -> dict:
    out = {"ergolab": __version__, "python": platform.python_version()}
    for dist in ("numpy", "sympy", "mpmath", "jsonschema"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    out["csv_schema"] = CSV_SCHEMA_VERSION
    return out


def resolve_threads(flag: int | None) -> int:
    """``--threads`` wins, then ``ERGOLAB_THREADS``, then the core count."""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("ERGOLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"ERGOLAB_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None
    return validate(config)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_body(result: Result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_experiment(config: dict, seed: int | None = None, threads: int = 1,
                   out_dir: str | Path | None = None) -> tuple[int, dict, Path, Path]:
    """Run a validated config, write ``<kind>.csv`` and ``<kind>_report.json``.

    Returns ``(exit code, report, csv path, report path)``.
    """
    kind = config["experiment"]
    seed = config.get("seed", 0) if seed is None else seed
    t0 = time.perf_counter()
    result = RUNNERS[kind](config, seed, threads)
    wall = time.perf_counter() - t0

    out = Path(out_dir if out_dir is not None else config.get("output", "ergolab_out"))
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    csv_path = out / f"{kind}.csv"
    csv_path.write_text(f"# ergolab {__version__} {kind} csv_schema={CSV_SCHEMA_VERSION} generated {stamp}\n"
                        + csv_body(result))
    report = {
        "experiment": kind,
        "config": config,
        "seed": seed,
        "threads": threads,
        "versions": versions(),
        "columns": list(result.columns),
        "rows": [list(r) for r in result.rows],
        "summary": result.summary,
        "passed": result.passed,
        "wall_clock_s": wall,
        "generated": stamp,
    }
    report = _jsonable(report)
    report_path = out / f"{kind}_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    code = EXIT_FAILED if result.passed is False else EXIT_OK
    return code, report, csv_path, report_path


def _cmd_run(args) -> int:
    config = load_config(args.config)
    threads = resolve_threads(args.threads)
    code, report, csv_path, report_path = run_experiment(config, args.seed, threads, args.out)
    status = {None: "done", True: "passed", False: "FAILED"}[report["passed"]]
    print(f"{report['experiment']}: {status} ({len(report['rows'])} rows, {report['wall_clock_s']:.2f} s)")
    print(f"  {csv_path}\n  {report_path}")
    return code


def _cmd_list(args) -> int:
    if args.json:
        print(json.dumps(catalog_json(), indent=2, sort_keys=True))
        return EXIT_OK
    for kind, entry in CATALOG.items():
        params = sorted(entry["properties"].get("params", {}).get("properties", {}))
        required = ", ".join(entry["required"]) or "-"
        print(f"{kind:15s} {entry['description']}")
        print(f"{'':15s}   required: {required}; params: {', '.join(params)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergolab", description="Rotation averages on compact Abelian groups.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment from a JSON config")
    run.add_argument("config")
    run.add_argument("--threads", type=int, default=None, help="worker threads (default: ERGOLAB_THREADS or cores)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="output directory (default: config 'output' or ./ergolab_out)")
    run.set_defaults(func=_cmd_run)
    ls = sub.add_parser("list", help="list experiment kinds and parameter schemas")
    ls.add_argument("--json", action="store_true", help="print the JSON schema catalog")
    ls.set_defaults(func=_cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ergolab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ErgolabError, ValueError) as exc:
        print(f"ergolab: invalid experiment: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
