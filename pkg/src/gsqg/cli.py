"""Command-line entry point ``gsqg``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import MODES, ConfigError, RunConfig, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4



def _error(kind: str, message: str, **extra) -> None:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        k = arg
    else:
        env = os.environ.get("GSQG_THREADS")
        if env is None or env.strip() == "":
            return 1
        try:
            k = int(env)
        except ValueError:
            raise ConfigError("GSQG_THREADS", f"expected a positive integer, got {env!r}") from None
    if k < 1:
        raise ConfigError("threads", f"thread count must be >= 1, got {k}")
    return k


def execute(config: RunConfig, out_dir=None, threads: int = 1) -> int:
    """Run one experiment and write its outputs; returns the exit status."""
    from .io import DiagnosticSeries, FLUX_HEADER, build_metadata, write_json
    from .littlewood_paley import build_partition
    from .scans import ANALYZE_COLUMNS, COMMUTATOR_COLUMNS, analyze, commutator_scan, exponent_scan
    from .solver import NumericalAbort, run
    from .spectral import Grid, fft_workers

    out = Path(out_dir or config.out or "gsqg_out")
    series_path = out / "series.csv"
    summary_path = out / "summary.json"
    try:
        with fft_workers(threads):
            if config.mode == "simulate":
                try:
                    series = run(config, out)
                except NumericalAbort as e:
                    if e.series is not None:
                        out.mkdir(parents=True, exist_ok=True)
                        e.series.metadata["abort"] = {"message": str(e), "last_checkpoint":
                                                      None if e.last_checkpoint is None else str(e.last_checkpoint)}
                        e.series.write(series_path)
                    _error("numerical", str(e),
                           last_checkpoint=None if e.last_checkpoint is None else str(e.last_checkpoint))
                    return EXIT_NUMERICAL
                out.mkdir(parents=True, exist_ok=True)
                series.write(series_path)
                write_json(summary_path, _simulate_summary(config, series))
                return EXIT_OK
            partition_hash = build_partition(Grid(config.n)).profile_hash()
            meta = build_metadata(config, partition_hash)
            if config.mode == "flux-scan":
                records, summary = exponent_scan(config, threads)
                series = DiagnosticSeries(meta, list(FLUX_HEADER), [r.row() for r in records])
            elif config.mode == "commutator-scan":
                rows, summary = commutator_scan(config, threads)
                series = DiagnosticSeries(meta, list(COMMUTATOR_COLUMNS), rows)
            else:
                rows, summary = analyze(config)
                series = DiagnosticSeries(meta, list(ANALYZE_COLUMNS), rows)
            out.mkdir(parents=True, exist_ok=True)
            series.write(series_path)
            write_json(summary_path, {"mode": config.mode, **summary})
            return EXIT_OK
    except ConfigError as e:
        _error("config", str(e), key=e.path)
        return EXIT_CONFIG
    except OSError as e:
        _error("io", str(e))
        return EXIT_IO
    except ValueError as e:
        # a precondition of an inner operation rejected the configured values
        _error("config", str(e))
        return EXIT_CONFIG
    except FloatingPointError as e:
        _error("numerical", str(e))
        return EXIT_NUMERICAL


def _simulate_summary(config: RunConfig, series) -> dict:
    out = {"mode": "simulate", "records": len(series.rows)}
    for col in series.columns:
        if col.startswith("norm_L"):
            v = series.column(col)
            out[f"{col}_relative_drift"] = abs(v[-1] - v[0]) / v[0] if v[0] else 0.0
    out["final_time"] = series.column("time")[-1]
    out["steps"] = series.column("step")[-1]
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsqg", description="gSQG pseudospectral testbed")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="JSON config (or a series CSV to rerun)")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: $GSQG_THREADS or 1)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        cfg = parse_config(args.config)
        if cfg.mode != args.mode:
            raise ConfigError("mode", f"config mode {cfg.mode!r} does not match command {args.mode!r}")
        threads = resolve_threads(args.threads)
    except ConfigError as e:
        _error("config", str(e), key=e.path)
        return EXIT_CONFIG
    return execute(cfg, args.out, threads)


if __name__ == "__main__":
    sys.exit(main())
