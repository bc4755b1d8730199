"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 runtime numeric error.
"""

from __future__ import annotations

import argparse
import sys

from .config import SimConfig, load_config_file, presets
from .exceptions import ConfigError, NumericError
from .report import complexity_report, emit_results, write_complexity_csv
from .sweep import run_sweep, theoretical_overlay


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimosim",
        description="Link-level MIMO-OFDM BER sweeps with LS/MMSE/PCA channel estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte-Carlo BER sweep and emit CSVs")
    sweep.add_argument("--preset", help="named base configuration (see `mimosim presets`)")
    sweep.add_argument("--config", help="TOML file overriding the preset / defaults")
    sweep.add_argument("--seed", type=int, help="override master seed (u64)")
    sweep.add_argument("--out", default="results", help="output directory (default: results)")
    sweep.add_argument("--workers", type=int, help="parallel worker processes")

    comp = sub.add_parser("complexity", help="print the modeled operation-count table")
    comp.add_argument(
        "--antennas", default="2,4,8,16,32,64", help="comma-separated antenna counts"
    )
    comp.add_argument("--out", help="also write complexity.csv into this directory")

    sub.add_parser("presets", help="list named preset configurations")
    return parser


def _load_sweep_config(args) -> SimConfig:
    base = None
    if args.preset:
        table = presets()
        if args.preset not in table:
            raise ConfigError(f"unknown preset {args.preset!r}; available: {sorted(table)}")
        base = table[args.preset]
    if args.config:
        cfg = load_config_file(args.config, base=base)
    elif base is not None:
        cfg = base
    else:
        raise ConfigError("sweep needs --preset and/or --config")
    if args.seed is not None:
        cfg.master_seed = args.seed
    cfg.validate()
    return cfg


def _cmd_sweep(args) -> int:
    cfg = _load_sweep_config(args)
    records = run_sweep(cfg, workers=args.workers)
    theory = theoretical_overlay(cfg)
    paths = emit_results(records, args.out, theory=theory)
    print(f"{'estimator':>10} {'fd_hz':>7} {'ebn0':>6} {'bits':>12} {'errs':>8} "
          f"{'ber':>12} {'capped':>6}")
    for r in records:
        print(f"{r.estimator:>10} {r.doppler_hz:>7g} {r.ebn0_db:>6g} {r.bits_sent:>12} "
              f"{r.bit_errors:>8} {r.ber:>12.4e} {str(r.capped):>6}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_complexity(args) -> int:
    try:
        antennas = [int(tok) for tok in args.antennas.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --antennas list: {exc}") from exc
    if not antennas or min(antennas) < 1:
        raise ConfigError("--antennas needs positive integers")
    rows = complexity_report(antennas)
    print(f"{'N':>4} {'N^3':>10} {'N^2':>8} {'mmse_mults':>12} {'mmse_adds':>12} "
          f"{'lspca_mults':>12} {'lspca_adds':>12}")
    for r in rows:
        print(f"{r.n_antennas:>4} {r.mmse_cubic:>10} {r.lspca_quadratic:>8} "
              f"{r.mmse_mults:>12} {r.mmse_adds:>12} {r.lspca_mults:>12} {r.lspca_adds:>12}")
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        path = write_complexity_csv(rows, os.path.join(args.out, "complexity.csv"))
        print(f"wrote {path}")
    return 0


def _cmd_presets() -> int:
    for name, cfg in presets().items():
        print(f"{name}: code={cfg.code} m_r={cfg.m_r} K={cfg.k_subcarriers} "
              f"profile={cfg.profile} doppler={cfg.doppler_hz} estimators={cfg.estimators}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "complexity":
            return _cmd_complexity(args)
        return _cmd_presets()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
