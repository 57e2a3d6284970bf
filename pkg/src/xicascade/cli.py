"""Command-line entry point: ``xicascade simulate|figure|verify|sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config, parse_number, with_param
from .model import ModelParams
from .numeric import DEFAULT_DT, PROBE_HORIZON, cross_validate
from .pipeline import ENGINES, ObservableSeries, simulate, write_csv
from .presets import load_preset

log = logging.getLogger("xicascade")

VERIFY_TOL = 1e-6


def run_simulation(config: RunConfig, output_path=None) -> ObservableSeries:
    """Run one configuration and write its CSV.

    Raises on any failed sanity gate; in that case no output file is left.
    """
    path = output_path or config.output_path
    start = time.perf_counter()
    p = config.params
    log.info(
        "simulate engine=%s nmax=(%d,%d) tau_max=%g step=%g workers=%d",
        config.engine, p.nmax1, p.nmax2, p.tau_max, p.tau_step, config.workers,
    )
    series, report = simulate(p, config.engine, dt=config.dt, workers=config.workers)
    log.info("active blocks: %d, numeric fallbacks: %d", report.active_blocks, len(report.fallback_blocks))
    log.info("max closed-form B_j deviation: %.3e", report.max_closed_form_deviation)
    if report.convergence_delta is not None:
        log.info("RK4 step-halving delta on probe block: %.3e", report.convergence_delta)
    if report.oracle_deviation is not None:
        log.info("verify: max |G_analytic - G_numeric| = %.3e", report.oracle_deviation)
    if path is not None:
        write_csv(series, path)
        log.info("wrote %d rows to %s", len(series), path)
    log.info("done in %.2f s", time.perf_counter() - start)
    return series


def _sweep_path(base: Path, key: str, value: float) -> Path:
    return base.with_name(f"{base.stem}_{key}-{value:g}{base.suffix or '.csv'}")


def run_sweep(config: RunConfig, output_path=None) -> list[Path]:
    base = Path(output_path or config.output_path or "sweep.csv")
    written = []
    for value in config.sweep_values:
        params = with_param(config.params, config.sweep_key, value)
        target = _sweep_path(base, config.sweep_key, value)
        log.info("sweep %s = %g -> %s", config.sweep_key, value, target)
        run_simulation(replace(config, params=params, mode="simulate"), target)
        written.append(target)
    return written


def run_verify(params: ModelParams, dt: float = DEFAULT_DT) -> float:
    """Cross-check closed form against RK4 on sampled blocks; return the worst deviation."""
    horizon = min(params.tau_max, PROBE_HORIZON)
    tau = replace(params, tau_max=horizon).tau_grid()
    report = cross_validate(params, tau=tau, dt=dt)
    worst = 0.0
    for (n1, n2), (method, dev) in report.items():
        log.info("block (%d, %d): %s max |dG| = %.3e", n1, n2, method, dev)
        worst = max(worst, dev)
    log.info("verify: max |G_analytic - G_numeric| = %.3e over tau in [0, %g]", worst, horizon)
    return worst


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xicascade", description=__doc__)
    ap.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configuration file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--engine", choices=ENGINES)
    s.add_argument("--workers", type=int)

    f = sub.add_parser("figure", help="run a figure panel preset")
    f.add_argument("id", help="panel id, one of 2a..7f")
    f.add_argument("--out")
    f.add_argument("--engine", choices=ENGINES, default="analytic")
    f.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="compare closed form and RK4 on sampled blocks")
    v.add_argument("--preset", default="2a")
    v.add_argument("--dt", type=float, default=DEFAULT_DT)

    w = sub.add_parser("sweep", help="run a configuration for several values of one parameter")
    w.add_argument("--config", required=True)
    w.add_argument("--key", required=True)
    w.add_argument("--values", required=True, help="comma separated, e.g. 0,0.0005")
    w.add_argument("--out")
    w.add_argument("--workers", type=int)
    return ap


def _overrides(config: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "engine", None):
        changes["engine"] = args.engine
    if getattr(args, "workers", None):
        changes["workers"] = args.workers
    return replace(config, **changes) if changes else config


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "simulate":
            config = _overrides(load_config(args.config), args)
            out = args.out or config.output_path
            if out is None:
                out = str(Path(args.config).with_suffix(".csv"))
            if config.mode == "sweep":
                run_sweep(config, out)
            elif config.mode == "verify":
                return _verify_exit(run_verify(config.params, config.dt))
            else:
                run_simulation(config, out)
        elif args.command == "figure":
            params = load_preset(args.id)
            config = RunConfig(params=params, engine=args.engine, workers=args.workers)
            run_simulation(config, args.out or f"figure_{args.id}.csv")
        elif args.command == "verify":
            return _verify_exit(run_verify(load_preset(args.preset), args.dt))
        elif args.command == "sweep":
            config = load_config(args.config)
            values = [parse_number(v) for v in args.values.split(",") if v.strip()]
            config = _overrides(
                replace(config, mode="sweep", sweep_key=args.key, sweep_values=values), args
            )
            run_sweep(config, args.out)
    except (ConfigError, KeyError, OSError) as exc:
        log.error("%s", exc.args[0] if isinstance(exc, KeyError) else exc)
        return 2
    except Exception as exc:
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        return 1
    return 0


def _verify_exit(worst: float) -> int:
    if worst >= VERIFY_TOL:
        log.error("verify failed: deviation %.3e exceeds %g", worst, VERIFY_TOL)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
