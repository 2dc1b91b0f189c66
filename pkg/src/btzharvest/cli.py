"""Command-line interface.

Commands: ``correlators``, ``negativity``, ``pitangle`` (single-point runs),
``sweep`` (one-parameter grids), ``figure`` (published-panel presets),
``oracle`` (double-integral calibration) and ``selftest`` (fast structural
checks).  Exit codes: 0 success, 2 configuration error, 3 numerical
convergence failure, 4 self-test failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from ._version import __version__
from .cache import CorrelatorCache, default_cache_dir
from .config import ConfigError, RunConfig, parse_config, parse_vary
from .presets import PRESETS, preset_description, preset_points
from .quadrature import ConvergenceError
from .runner import render_csv, run_point, run_sweep, write_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_SELFTEST = 4

logger = logging.getLogger("btzharvest")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="btzharvest",
        description="Entanglement harvested by static detectors outside a BTZ black hole",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="INI run configuration file")
        p.add_argument("--out", default="", help="output path (default: stdout)")
        p.add_argument("--no-cache", action="store_true",
                       help="bypass the on-disk correlator cache")
        p.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes for sweeps")

    common(sub.add_parser("correlators", help="matrix elements at one point"))
    common(sub.add_parser("negativity", help="negativities at one point"))
    common(sub.add_parser("pitangle", help="full entanglement report at one point"))

    p_sweep = sub.add_parser("sweep", help="evaluate along a one-parameter grid")
    common(p_sweep)
    p_sweep.add_argument("--vary", required=True,
                         help="sweep spec name:min:max:steps[:log]")

    p_fig = sub.add_parser("figure", help="regenerate a published panel's data")
    common(p_fig, config_required=False)
    p_fig.add_argument("--preset", required=True, choices=sorted(PRESETS),
                       help="panel to regenerate")
    p_fig.add_argument("--resolution", default="coarse", choices=("coarse", "full"))

    p_oracle = sub.add_parser(
        "oracle", help="double-integral oracle calibration at the configured point"
    )
    common(p_oracle)

    sub.add_parser("selftest", help="fast structural checks of the entanglement layer")
    return parser


def _make_cache(args) -> CorrelatorCache:
    if getattr(args, "no_cache", False):
        return CorrelatorCache(None)
    return CorrelatorCache(default_cache_dir())


def _emit(records, out: str):
    if out:
        write_csv(records, out)
    else:
        sys.stdout.write(render_csv(records))


def _cmd_point(args, stage: str) -> int:
    rc = parse_config(args.config)
    result = run_point(rc, _make_cache(args), stage=stage)
    _emit([result.record], args.out or rc.out_path)
    if not result.ok:
        logger.error("point failed: status %s", result.record["status"])
        return EXIT_CONVERGENCE
    return EXIT_OK


def _cmd_sweep(args) -> int:
    rc = parse_config(args.config)
    sweep = parse_vary(args.vary)
    records, all_ok = run_sweep(rc, sweep, workers=args.workers,
                                cache=_make_cache(args))
    _emit(records, args.out or rc.out_path)
    return EXIT_OK if all_ok else EXIT_CONVERGENCE


def _cmd_figure(args) -> int:
    points = preset_points(args.preset, args.resolution)
    logger.info("preset %s (%s): %d points -- %s",
                args.preset, args.resolution, len(points), preset_description(args.preset))
    cache = _make_cache(args)
    records = []
    all_ok = True
    if args.workers > 1:
        from .runner import _sweep_worker
        from concurrent.futures import ProcessPoolExecutor

        cache_dir = str(cache.directory) if cache.enabled else ""
        jobs = [(p, cache_dir, "pitangle") for p in points]
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            for i, rec in enumerate(pool.map(_sweep_worker, jobs)):
                logger.info("point %d/%d: %s", i + 1, len(jobs), rec["status"])
                records.append(rec)
                all_ok = all_ok and rec["status"] == "ok"
    else:
        for i, point in enumerate(points):
            result = run_point(point, cache)
            logger.info("point %d/%d: %s", i + 1, len(points), result.record["status"])
            records.append(result.record)
            all_ok = all_ok and result.ok
    out = args.out or f"{args.preset}-{args.resolution}.csv"
    _emit(records, out)
    return EXIT_OK if all_ok else EXIT_CONVERGENCE


def _cmd_oracle(args) -> int:
    from .config import build_configuration
    from .correlators import calibrate_branch_sign, oracle_elements

    rc = parse_config(args.config)
    cfg = build_configuration(rc)
    controls = rc.numerics.oracle_controls()
    calibration = calibrate_branch_sign(cfg, ("A", "B"), controls,
                                        rc.numerics.quad, rc.numerics.images)
    reports = {}
    for label in ("A", "B"):
        reports.update(oracle_elements(cfg, label, controls, rc.numerics.images))

    lines = [
        "# Oracle calibration",
        "",
        "Double-integral oracle versus the single-integral fast path.",
        "",
        f"- package version: {__version__}",
        f"- background: ell={rc.ell}, mass={rc.mass}, zeta={rc.zeta}",
        f"- geometry: {rc.geometry}, omega={rc.omega}",
        f"- regulators: {controls.epsilons}, grid {controls.panels} panels x order {controls.order}",
        "",
        "## Branch sign",
        "",
        f"- matched continuation sign: {calibration.matched_sign:+.0f}",
        f"- oracle C_AB = {calibration.oracle_c}",
        f"- oracle X_AB = {calibration.oracle_x}",
    ]
    for sign in (+1.0, -1.0):
        lines.append(
            f"- sign {sign:+.0f}: fast C = {calibration.fast_c[sign]:.10g}, "
            f"fast X = {calibration.fast_x[sign]:.10g}, "
            f"worst relative mismatch = {calibration.mismatch[sign]:.3e}"
        )
    lines += ["", "## Detector responses", ""]
    for name, report in sorted(reports.items()):
        lines.append(
            f"- {name}: extrapolated {report.value.real:.10g} "
            f"(regulator ladder {[f'{v.real:.8g}' for v in report.raw]}, "
            f"extrapolation error {report.error_estimate:.2e}, "
            f"grid check {report.grid_check:.2e}, "
            f"monotone {'yes' if report.monotone else 'NO'})"
        )
        if not report.monotone:
            logger.warning("%s: regulator sequence is not monotone; grid too coarse?", name)
    text = "\n".join(lines) + "\n"

    out = Path(args.out) if args.out else Path("docs") / "calibration.md"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_selftest(args) -> int:
    import numpy as np

    from .correlators import CorrelatorSet
    from .entanglement import (
        DensityMatrix,
        assemble_rho3,
        equilateral_pi,
        negativity,
        partial_transpose,
        pi_tangle,
        reduce_rho,
    )

    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    bell = np.zeros((4, 4), dtype=complex)
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    n_bell = negativity(DensityMatrix(bell, ("A", "B")), "A")
    check("Bell-state negativity 1/2", abs(n_bell - 0.5) < 1e-12)

    ghz = np.zeros((8, 8), dtype=complex)
    ghz[0, 0] = ghz[0, 7] = ghz[7, 0] = ghz[7, 7] = 0.5
    dm = DensityMatrix(ghz, ("A", "B", "C"))
    n_ghz = negativity(dm, "A")
    check("GHZ one-vs-rest negativity 1/2", abs(n_ghz - 0.5) < 1e-12)
    pi_ghz = sum(
        negativity(dm, j) ** 2 - sum(
            negativity(reduce_rho(dm, drop), j) ** 2
            for drop in "ABC" if drop != j
        )
        for j in "ABC"
    ) / 3.0
    check("GHZ pi-tangle 1/4", abs(pi_ghz - 0.25) < 1e-12)

    rng = np.random.default_rng(7)
    m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    rho = m @ m.conj().T
    rho /= rho.trace()
    dm = DensityMatrix(rho, ("A", "B", "C"))
    double = partial_transpose(partial_transpose(dm, "B"), "B")
    check("partial transpose is an involution",
          np.abs(double.entries - dm.entries).max() < 1e-14)
    check("partial transpose preserves trace",
          abs(partial_transpose(dm, "C").entries.trace() - 1.0) < 1e-12)

    cs = CorrelatorSet(
        labels=("A", "B", "C"),
        P={l: 0.05 for l in "ABC"},
        C={k: 0.03 for k in ((("A", "B")), ("A", "C"), ("B", "C"))},
        X={k: 0.06 + 0.02j for k in ((("A", "B")), ("A", "C"), ("B", "C"))},
    )
    rho3 = assemble_rho3(cs, 1e-2)
    check("assembled state is Hermitian with unit trace",
          np.abs(rho3.entries - rho3.entries.conj().T).max() < 1e-15
          and abs(rho3.entries.trace() - 1.0) < 1e-15)
    report = pi_tangle(cs)
    pi_closed = equilateral_pi(0.05, 0.03, abs(0.06 + 0.02j))
    check("equilateral closed form matches eigen route",
          abs(report.pi - pi_closed) <= 1e-6 * abs(pi_closed) + 1e-9)

    if failures:
        print(f"{len(failures)} self-test(s) failed")
        return EXIT_SELFTEST
    print("all self-tests passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "correlators":
            return _cmd_point(args, "correlators")
        if args.command == "negativity":
            return _cmd_point(args, "negativity")
        if args.command == "pitangle":
            return _cmd_point(args, "pitangle")
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "figure":
            return _cmd_figure(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "selftest":
            return _cmd_selftest(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as err:
        logger.error("configuration error: %s", err)
        return EXIT_CONFIG
    except (ValueError, KeyError) as err:
        logger.error("invalid input: %s", err)
        return EXIT_CONFIG
    except ConvergenceError as err:
        logger.error("convergence failure: %s", err)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
