"""Single-point evaluation, parameter sweeps and CSV emission.

A record is a flat mapping with a fixed column order; every run type emits the
same columns so downstream tooling never has to sniff the layout.  Sweep points
are independent pure computations; with several workers they run in a process
pool and the rows are reassembled in grid order, so worker count never changes
the output bytes.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .cache import CacheKey, CorrelatorCache
from .config import RunConfig, SweepSpec, build_configuration
from .correlators import CorrelatorSet, compute_correlators
from .entanglement import LambdaSensitivityError, ckw_check, pi_tangle
from .quadrature import ConvergenceError

__all__ = ["COLUMNS", "PointResult", "run_point", "run_sweep", "write_csv", "format_value"]

logger = logging.getLogger(__name__)

COLUMNS = [
    "geometry", "mass", "ell", "zeta", "omega",
    "d_horizon", "d_horizon_a", "spacing",
    "R_A", "R_B", "R_C",
    "P_A", "P_B", "P_C",
    "C_AB", "C_AC", "C_BC",
    "reX_AB", "imX_AB", "absX_AB",
    "reX_AC", "imX_AC", "absX_AC",
    "reX_BC", "imX_BC", "absX_BC",
    "N_A_B", "N_B_A", "N_A_C", "N_C_A", "N_B_C", "N_C_B",
    "N_A_BC", "N_B_AC", "N_C_AB",
    "pi_A", "pi_B", "pi_C", "pi",
    "ckw_A", "ckw_B", "ckw_C",
    "status",
]


@dataclass
class PointResult:
    record: dict
    correlators: CorrelatorSet | None
    report: object | None
    ok: bool


def _base_record(rc: RunConfig) -> dict:
    rec = {c: "" for c in COLUMNS}
    rec["geometry"] = rc.geometry
    rec["mass"] = rc.mass
    rec["ell"] = rc.ell
    rec["zeta"] = rc.zeta
    rec["omega"] = rc.omega
    if rc.geometry == "triangle":
        rec["d_horizon"] = rc.d_horizon
    else:
        rec["d_horizon_a"] = rc.d_horizon_a
        rec["spacing"] = rc.spacing
    return rec


def run_point(rc: RunConfig, cache: CorrelatorCache | None = None,
              stage: str = "pitangle") -> PointResult:
    """Evaluate one configuration and return its flat record.

    ``stage`` selects how far to go: ``correlators`` stops at the matrix
    elements, ``negativity`` adds the nine negativities, ``pitangle`` (the
    default) adds the pi-tangle pieces.  Convergence and coupling-sensitivity
    failures produce a record with ``status = converge_fail`` instead of
    raising, so sweeps keep their remaining points.
    """
    rec = _base_record(rc)
    cfg = build_configuration(rc)
    for label, det in zip(cfg.labels, cfg.detectors):
        rec[f"R_{label}"] = det.radius

    cs = None
    key = None
    if cache is not None and cache.enabled:
        key = CacheKey.for_run(cfg, rc.numerics)
        cs = cache.load(key)
    try:
        if cs is None:
            cs = compute_correlators(cfg, rc.numerics.quad, rc.numerics.images)
            if key is not None:
                cache.store(key, cs)
    except ConvergenceError as err:
        logger.error("convergence failure: %s", err)
        rec["status"] = "converge_fail"
        return PointResult(rec, None, None, False)

    for label in cfg.labels:
        rec[f"P_{label}"] = cs.p(label)
    for j, k in cfg.pairs():
        rec[f"C_{j}{k}"] = cs.c(j, k)
        x = cs.x(j, k)
        rec[f"reX_{j}{k}"] = x.real
        rec[f"imX_{j}{k}"] = x.imag
        rec[f"absX_{j}{k}"] = abs(x)

    if stage == "correlators" or len(cfg.labels) != 3:
        rec["status"] = "ok"
        return PointResult(rec, cs, None, True)

    lambdas = (rc.numerics.lambda_eval, rc.numerics.lambda_companion)
    try:
        report = pi_tangle(cs, lambdas)
    except (ConvergenceError, LambdaSensitivityError) as err:
        logger.error("entanglement evaluation failed: %s", err)
        rec["status"] = "converge_fail"
        return PointResult(rec, cs, None, False)

    for (j, k), value in report.bipartite.items():
        rec[f"N_{j}_{k}"] = value
    rest_names = {"A": "BC", "B": "AC", "C": "AB"}
    for j, value in report.one_vs_rest.items():
        rec[f"N_{j}_{rest_names[j]}"] = value

    if stage == "pitangle":
        for j, value in report.pi_components.items():
            rec[f"pi_{j}"] = value
        rec["pi"] = report.pi
        for j, holds in ckw_check(report).items():
            rec[f"ckw_{j}"] = "true" if holds else "false"

    rec["status"] = "ok"
    return PointResult(rec, cs, report, True)


def _sweep_worker(args) -> dict:
    rc, cache_dir, stage = args
    cache = CorrelatorCache(Path(cache_dir)) if cache_dir else CorrelatorCache(None)
    return run_point(rc, cache, stage).record


def run_sweep(rc: RunConfig, sweep: SweepSpec, workers: int = 1,
              cache: CorrelatorCache | None = None,
              stage: str = "pitangle") -> tuple[list, bool]:
    """Evaluate ``rc`` across a sweep grid; returns (records, all_ok).

    Row order follows the grid regardless of worker count.  Failed points are
    recorded with their status and do not abort the sweep.
    """
    points = [sweep.apply(rc, v) for v in sweep.values()]
    cache_dir = str(cache.directory) if (cache is not None and cache.enabled) else ""
    jobs = [(p, cache_dir, stage) for p in points]
    records: list = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, rec in enumerate(pool.map(_sweep_worker, jobs)):
                logger.info("sweep point %d/%d: %s", i + 1, len(jobs), rec["status"])
                records.append(rec)
    else:
        for i, job in enumerate(jobs):
            rec = _sweep_worker(job)
            logger.info("sweep point %d/%d: %s", i + 1, len(jobs), rec["status"])
            records.append(rec)
    all_ok = all(r["status"] == "ok" for r in records)
    return records, all_ok


def format_value(value) -> str:
    """Locale-independent cell formatting; floats keep full round-trip precision."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: list, path) -> None:
    """Write records with the fixed column order, one header row, '.' decimals."""
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for rec in records:
            writer.writerow([format_value(rec[c]) for c in COLUMNS])


def render_csv(records: list) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for rec in records:
        writer.writerow([format_value(rec[c]) for c in COLUMNS])
    return buf.getvalue()
