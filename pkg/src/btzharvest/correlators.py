"""Density-matrix elements for static detectors around a BTZ black hole.

Two independent routes compute the same physics:

* the fast path -- single integrals over the image sum (``compute_correlators``
  and the per-element functions), used everywhere downstream;
* the oracle path -- brute-force double integration of the switched detector
  response against the finite-regulator vacuum two-point function on a 2-D
  tensor grid, extrapolated in the regulator (``oracle_elements``).  It exists
  purely to check the fast path and stays ignorant of its machinery.

All stored elements are per squared dimensionless coupling; downstream code
supplies the coupling only when assembling density matrices.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BtzBackground,
    PairGeometry,
    StaticDetector,
    alpha_pair,
    alpha_single,
)
from .quadrature import (
    ConvergenceError,
    ImageSumControls,
    QuadratureControls,
    SingularIntegralSpec,
    fermi_gaussian,
    image_sum,
    singular_oscillatory,
)

__all__ = [
    "NUMERICS_VERSION",
    "DetectorConfiguration",
    "CorrelatorSet",
    "ElementDiagnostics",
    "WightmanEvaluator",
    "OracleControls",
    "OracleReport",
    "transition_probability",
    "pair_correlator_C",
    "pair_correlator_X",
    "compute_correlators",
    "oracle_elements",
    "richardson_extrapolate",
    "calibrate_branch_sign",
]

logger = logging.getLogger(__name__)

# Bump whenever any numerical method or constant changes in a way that can
# alter results; the on-disk cache keys on it.
NUMERICS_VERSION = 1

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LABELS3 = ("A", "B", "C")


@dataclass(frozen=True)
class DetectorConfiguration:
    """Two or three static detectors sharing one background and one gap.

    The detectors couple through a Gaussian switching function of unit width
    (time is measured in units of that width), and all gaps are required to
    be equal.  Three detectors is the standard tripartite setup; the
    two-detector degenerate mode supports bipartite-only runs.
    """

    background: BtzBackground
    detectors: tuple[StaticDetector, ...]
    switching_width: float = 1.0

    def __post_init__(self):
        if len(self.detectors) not in (2, 3):
            raise ValueError(f"expected 2 or 3 detectors, got {len(self.detectors)}")
        if self.switching_width != 1.0:
            raise ValueError("switching width is the unit of time and must be 1")
        gaps = {d.omega for d in self.detectors}
        if len(gaps) != 1:
            raise ValueError(f"detector gaps must be identical, got {sorted(gaps)}")
        for d in self.detectors:
            if d.background != self.background:
                raise ValueError("all detectors must live on the shared background")

    @property
    def labels(self) -> tuple[str, ...]:
        return _LABELS3[: len(self.detectors)]

    def detector(self, label: str) -> StaticDetector:
        try:
            return self.detectors[self.labels.index(label)]
        except ValueError:
            raise KeyError(f"no detector {label!r} in configuration") from None

    def pairs(self) -> list[tuple[str, str]]:
        labels = self.labels
        return [(labels[i], labels[j]) for i in range(len(labels)) for j in range(i + 1, len(labels))]


@dataclass(frozen=True)
class ElementDiagnostics:
    image_terms: int
    last_term: float


@dataclass
class CorrelatorSet:
    """The per-coupling-squared matrix elements of one detector configuration.

    ``P`` maps detector labels to responses, ``C`` and ``X`` map canonically
    ordered label pairs to the pairwise and nonlocal correlations.  ``C`` is
    real; ``X`` is complex (its imaginary part comes from the continuation of
    the correlator past the light cone and survives in |X|, which is what the
    entanglement measures consume).
    """

    labels: tuple[str, ...]
    P: dict
    C: dict
    X: dict
    diagnostics: dict = field(default_factory=dict)

    def p(self, j: str) -> float:
        return self.P[j]

    def c(self, j: str, k: str) -> float:
        return self.C[_pair_key(j, k)]

    def x(self, j: str, k: str) -> complex:
        return self.X[_pair_key(j, k)]

    def is_equilateral(self, tol: float = 1e-9) -> bool:
        """True when all responses and all pair elements coincide to ``tol``."""
        if len(self.labels) != 3:
            return False
        p = list(self.P.values())
        c = list(self.C.values())
        x = [abs(v) for v in self.X.values()]
        def close(vals):
            scale = max(max(abs(v) for v in vals), 1e-300)
            return max(vals) - min(vals) <= tol * scale
        return close(p) and close(c) and close(x)

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "P": dict(self.P),
            "C": {"|".join(k): v for k, v in self.C.items()},
            "X": {"|".join(k): [v.real, v.imag] for k, v in self.X.items()},
            "diagnostics": {
                k: {"image_terms": d.image_terms, "last_term": d.last_term}
                for k, d in self.diagnostics.items()
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelatorSet":
        return cls(
            labels=tuple(data["labels"]),
            P={k: float(v) for k, v in data["P"].items()},
            C={tuple(k.split("|")): float(v) for k, v in data["C"].items()},
            X={tuple(k.split("|")): complex(v[0], v[1]) for k, v in data["X"].items()},
            diagnostics={
                k: ElementDiagnostics(int(d["image_terms"]), float(d["last_term"]))
                for k, d in data.get("diagnostics", {}).items()
            },
        )


def _pair_key(j: str, k: str) -> tuple[str, str]:
    return (j, k) if j <= k else (k, j)


def _recontext(err: ConvergenceError, label: str) -> ConvergenceError:
    return ConvergenceError(str(err), context=label)


def _transition_raw(det: StaticDetector, bg: BtzBackground,
                    quad: QuadratureControls, images: ImageSumControls):
    """Response of one detector: thermal term, n = 0 boundary image, n >= 1 images."""
    a = det.gaussian_damping
    beta = det.oscillation_frequency
    kind = "complex-exponential-realpart"

    thermal = 0.5 * fermi_gaussian(det.temperature, det.omega, 1.0, quad)

    total = thermal
    if bg.zeta != 0:
        alpha0 = alpha_single(det, bg, 0, +1)
        spec = SingularIntegralSpec(alpha0, a, beta, kind)
        total -= bg.zeta / (2.0 * _SQRT_2PI) * singular_oscillatory(spec, quad).real

    def term(n):
        minus = singular_oscillatory(
            SingularIntegralSpec(alpha_single(det, bg, n, -1), a, beta, kind), quad
        ).real
        if bg.zeta == 0:
            return minus
        plus = singular_oscillatory(
            SingularIntegralSpec(alpha_single(det, bg, n, +1), a, beta, kind), quad
        ).real
        return minus - bg.zeta * plus

    res = image_sum(term, images, two_sided=False)
    total += res.value.real / _SQRT_2PI
    return total, ElementDiagnostics(res.terms_used, res.last_term)


def _clip_response(value: float, label: str) -> float:
    if value < 0.0:
        if value < -1e-12:
            raise ValueError(f"response {label} = {value} is negative beyond tolerance")
        logger.warning("clipping tiny negative response %s = %.3e to 0", label, value)
        return 0.0
    return value


def _pair_sum(pg: PairGeometry, bg: BtzBackground, beta: float, kind: str,
              quad: QuadratureControls, images: ImageSumControls):
    a = pg.a_jk

    def term(n):
        minus = singular_oscillatory(
            SingularIntegralSpec(alpha_pair(pg, bg, n, -1), a, beta, kind), quad
        )
        if bg.zeta == 0:
            return minus
        plus = singular_oscillatory(
            SingularIntegralSpec(alpha_pair(pg, bg, n, +1), a, beta, kind), quad
        )
        return minus - bg.zeta * plus

    return image_sum(term, images, two_sided=True)


def transition_probability(cfg: DetectorConfiguration, which: str,
                           quad: QuadratureControls | None = None,
                           images: ImageSumControls | None = None) -> float:
    """Response P of one detector, per squared dimensionless coupling."""
    quad = quad or QuadratureControls()
    images = images or ImageSumControls()
    det = cfg.detector(which)
    try:
        value, _ = _transition_raw(det, cfg.background, quad, images)
    except ConvergenceError as err:
        raise _recontext(err, f"P_{which}") from err
    return _clip_response(value, f"P_{which}")


def pair_correlator_C(cfg: DetectorConfiguration, pair: tuple[str, str],
                      quad: QuadratureControls | None = None,
                      images: ImageSumControls | None = None) -> float:
    """Pairwise correlation C between two detectors, per squared coupling."""
    quad = quad or QuadratureControls()
    images = images or ImageSumControls()
    pg = PairGeometry(cfg.detector(pair[0]), cfg.detector(pair[1]))
    try:
        res = _pair_sum(pg, cfg.background, pg.beta_plus,
                        "complex-exponential-realpart", quad, images)
    except ConvergenceError as err:
        raise _recontext(err, f"C_{pair[0]}{pair[1]}") from err
    return pg.k_minus * res.value.real


def pair_correlator_X(cfg: DetectorConfiguration, pair: tuple[str, str],
                      quad: QuadratureControls | None = None,
                      images: ImageSumControls | None = None) -> complex:
    """Nonlocal correlation X between two detectors, per squared coupling."""
    quad = quad or QuadratureControls()
    images = images or ImageSumControls()
    pg = PairGeometry(cfg.detector(pair[0]), cfg.detector(pair[1]))
    try:
        res = _pair_sum(pg, cfg.background, pg.beta_minus, "cosine-real", quad, images)
    except ConvergenceError as err:
        raise _recontext(err, f"X_{pair[0]}{pair[1]}") from err
    return -pg.k_plus * res.value


def _canonical_dphi(dphi: float) -> float:
    x = math.fmod(abs(dphi), 2.0 * math.pi)
    return min(x, 2.0 * math.pi - x)


def compute_correlators(cfg: DetectorConfiguration,
                        quad: QuadratureControls | None = None,
                        images: ImageSumControls | None = None) -> CorrelatorSet:
    """All responses and pair elements of a configuration.

    Responses depend only on a detector's radius and pair elements only on the
    two radii and the folded angle difference, so symmetric configurations
    (the equilateral one in particular) share computations.
    """
    quad = quad or QuadratureControls()
    images = images or ImageSumControls()
    bg = cfg.background

    P: dict = {}
    diagnostics: dict = {}
    by_radius: dict = {}
    for label in cfg.labels:
        det = cfg.detector(label)
        key = (det.radius, det.omega)
        if key not in by_radius:
            try:
                by_radius[key] = _transition_raw(det, bg, quad, images)
            except ConvergenceError as err:
                raise _recontext(err, f"P_{label}") from err
        value, diag = by_radius[key]
        P[label] = _clip_response(value, f"P_{label}")
        diagnostics[f"P_{label}"] = diag

    C: dict = {}
    X: dict = {}
    by_pair: dict = {}
    for j, k in cfg.pairs():
        dj, dk = cfg.detector(j), cfg.detector(k)
        key = (min(dj.radius, dk.radius), max(dj.radius, dk.radius),
               round(_canonical_dphi(dj.phi - dk.phi), 12), dj.omega)
        if key not in by_pair:
            pg = PairGeometry(dj, dk)
            name = f"{j}{k}"
            try:
                res_c = _pair_sum(pg, bg, pg.beta_plus,
                                  "complex-exponential-realpart", quad, images)
            except ConvergenceError as err:
                raise _recontext(err, f"C_{name}") from err
            try:
                res_x = _pair_sum(pg, bg, pg.beta_minus, "cosine-real", quad, images)
            except ConvergenceError as err:
                raise _recontext(err, f"X_{name}") from err
            by_pair[key] = (
                pg.k_minus * res_c.value.real,
                -pg.k_plus * res_x.value,
                ElementDiagnostics(res_c.terms_used, res_c.last_term),
                ElementDiagnostics(res_x.terms_used, res_x.last_term),
            )
        c_val, x_val, diag_c, diag_x = by_pair[key]
        C[_pair_key(j, k)] = c_val
        X[_pair_key(j, k)] = x_val
        diagnostics[f"C_{j}{k}"] = diag_c
        diagnostics[f"X_{j}{k}"] = diag_x

    return CorrelatorSet(labels=cfg.labels, P=P, C=C, X=X, diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# oracle path: finite-regulator double integrals on a 2-D tensor grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WightmanEvaluator:
    """Vacuum two-point function at finite UV regulator, image sum included.

    Evaluates the correlator between two static worldlines at coordinate-time
    separation ``delta_t`` (vectorized).  The regulator enters exactly as a
    negative imaginary shift of the time argument inside cosh, and the complex
    square roots take principal branches.
    """

    background: BtzBackground
    epsilon: float
    images: ImageSumControls = ImageSumControls()

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"regulator must be positive, got {self.epsilon}")

    def __call__(self, r1: float, r2: float, dphi: float, delta_t) -> np.ndarray:
        bg = self.background
        rh, ell, zeta = bg.r_h, bg.ell, bg.zeta
        delta_t = np.asarray(delta_t, dtype=float)
        rad = math.sqrt((r1 * r1 - rh * rh) * (r2 * r2 - rh * rh)) / (rh * rh)
        cht = np.cosh((rh / ell**2) * delta_t - 1j * self.epsilon)
        total = np.zeros(delta_t.shape, dtype=complex)
        small_run = 0
        n = 0
        while True:
            for m in ((0,) if n == 0 else (n, -n)):
                arg = (rh / ell) * (dphi - 2.0 * math.pi * m)
                if abs(arg) > 700.0:
                    # image so remote its term underflows the sum entirely
                    small_run += 1
                    continue
                cn = (r1 * r2 / (rh * rh)) * math.cosh(arg) - 1.0
                term = 1.0 / np.sqrt(cn - rad * cht)
                if zeta != 0:
                    term = term - zeta / np.sqrt(cn + 2.0 - rad * cht)
                total += term
                peak = np.abs(term).max()
                scale = np.abs(total).max()
                if peak <= self.images.tol_rel * scale + self.images.tol_abs:
                    small_run += 1
                else:
                    small_run = 0
            if small_run >= self.images.consecutive_small and n >= 1:
                break
            n += 1
            if n > self.images.n_cap:
                raise ConvergenceError(
                    f"image sum in two-point function at n_cap={self.images.n_cap}",
                    "WightmanEvaluator",
                )
        return total / (4.0 * math.pi * math.sqrt(2.0) * ell)


@dataclass(frozen=True)
class OracleControls:
    """Grid and regulator schedule for the double-integral oracle.

    The defaults resolve every regulator in the list on the stated grid; a
    smaller regulator needs proportionally more panels (the integrand's ridge
    along coincident times has width of order the regulator).
    """

    epsilons: tuple = (0.08, 0.04, 0.02)
    panels: int = 400
    order: int = 8
    window: float = 8.0
    block_rows: int = 256

    def __post_init__(self):
        if len(self.epsilons) < 2:
            raise ValueError("need at least two regulator values to extrapolate")
        ratios = [self.epsilons[i] / self.epsilons[i + 1] for i in range(len(self.epsilons) - 1)]
        if any(r <= 1.0 for r in ratios):
            raise ValueError("regulator list must decrease")
        if max(ratios) - min(ratios) > 1e-9 * ratios[0]:
            raise ValueError("regulator list must be geometric")


@dataclass
class OracleReport:
    """One element's oracle values across regulators plus the extrapolation."""

    element: str
    epsilons: tuple
    raw: list
    levels: list
    value: complex
    error_estimate: float
    grid_check: float
    monotone: bool


def richardson_extrapolate(epsilons, values):
    """Extrapolate a geometric regulator sequence to zero.

    Assumes an error expansion in integer powers of the regulator.  Returns
    (levels, error_estimate): ``levels[k]`` is the order-k accelerated value,
    the last one being the best estimate.
    """
    values = [complex(v) for v in values]
    ratio = epsilons[0] / epsilons[1]
    table = [values]
    for k in range(1, len(values)):
        rk = ratio**k
        prev = table[-1]
        table.append([(rk * prev[i + 1] - prev[i]) / (rk - 1.0) for i in range(len(prev) - 1)])
    levels = [col[-1] for col in table]
    err = abs(levels[-1] - levels[-2]) if len(levels) > 1 else math.inf
    return levels, err


def _grid_1d(window: float, panels: int, order: int):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-window, window, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    mid = edges[:-1] + half
    nodes = (mid[:, None] + half * xg[None, :]).ravel()
    weights = np.tile(half * wg, panels)
    return nodes, weights


def _oracle_single(cfg, label, eps, ctrl, images):
    """Double integral for one detector's response at one regulator."""
    det = cfg.detector(label)
    w_eval = WightmanEvaluator(cfg.background, eps, images)
    tau, wts = _grid_1d(ctrl.window, ctrl.panels, ctrl.order)
    t = tau / det.gamma
    chi = np.exp(-0.5 * tau**2)
    rowv = chi * np.exp(-1j * det.omega * tau) * wts
    colv = chi * np.exp(+1j * det.omega * tau) * wts
    acc = 0.0 + 0.0j
    for lo in range(0, len(tau), ctrl.block_rows):
        hi = min(lo + ctrl.block_rows, len(tau))
        dt = t[lo:hi, None] - t[None, :]
        wb = w_eval(det.radius, det.radius, 0.0, dt)
        acc += rowv[lo:hi] @ (wb @ colv)
    return acc


def _oracle_pair(cfg, pair, eps, ctrl, images):
    """Double integrals for C and X of one pair at one regulator."""
    dj, dk = cfg.detector(pair[0]), cfg.detector(pair[1])
    dphi = dj.phi - dk.phi
    w_eval = WightmanEvaluator(cfg.background, eps, images)
    tau, wts = _grid_1d(ctrl.window, ctrl.panels, ctrl.order)
    tj = tau / dj.gamma
    tk = tau / dk.gamma
    chi = np.exp(-0.5 * tau**2)
    omega = dj.omega
    row_c = chi * np.exp(-1j * omega * tau) * wts
    col_c = chi * np.exp(+1j * omega * tau) * wts
    vec_x = chi * np.exp(+1j * omega * tau) * wts
    acc_c = 0.0 + 0.0j
    acc_x = 0.0 + 0.0j
    for lo in range(0, len(tau), ctrl.block_rows):
        hi = min(lo + ctrl.block_rows, len(tau))
        dt = tj[lo:hi, None] - tk[None, :]
        w_jk = w_eval(dj.radius, dk.radius, dphi, dt)
        w_kj = w_eval(dk.radius, dj.radius, -dphi, -dt)
        acc_c += row_c[lo:hi] @ (w_jk @ col_c)
        # time-ordered kernel for the nonlocal element
        kern = np.where(dt > 0.0, w_jk, w_kj)
        acc_x += vec_x[lo:hi] @ (kern @ vec_x)
    return acc_c, -acc_x


def _monotone(values) -> bool:
    def mono(seq):
        diffs = [seq[i + 1] - seq[i] for i in range(len(seq) - 1)]
        return all(d >= 0 for d in diffs) or all(d <= 0 for d in diffs)

    re = [v.real for v in values]
    im = [v.imag for v in values]
    flat_im = max(abs(v) for v in im) <= 1e-9 * max(max(abs(v) for v in re), 1e-300)
    return mono(re) and (flat_im or mono(im))


def _build_report(element, epsilons, raw, raw_half) -> OracleReport:
    levels, err = richardson_extrapolate(epsilons, raw)
    levels_half, _ = richardson_extrapolate(epsilons, raw_half)
    value = levels[-1]
    grid = abs(value - levels_half[-1]) / max(abs(value), 1e-300)
    return OracleReport(
        element=element,
        epsilons=tuple(epsilons),
        raw=list(raw),
        levels=levels,
        value=value,
        error_estimate=err,
        grid_check=grid,
        monotone=_monotone(raw),
    )


def oracle_elements(cfg: DetectorConfiguration, target,
                    controls: OracleControls | None = None,
                    images: ImageSumControls | None = None) -> dict:
    """Regulator-extrapolated double-integral values for one detector or pair.

    ``target`` is a detector label (returns its response report) or a pair of
    labels (returns reports for both pair elements).  Each report carries the
    raw values, the extrapolation ladder, and a halved-grid self-check.
    """
    ctrl = controls or OracleControls()
    images = images or ImageSumControls()
    half = OracleControls(
        epsilons=ctrl.epsilons,
        panels=max(2, ctrl.panels // 2),
        order=ctrl.order,
        window=ctrl.window,
        block_rows=ctrl.block_rows,
    )
    reports = {}
    if isinstance(target, str):
        raw = [_oracle_single(cfg, target, e, ctrl, images) for e in ctrl.epsilons]
        raw_h = [_oracle_single(cfg, target, e, half, images) for e in ctrl.epsilons]
        reports[f"P_{target}"] = _build_report(f"P_{target}", ctrl.epsilons, raw, raw_h)
    else:
        j, k = target
        raw = [_oracle_pair(cfg, (j, k), e, ctrl, images) for e in ctrl.epsilons]
        raw_h = [_oracle_pair(cfg, (j, k), e, half, images) for e in ctrl.epsilons]
        reports[f"C_{j}{k}"] = _build_report(
            f"C_{j}{k}", ctrl.epsilons, [v[0] for v in raw], [v[0] for v in raw_h]
        )
        reports[f"X_{j}{k}"] = _build_report(
            f"X_{j}{k}", ctrl.epsilons, [v[1] for v in raw], [v[1] for v in raw_h]
        )
    return reports


@dataclass
class BranchCalibration:
    """Outcome of matching the fast path against the oracle for both branch signs."""

    matched_sign: float
    oracle_c: complex
    oracle_x: complex
    fast_c: dict
    fast_x: dict
    mismatch: dict


def calibrate_branch_sign(cfg: DetectorConfiguration, pair=("A", "B"),
                          controls: OracleControls | None = None,
                          quad: QuadratureControls | None = None,
                          images: ImageSumControls | None = None) -> BranchCalibration:
    """Decide the continuation branch sign by comparing both candidates to the oracle.

    The pairwise element separates the candidates sharply (the wrong sign adds
    the continuation's contribution instead of subtracting it); the nonlocal
    element pins the sign of the imaginary part.
    """
    from . import quadrature as _quadmod

    quad = quad or QuadratureControls()
    images = images or ImageSumControls()
    reports = oracle_elements(cfg, pair, controls, images)
    key_c, key_x = f"C_{pair[0]}{pair[1]}", f"X_{pair[0]}{pair[1]}"
    oracle_c, oracle_x = reports[key_c].value, reports[key_x].value

    fast_c, fast_x, mismatch = {}, {}, {}
    original = _quadmod.BRANCH_SIGN
    try:
        for sign in (+1.0, -1.0):
            _quadmod.BRANCH_SIGN = sign
            fast_c[sign] = pair_correlator_C(cfg, pair, quad, images)
            fast_x[sign] = pair_correlator_X(cfg, pair, quad, images)
            mismatch[sign] = max(
                abs(fast_c[sign] - oracle_c.real) / max(abs(oracle_c.real), 1e-300),
                abs(fast_x[sign] - oracle_x) / max(abs(oracle_x), 1e-300),
            )
    finally:
        _quadmod.BRANCH_SIGN = original

    matched = min(mismatch, key=mismatch.get)
    return BranchCalibration(
        matched_sign=matched,
        oracle_c=oracle_c,
        oracle_x=oracle_x,
        fast_c=fast_c,
        fast_x=fast_x,
        mismatch=mismatch,
    )
