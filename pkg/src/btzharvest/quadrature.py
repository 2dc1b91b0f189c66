"""Numerical engines for the correlator integral families.

Three kinds of machinery live here:

* ``fermi_gaussian`` -- the thermal response integral, a Gaussian window
  against an overflow-safe Fermi factor;
* ``singular_oscillatory`` -- Gaussian-damped oscillatory integrals over
  [0, inf) whose integrand carries an inverse-square-root singularity where
  ``cosh x`` crosses ``cosh alpha``;
* ``image_sum`` -- convergence-controlled accumulator for sums over image
  charges of the quotient spacetime.

The singular integrals are evaluated with the substitution u^2 = |x - alpha|,
which turns the endpoint singularity into a smooth factor, followed by
adaptive composite Gauss-Legendre panels.  Past the singular point the
integrand continues as ``1/sqrt(cosh alpha - cosh x) -> s*i/sqrt(cosh x -
cosh alpha)`` with the global branch sign ``BRANCH_SIGN`` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

__all__ = [
    "BRANCH_SIGN",
    "ConvergenceError",
    "QuadratureControls",
    "ImageSumControls",
    "ImageSumResult",
    "SingularIntegralSpec",
    "cosh_diff",
    "fermi_gaussian",
    "singular_oscillatory",
    "image_sum",
]

# Branch sign of the analytic continuation past the singular point,
# 1/sqrt(cosh a - cosh x) -> BRANCH_SIGN * i/sqrt(cosh x - cosh a) for x > a.
# This equals the principal complex square root of the negative argument
# approached from above, as dictated by the vacuum two-point function's
# negative-imaginary time regulator.  Calibrated once against the
# finite-regulator double-integral oracle (see correlators.calibrate_branch_sign
# and docs/calibration.md): the opposite sign misses the pairwise correlator
# by a factor of ~8 at the calibration point.
BRANCH_SIGN = -1.0

_LN2 = math.log(2.0)

# embedded Gauss-Legendre pair used by the adaptive panel integrator
_GL_HI_X, _GL_HI_W = np.polynomial.legendre.leggauss(20)
_GL_LO_X, _GL_LO_W = np.polynomial.legendre.leggauss(10)

_PANEL_CAP = 40000


class ConvergenceError(RuntimeError):
    """A quadrature or series accumulation failed to meet its tolerance.

    Carries ``context`` describing which integral or sum failed; callers add
    detector/pair labels as the error propagates.
    """

    def __init__(self, message: str, context: str = ""):
        super().__init__(message if not context else f"{context}: {message}")
        self.context = context


@dataclass(frozen=True)
class QuadratureControls:
    """Tolerances for the adaptive panel integrator."""

    tol_rel: float = 1e-10
    tol_abs: float = 1e-14
    max_subdivisions: int = 24

    def __post_init__(self):
        if self.tol_rel <= 0.0 or self.tol_abs <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be at least 1")


@dataclass(frozen=True)
class ImageSumControls:
    """Stopping rule for image sums: terms below tol_rel*|partial| + tol_abs."""

    tol_rel: float = 1e-10
    tol_abs: float = 1e-16
    consecutive_small: int = 2
    n_cap: int = 100000

    def __post_init__(self):
        if self.n_cap < 1:
            raise ValueError("n_cap must be at least 1")
        if self.consecutive_small < 1:
            raise ValueError("consecutive_small must be at least 1")


@dataclass(frozen=True)
class SingularIntegralSpec:
    """One member of the singular oscillatory family.

    ``alpha`` is the hyperbolic angle where the square-root singularity sits,
    ``a`` the Gaussian damping coefficient (must be positive, which guarantees
    integrability at infinity), ``beta`` the oscillation frequency, and
    ``kind`` selects the weight: ``cos(beta x)`` or ``exp(-i beta x)``.
    """

    alpha: float
    a: float
    beta: float
    kind: Literal["cosine-real", "complex-exponential-realpart"]

    def __post_init__(self):
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.a > 0.0:
            raise ValueError(f"Gaussian damping must be positive, got {self.a}")
        if self.kind not in ("cosine-real", "complex-exponential-realpart"):
            raise ValueError(f"unknown integrand kind {self.kind!r}")


@dataclass(frozen=True)
class ImageSumResult:
    value: complex
    terms_used: int
    last_term: float
    converged: bool = True


def cosh_diff(alpha, x):
    """cosh(alpha) - cosh(x) via 2 sinh((alpha+x)/2) sinh((alpha-x)/2).

    The product form stays accurate where the direct difference cancels
    catastrophically (|x - alpha| small against x + alpha large).
    """
    return 2.0 * np.sinh(0.5 * (alpha + x)) * np.sinh(0.5 * (alpha - x))


def _log_sinh(y):
    """log(sinh(y)) for y > 0, safe from overflow for any magnitude."""
    return y + np.log1p(-np.exp(-2.0 * y)) - _LN2


def _inv_sqrt_cosh_gap(s_plus, s_minus):
    """1/sqrt(2 sinh(s_plus) sinh(s_minus)) evaluated in the log domain.

    ``s_plus`` and ``s_minus`` are the half-sum and half-gap of the two
    hyperbolic arguments; the log form survives arguments far beyond cosh
    overflow (image sums reach there at small mass).
    """
    return np.exp(-0.5 * (_LN2 + _log_sinh(s_plus) + _log_sinh(s_minus)))


def _initial_edges(lo: float, hi: float, cap: float, landmarks=()) -> np.ndarray:
    """Panel edges on [lo, hi]: uniform at width ``cap``, seeded with landmarks.

    Landmarks mark scales (e.g. a narrow Gaussian layer) that a coarse uniform
    grid would miss entirely, defeating the error estimate.
    """
    n = max(4, min(2000, int(math.ceil((hi - lo) / cap))))
    edges = np.linspace(lo, hi, n + 1)
    marks = [m for m in landmarks if lo < m < hi]
    if marks:
        edges = np.unique(np.concatenate([edges, np.asarray(marks, dtype=float)]))
        keep = np.concatenate([[True], np.diff(edges) > 1e-14 * max(1.0, hi - lo)])
        edges = edges[keep]
        edges[-1] = hi
    return edges


def _panel_eval(f, lo, hi):
    mid = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)
    xh = mid[:, None] + hw[:, None] * _GL_HI_X[None, :]
    fh = f(xh.ravel()).reshape(xh.shape)
    i_hi = (fh * _GL_HI_W[None, :]).sum(axis=1) * hw
    xl = mid[:, None] + hw[:, None] * _GL_LO_X[None, :]
    fl = f(xl.ravel()).reshape(xl.shape)
    i_lo = (fl * _GL_LO_W[None, :]).sum(axis=1) * hw
    return i_hi, np.abs(i_hi - i_lo)


def _adaptive_gauss(f, edges: np.ndarray, ctrl: QuadratureControls, what: str = "") -> complex:
    """Adaptively refined composite Gauss-Legendre integral of a vectorized f."""
    lo = edges[:-1].astype(float)
    hi = edges[1:].astype(float)
    vals, errs = _panel_eval(f, lo, hi)
    for _ in range(ctrl.max_subdivisions):
        total = vals.sum()
        err = errs.sum()
        target = max(ctrl.tol_rel * abs(total), ctrl.tol_abs)
        if err <= target:
            return complex(total)
        bad = errs > target / (2.0 * len(errs))
        if not bad.any():
            bad = errs == errs.max()
        if len(errs) + bad.sum() > _PANEL_CAP:
            raise ConvergenceError(
                f"panel budget exhausted ({len(errs)} panels, error {err:.3e})", what
            )
        mid = 0.5 * (lo[bad] + hi[bad])
        clo = np.concatenate([lo[bad], mid])
        chi = np.concatenate([mid, hi[bad]])
        cvals, cerrs = _panel_eval(f, clo, chi)
        lo = np.concatenate([lo[~bad], clo])
        hi = np.concatenate([hi[~bad], chi])
        vals = np.concatenate([vals[~bad], cvals])
        errs = np.concatenate([errs[~bad], cerrs])
    raise ConvergenceError(
        f"subdivision cap {ctrl.max_subdivisions} hit (error {errs.sum():.3e})", what
    )


def fermi_gaussian(
    temperature: float,
    omega: float,
    sigma: float = 1.0,
    ctrl: QuadratureControls | None = None,
) -> float:
    """Gaussian-windowed Fermi integral over the whole real line.

    Computes ``int dx exp(-sigma^2 (x-omega)^2) / (exp(x/T) + 1)``.  The
    window is truncated at omega +- 9/sigma (Gaussian tail below 1e-35) and
    the Fermi factor is evaluated as a logistic of -x/T, which saturates
    cleanly instead of overflowing.
    """
    if not temperature > 0.0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    ctrl = ctrl or QuadratureControls()
    lo, hi = omega - 9.0 / sigma, omega + 9.0 / sigma
    t = temperature

    def f(x):
        fermi = np.empty_like(x)
        z = x / t
        pos = z > 0
        ez = np.exp(-np.abs(z))
        fermi[pos] = ez[pos] / (1.0 + ez[pos])
        fermi[~pos] = 1.0 / (1.0 + ez[~pos])
        return np.exp(-(sigma * (x - omega)) ** 2) * fermi

    # the Fermi edge at x = 0 has width ~T; seed panel edges across it
    landmarks = [k * t for k in (-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0)]
    edges = _initial_edges(lo, hi, 1.0 / sigma, landmarks)
    return _adaptive_gauss(f, edges, ctrl, "fermi_gaussian").real


def _gaussian_landmarks(a: float, lo: float, hi: float):
    scale = 1.0 / math.sqrt(a)
    return [k * scale for k in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0) if lo < k * scale < hi]


def singular_oscillatory(
    spec: SingularIntegralSpec, ctrl: QuadratureControls | None = None
) -> complex:
    """Integral of ``exp(-a x^2) w(x) / sqrt(cosh alpha - cosh x)`` over [0, inf).

    ``w`` is ``cos(beta x)`` or ``exp(-i beta x)`` depending on ``spec.kind``.
    On [0, alpha) the denominator is real; past the singular point the branch
    rule ``-> BRANCH_SIGN * i / sqrt(cosh x - cosh alpha)`` applies, so the
    result is complex in general.  The real part is the quantity the response
    and pairwise-correlation elements consume; the nonlocal element keeps the
    full complex value.

    At ``alpha == 0`` the continuation's imaginary component is the
    logarithmically divergent coincidence piece, which the closed-form thermal
    term accounts for elsewhere; only the (finite) real part is returned then.

    Raises ``ConvergenceError`` if the panel-subdivision budget is exhausted;
    a partial value is never returned silently.
    """
    ctrl = ctrl or QuadratureControls()
    alpha, a, beta = spec.alpha, spec.a, spec.beta
    cosine = spec.kind == "cosine-real"
    s = BRANCH_SIGN

    def w(x):
        return np.cos(beta * x) if cosine else np.exp(-1j * beta * x)

    log_tail = math.log(1.0 / ctrl.tol_abs)
    # Gaussian truncation per the damping coefficient, capped by the
    # exp(-x/2) decay of the kernel itself (tail bounded by 16 exp(-x/2))
    x_max = min(
        alpha + math.sqrt(log_tail / a) + 1.0,
        max(alpha + 1.0, 2.0 * math.log(16.0 / ctrl.tol_abs)),
    )
    cap_x = min(2.0, 4.0 * math.pi / (1.0 + abs(beta)))

    if alpha <= 1e-12:
        if cosine:
            return complex(0.0)
        # kernel 1/sqrt(cosh x - 1) = 1/(sqrt(2) sinh(x/2)); the real part of
        # the continuation carries the sine component only
        def f_near(u):
            x = u * u
            return (
                2.0
                * u
                * np.exp(-a * x * x)
                * np.sin(beta * x)
                / (np.sqrt(2.0) * np.sinh(0.5 * x))
            )

        def f_far(x):
            return np.exp(-a * x * x) * np.sin(beta * x) / (np.sqrt(2.0) * np.sinh(0.5 * x))

        u_hi = math.sqrt(min(1.0, x_max))
        cap_u = min(0.3, 4.0 * math.pi / (1.0 + 2.0 * abs(beta) * u_hi))
        val = _adaptive_gauss(f_near, _initial_edges(0.0, u_hi, cap_u), ctrl, "alpha0 near")
        if x_max > 1.0:
            edges = _initial_edges(1.0, x_max, cap_x, _gaussian_landmarks(a, 1.0, x_max))
            val += _adaptive_gauss(f_far, edges, ctrl, "alpha0 far")
        return complex(s * val.real)

    total_r1 = 0.0 + 0.0j

    # region below the singularity, substituted leg: x = alpha - u^2
    u1_hi = math.sqrt(min(alpha, 1.0))

    def f_r1_sub(u):
        usq = u * u
        x = alpha - usq
        kern = _inv_sqrt_cosh_gap(alpha - 0.5 * usq, 0.5 * usq)
        return 2.0 * u * np.exp(-a * x * x) * w(x) * kern

    cap_u1 = min(0.3, 4.0 * math.pi / (1.0 + 2.0 * abs(beta) * u1_hi))
    marks = [math.sqrt(alpha - m) for m in _gaussian_landmarks(a, max(alpha - 1.0, 0.0), alpha)]
    edges = _initial_edges(0.0, u1_hi, cap_u1, marks)
    total_r1 += _adaptive_gauss(f_r1_sub, edges, ctrl, "below singularity (substituted)")

    if alpha > 1.0:
        # smooth remainder of [0, alpha]
        def f_r1_plain(x):
            kern = _inv_sqrt_cosh_gap(0.5 * (alpha + x), 0.5 * (alpha - x))
            return np.exp(-a * x * x) * w(x) * kern

        edges = _initial_edges(0.0, alpha - 1.0, cap_x, _gaussian_landmarks(a, 0.0, alpha - 1.0))
        total_r1 += _adaptive_gauss(f_r1_plain, edges, ctrl, "below singularity")

    total_r2 = 0.0 + 0.0j

    # continuation region, substituted leg: x = alpha + u^2
    u2_hi = math.sqrt(min(1.0, x_max - alpha))

    def f_r2_sub(u):
        usq = u * u
        x = alpha + usq
        kern = _inv_sqrt_cosh_gap(alpha + 0.5 * usq, 0.5 * usq)
        return 2.0 * u * np.exp(-a * x * x) * w(x) * kern

    cap_u2 = min(0.3, 4.0 * math.pi / (1.0 + 2.0 * abs(beta) * u2_hi))
    edges = _initial_edges(0.0, u2_hi, cap_u2)
    total_r2 += _adaptive_gauss(f_r2_sub, edges, ctrl, "continuation (substituted)")

    if x_max > alpha + 1.0:

        def f_r2_plain(x):
            kern = _inv_sqrt_cosh_gap(0.5 * (x + alpha), 0.5 * (x - alpha))
            return np.exp(-a * x * x) * w(x) * kern

        edges = _initial_edges(
            alpha + 1.0, x_max, cap_x, _gaussian_landmarks(a, alpha + 1.0, x_max)
        )
        total_r2 += _adaptive_gauss(f_r2_plain, edges, ctrl, "continuation")

    return complex(total_r1 + s * 1j * total_r2)


def image_sum(
    term: Callable[[int], complex],
    ctrl: ImageSumControls | None = None,
    two_sided: bool = False,
) -> ImageSumResult:
    """Accumulate ``term(n)`` outward until the terms are negligible.

    One-sided mode visits n = 1, 2, ...; two-sided mode visits n = 0, +1, -1,
    +2, -2, ....  The sum stops once ``consecutive_small`` successive terms
    satisfy |term| <= tol_rel*|partial sum| + tol_abs, and raises
    ``ConvergenceError`` if |n| reaches ``n_cap`` first.
    """
    ctrl = ctrl or ImageSumControls()

    def indices():
        if two_sided:
            yield 0
            n = 1
            while True:
                yield n
                yield -n
                n += 1
        else:
            n = 1
            while True:
                yield n
                n += 1

    total = 0.0 + 0.0j
    small_run = 0
    count = 0
    last = 0.0
    for n in indices():
        if abs(n) > ctrl.n_cap:
            raise ConvergenceError(
                f"image sum did not converge within |n| <= {ctrl.n_cap}", "image_sum"
            )
        t = complex(term(n))
        total += t
        count += 1
        last = abs(t)
        if last <= ctrl.tol_rel * abs(total) + ctrl.tol_abs:
            small_run += 1
            if small_run >= ctrl.consecutive_small:
                return ImageSumResult(total, count, last)
        else:
            small_run = 0
