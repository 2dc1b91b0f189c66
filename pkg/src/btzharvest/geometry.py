"""BTZ spacetime background and static-detector kinematics.

All lengths are measured in units of the detector switching width (sigma = 1),
so inputs are the dimensionless combinations ell/sigma, Omega*sigma, d/sigma
and the dimensionless mass M.  Every object here is an immutable value and
every function is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "BtzBackground",
    "StaticDetector",
    "PairGeometry",
    "proper_distance",
    "radius_at_distance",
    "alpha_single",
    "alpha_pair",
]

_ALLOWED_ZETA = (-1, 0, 1)

# Detectors are rejected (not clamped) this close to the horizon; production
# sweeps keep d(r_h, R)/sigma >= 0.01 so the guard never binds.
_HORIZON_GUARD = 1e-12

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class BtzBackground:
    """Static BTZ black hole: AdS length, dimensionless mass and boundary condition.

    The metric function is f(r) = r^2/ell^2 - mass, giving a horizon at
    r_h = ell*sqrt(mass).  ``zeta`` selects the boundary condition at spatial
    infinity: +1 (Dirichlet, the validated default), 0 (transparent) or -1
    (Neumann).  Only zeta = +1 is exercised by the bundled presets.
    """

    ell: float
    mass: float
    zeta: int = 1

    def __post_init__(self):
        if not self.ell > 0.0:
            raise ValueError(f"AdS length must be positive, got {self.ell}")
        if not self.mass > 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.zeta not in _ALLOWED_ZETA:
            raise ValueError(f"zeta must be one of {_ALLOWED_ZETA}, got {self.zeta}")

    @property
    def r_h(self) -> float:
        """Horizon radius ell*sqrt(mass)."""
        return self.ell * math.sqrt(self.mass)


@dataclass(frozen=True)
class StaticDetector:
    """A pointlike two-level detector hovering at fixed (radius, phi).

    Parameters
    ----------
    background : BtzBackground
    radius : float
        BTZ radial coordinate; must exceed the horizon radius.
    phi : float
        Angular coordinate, radians.
    omega : float
        Energy gap (in units of 1/sigma).

    Derived attributes: ``gamma`` (redshift factor sqrt(R^2 - r_h^2)/ell) and
    ``temperature`` (local Hartle-Hawking temperature r_h/(2 pi ell^2 gamma)).
    """

    background: BtzBackground
    radius: float
    phi: float
    omega: float
    gamma: float = field(init=False)
    temperature: float = field(init=False)

    def __post_init__(self):
        rh = self.background.r_h
        if not self.radius > rh * (1.0 + _HORIZON_GUARD):
            raise ValueError(
                f"detector radius {self.radius} too close to horizon r_h={rh}"
            )
        gamma = math.sqrt(self.radius**2 - rh**2) / self.background.ell
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(
            self,
            "temperature",
            rh / (2.0 * math.pi * self.background.ell**2 * gamma),
        )

    @property
    def gaussian_damping(self) -> float:
        """Damping coefficient a_j = ell^4 gamma^2 / (4 r_h^2) of the response integrand."""
        bg = self.background
        return bg.ell**4 * self.gamma**2 / (4.0 * bg.r_h**2)

    @property
    def oscillation_frequency(self) -> float:
        """Frequency beta_j = ell^2 gamma Omega / r_h of the response integrand."""
        bg = self.background
        return bg.ell**2 * self.gamma * self.omega / bg.r_h


@dataclass(frozen=True)
class PairGeometry:
    """Coefficients coupling two static detectors in the correlator integrands.

    ``beta_plus`` drives the oscillation of the pairwise-correlation integrand,
    ``beta_minus`` that of the nonlocal one; ``k_plus``/``k_minus`` are the
    matching Gaussian prefactors (per squared dimensionless coupling).  All of
    them are symmetric under exchanging the two detectors except the sign of
    ``beta_minus``, which only ever enters through an even function.
    """

    detector_j: StaticDetector
    detector_k: StaticDetector
    delta_phi: float = field(init=False)
    a_jk: float = field(init=False)
    beta_plus: float = field(init=False)
    beta_minus: float = field(init=False)
    k_plus: float = field(init=False)
    k_minus: float = field(init=False)

    def __post_init__(self):
        dj, dk = self.detector_j, self.detector_k
        if dj.background != dk.background:
            raise ValueError("paired detectors must share a background")
        bg = dj.background
        gj, gk = dj.gamma, dk.gamma
        gsq = gj * gj + gk * gk
        omega = dj.omega
        object.__setattr__(self, "delta_phi", dj.phi - dk.phi)
        object.__setattr__(
            self, "a_jk", gj * gj * gk * gk * bg.ell**4 / (2.0 * gsq * bg.r_h**2)
        )
        object.__setattr__(
            self, "beta_plus", gj * gk * (gj + gk) * bg.ell**2 * omega / (gsq * bg.r_h)
        )
        object.__setattr__(
            self, "beta_minus", gj * gk * (gj - gk) * bg.ell**2 * omega / (gsq * bg.r_h)
        )
        pref = math.sqrt(gj * gk) / (2.0 * math.sqrt(math.pi) * math.sqrt(gsq))
        object.__setattr__(
            self, "k_plus", pref * math.exp(-(omega**2) * (gj + gk) ** 2 / (2.0 * gsq))
        )
        object.__setattr__(
            self, "k_minus", pref * math.exp(-(omega**2) * (gj - gk) ** 2 / (2.0 * gsq))
        )


def proper_distance(bg: BtzBackground, r1: float, r2: float) -> float:
    """Proper distance along a constant-time radial line from r1 out to r2.

    Requires r_h <= r1 <= r2; calling with r1 > r2 is an error rather than a
    sign flip.
    """
    rh = bg.r_h
    if r1 < rh or r2 < rh:
        raise ValueError(f"radii must satisfy r >= r_h={rh}, got {r1}, {r2}")
    if r1 > r2:
        raise ValueError(f"expected r1 <= r2, got r1={r1} > r2={r2}")
    u1 = r1 + math.sqrt(max(r1 * r1 - rh * rh, 0.0))
    u2 = r2 + math.sqrt(max(r2 * r2 - rh * rh, 0.0))
    return bg.ell * math.log(u2 / u1)


def radius_at_distance(bg: BtzBackground, r1: float, d: float) -> float:
    """Radial coordinate of the point a proper distance d outward from r1."""
    rh = bg.r_h
    if r1 < rh:
        raise ValueError(f"base radius {r1} is inside the horizon r_h={rh}")
    if d < 0.0:
        raise ValueError(f"proper distance must be nonnegative, got {d}")
    u1 = r1 + math.sqrt(max(r1 * r1 - rh * rh, 0.0))
    u2 = u1 * math.exp(d / bg.ell)
    return 0.5 * (u2 + rh * rh / u2)


def _arccosh_from_parts(c_main: float, c_unit: float, theta: float, sign: int) -> float:
    """arccosh(c_main*cosh(theta) + sign*c_unit), stable for any theta >= 0.

    Uses cosh(theta) = exp(theta)*(1 + exp(-2*theta))/2 so the argument is
    carried in log form; image sums reach theta large enough to overflow a
    direct cosh well before they converge at small mass.
    """
    if sign not in (-1, 1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    # log of y = c_main*cosh(theta) + sign*c_unit, exact rearrangement
    log_y = (
        math.log(0.5 * c_main)
        + theta
        + math.log1p(math.exp(-2.0 * theta) + sign * (2.0 * c_unit / c_main) * math.exp(-theta))
    )
    if log_y < 18.0:  # y < ~6.6e7: evaluate arccosh directly
        y = math.exp(log_y)
        if y < 1.0:
            if y > 1.0 - 1e-12:
                return 0.0  # forced coincident-limit zero, rounded below 1
            raise ValueError(
                f"arccosh argument {y} < 1; minus branch used outside its domain"
            )
        return math.acosh(y)
    # arccosh(y) = ln(2y) - O(1/y^2); the correction is below 1 ulp here
    return _LN2 + log_y


def alpha_single(det: StaticDetector, bg: BtzBackground, n: int, sign: int) -> float:
    """Hyperbolic angle of the n-th image of a detector with itself.

    Returns arccosh[(r_h^2/(gamma^2 ell^2)) ((R^2/r_h^2) cosh(2 pi n r_h/ell) +- 1)].
    The minus branch at n = 0 is the coincident limit and returns exactly 0.
    """
    g2l2 = det.gamma**2 * bg.ell**2
    c_main = det.radius**2 / g2l2
    c_unit = bg.r_h**2 / g2l2
    theta = abs(2.0 * math.pi * n) * bg.r_h / bg.ell
    return _arccosh_from_parts(c_main, c_unit, theta, sign)


def alpha_pair(pg: PairGeometry, bg: BtzBackground, n: int, sign: int) -> float:
    """Hyperbolic angle of the n-th image separating the two paired detectors.

    The angle difference enters as given; summing over all integers n restores
    the symmetry under delta_phi -> -delta_phi.
    """
    dj, dk = pg.detector_j, pg.detector_k
    gjk = dj.gamma * dk.gamma * bg.ell**2
    c_main = dj.radius * dk.radius / gjk
    c_unit = bg.r_h**2 / gjk
    theta = abs(pg.delta_phi + 2.0 * math.pi * n) * bg.r_h / bg.ell
    return _arccosh_from_parts(c_main, c_unit, theta, sign)
