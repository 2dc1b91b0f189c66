"""Figure presets: the parameter grids behind each published panel.

Each preset expands to a list of run configurations in a deterministic order
(outer loops first).  ``coarse`` resolution keeps any preset tractable on a
laptop; ``full`` matches the density of the published panels.
"""

from __future__ import annotations

from dataclasses import replace

from .config import RunConfig, SweepSpec

__all__ = ["PRESETS", "preset_points", "preset_description"]

_COARSE = 25
_FULL = 60


def _steps(resolution: str) -> int:
    if resolution == "coarse":
        return _COARSE
    if resolution == "full":
        return _FULL
    raise ValueError(f"resolution must be coarse or full, got {resolution!r}")


def _triangle_mass_distance(resolution: str) -> list:
    n = _steps(resolution)
    base = RunConfig(geometry="triangle", ell=10.0, zeta=1, omega=1.0)
    masses = SweepSpec("mass", 0.005, 0.05, n, "log").values()
    dists = SweepSpec("d_horizon", 0.2, 10.0, n, "linear").values()
    return [replace(base, mass=m, d_horizon=d) for m in masses for d in dists]


def _triangle_gap_distance(resolution: str) -> list:
    n = _steps(resolution)
    base = RunConfig(geometry="triangle", ell=10.0, zeta=1, mass=0.01)
    omegas = SweepSpec("omega", 0.1, 2.0, n, "linear").values()
    dists = SweepSpec("d_horizon", 0.2, 10.0, n, "linear").values()
    return [replace(base, omega=o, d_horizon=d) for o in omegas for d in dists]


def _line_distance_curves(mass: float, spacing: float, omegas, resolution: str,
                          d_max: float = 60.0) -> list:
    n = _steps(resolution)
    base = RunConfig(geometry="line", ell=10.0, zeta=1, mass=mass, spacing=spacing)
    dists = SweepSpec("d_horizon", 0.01, d_max, n, "log").values()
    return [replace(base, omega=o, d_horizon_a=d) for o in omegas for d in dists]


PRESETS = {
    # equilateral triangle, mass vs distance maps (one panel per measure)
    "fig2-top": (
        "Bipartite negativity over (mass, horizon distance), equilateral triangle",
        _triangle_mass_distance,
    ),
    "fig2-bottom": (
        "Pi-tangle over (mass, horizon distance), equilateral triangle",
        _triangle_mass_distance,
    ),
    "fig3": (
        "Pi-tangle over (energy gap, horizon distance), equilateral triangle, M=0.01",
        _triangle_gap_distance,
    ),
    # line configuration, unit spacing
    "fig4-top": (
        "Pi-tangle vs innermost distance, line, M=0.01, spacing 1",
        lambda r: _line_distance_curves(0.01, 1.0, (0.01, 0.1, 1.0), r),
    ),
    "fig4-bottom": (
        "Pi-tangle vs innermost distance, line, M=1, spacing 1",
        lambda r: _line_distance_curves(1.0, 1.0, (0.01, 0.1, 1.0), r),
    ),
    "fig5": (
        "All negativities vs innermost distance, line, M=0.01, spacing 1",
        lambda r: _line_distance_curves(0.01, 1.0, (0.01, 0.1), r),
    ),
    # line configuration, wide spacing: near-horizon spike territory
    "fig6": (
        "Pi-tangle vs innermost distance, line, M=0.01, spacing 5",
        lambda r: _line_distance_curves(0.01, 5.0, (1.0, 1.5, 1.75, 2.0, 2.5), r),
    ),
    "fig7": (
        "Matrix elements vs innermost distance, line, M=0.01, spacing 5, gap 2.5",
        lambda r: _line_distance_curves(0.01, 5.0, (2.5,), r, d_max=10.0),
    ),
}


def preset_points(name: str, resolution: str = "coarse") -> list:
    try:
        _, fn = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
    return fn(resolution)


def preset_description(name: str) -> str:
    return PRESETS[name][0]
