"""Density matrices, partial transposes, negativities and the pi-tangle.

The perturbative three-detector state is assembled in the fixed basis
{ggg, gge, geg, egg, gee, ege, eeg, eee} (detector order A, B, C inside each
ket).  Negativities follow the halved-trace-norm convention
N = (||rho^T||_1 - 1)/2, equivalently the summed magnitudes of the negative eigenvalues of the
partial transpose; leading-order values are extracted by evaluating at two
small couplings and extrapolating in the squared coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .correlators import CorrelatorSet

__all__ = [
    "DensityMatrix",
    "EntanglementReport",
    "ConsistencyError",
    "LambdaSensitivityError",
    "DEFAULT_LAMBDAS",
    "assemble_rho3",
    "assemble_rho_pair",
    "reduce_rho",
    "partial_transpose",
    "negativity",
    "negativity_perturbative",
    "pi_tangle",
    "ckw_check",
    "equilateral_negativities",
    "equilateral_pi",
    "bipartite_closed_form",
]

# default coupling pair for leading-order extraction: small enough that the
# quartic contamination sits ~1e-6 below the quadratic signal, far enough
# apart that the extrapolation is well conditioned
DEFAULT_LAMBDAS = (1e-3, 10.0 ** -2.75)

# Eigenvalues with magnitude below this are treated as zero.  The floor must
# sit well below the quartic-order negative eigenvalues at the default
# evaluation couplings (~1e-13), or they get chopped at one coupling and kept
# at the other, which poisons the leading-order extrapolation; 1e-14 keeps a
# factor ~100 above the 8x8 Hermitian eigensolver noise floor.
_EIG_FLOOR = 1e-14

# basis permutation between the fixed (paper) ordering above and the
# lexicographic tensor ordering; it swaps egg <-> gee and is an involution
_PAPER_TO_LEX = np.array([0, 1, 2, 4, 3, 5, 6, 7])


class ConsistencyError(RuntimeError):
    """Two supposedly equivalent computations disagreed beyond tolerance."""


class LambdaSensitivityError(RuntimeError):
    """Leading-order extraction is unstable against the evaluation coupling."""


@dataclass
class DensityMatrix:
    """Dense Hermitian density matrix over 2 or 3 two-level detectors.

    ``labels`` names the tensor factors in order.  Three-detector matrices use
    the fixed basis ordering documented in the module docstring; two-detector
    ones use {gg, ge, eg, ee}.
    """

    entries: np.ndarray
    labels: tuple

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n = len(self.labels)
        if n not in (2, 3):
            raise ValueError("density matrix must cover 2 or 3 detectors")
        if self.entries.shape != (2**n, 2**n):
            raise ValueError(
                f"entries shape {self.entries.shape} does not match {n} detectors"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def validate(self, tol: float = 1e-12):
        herm = np.abs(self.entries - self.entries.conj().T).max()
        if herm > tol:
            raise ValueError(f"matrix not Hermitian (deviation {herm:.3e})")
        tr = self.entries.trace()
        if abs(tr - 1.0) > tol:
            raise ValueError(f"trace {tr} differs from 1 beyond {tol}")
        return self

    def _lex(self) -> np.ndarray:
        if self.dim == 4:
            return self.entries
        return self.entries[np.ix_(_PAPER_TO_LEX, _PAPER_TO_LEX)]

    @classmethod
    def _from_lex(cls, lex: np.ndarray, labels) -> "DensityMatrix":
        if len(labels) == 2:
            return cls(lex, tuple(labels))
        return cls(lex[np.ix_(_PAPER_TO_LEX, _PAPER_TO_LEX)], tuple(labels))


def assemble_rho3(cs: CorrelatorSet, lambda_tilde: float) -> DensityMatrix:
    """Leading-order three-detector state at coupling ``lambda_tilde``.

    The coupling must lie in (0, 0.1]; beyond that the quartic terms dropped
    from the expansion are no longer negligible.
    """
    if not 0.0 < lambda_tilde <= 0.1:
        raise ValueError(f"coupling {lambda_tilde} outside the perturbative range (0, 0.1]")
    if len(cs.labels) != 3:
        raise ValueError("three detectors required to assemble the tripartite state")
    l2 = lambda_tilde**2
    pa, pb, pc = cs.p("A"), cs.p("B"), cs.p("C")
    rho = np.zeros((8, 8), dtype=complex)
    rho[0, 0] = 1.0 - l2 * (pa + pb + pc)
    rho[1, 1] = l2 * pc
    rho[2, 2] = l2 * pb
    rho[3, 3] = l2 * pa
    # pairwise correlations among the single-excitation states
    rho[2, 1] = l2 * cs.c("B", "C")
    rho[3, 1] = l2 * cs.c("A", "C")
    rho[3, 2] = l2 * cs.c("A", "B")
    # nonlocal correlations between the vacuum and double excitations
    rho[4, 0] = l2 * cs.x("B", "C")
    rho[5, 0] = l2 * cs.x("A", "C")
    rho[6, 0] = l2 * cs.x("A", "B")
    lower = np.tril_indices(8, -1)
    rho[(lower[1], lower[0])] = rho[lower].conj()
    return DensityMatrix(rho, ("A", "B", "C"))


def assemble_rho_pair(cs: CorrelatorSet, pair, lambda_tilde: float) -> DensityMatrix:
    """Leading-order two-detector state, first label = first tensor factor."""
    if not 0.0 < lambda_tilde <= 0.1:
        raise ValueError(f"coupling {lambda_tilde} outside the perturbative range (0, 0.1]")
    j, k = pair
    l2 = lambda_tilde**2
    pj, pk = cs.p(j), cs.p(k)
    c = cs.c(j, k)
    x = cs.x(j, k)
    rho = np.array(
        [
            [1.0 - l2 * (pj + pk), 0.0, 0.0, np.conj(l2 * x)],
            [0.0, l2 * pk, np.conj(l2 * c), 0.0],
            [0.0, l2 * c, l2 * pj, 0.0],
            [l2 * x, 0.0, 0.0, 0.0],
        ],
        dtype=complex,
    )
    return DensityMatrix(rho, (j, k))


def reduce_rho(rho3: DensityMatrix, drop: str) -> DensityMatrix:
    """Partial trace over one detector of a three-detector state."""
    if len(rho3.labels) != 3:
        raise ValueError("reduce_rho expects a three-detector state")
    if drop not in rho3.labels:
        raise KeyError(f"no detector {drop!r} to trace out")
    axis = rho3.labels.index(drop)
    tensor = rho3._lex().reshape((2,) * 6)
    reduced = np.trace(tensor, axis1=axis, axis2=axis + 3)
    remaining = tuple(l for l in rho3.labels if l != drop)
    return DensityMatrix(reduced.reshape(4, 4), remaining)


def partial_transpose(dm: DensityMatrix, subsystem) -> DensityMatrix:
    """Transpose one tensor factor; an involution that preserves the trace."""
    if isinstance(subsystem, str):
        axis = dm.labels.index(subsystem)
    else:
        axis = int(subsystem)
        if not 0 <= axis < len(dm.labels):
            raise ValueError(f"subsystem index {axis} out of range")
    n = len(dm.labels)
    tensor = dm._lex().reshape((2,) * (2 * n))
    tensor = np.swapaxes(tensor, axis, axis + n)
    return DensityMatrix._from_lex(tensor.reshape(2**n, 2**n), dm.labels)


def negativity(dm: DensityMatrix, subsystem) -> float:
    """Summed magnitudes of the negative partial-transpose eigenvalues.

    Cross-checked against the halved trace-norm form (||rho^T||_1 - 1)/2,
    which must agree to 1e-10 for a trace-1 Hermitian input.
    """
    tr = dm.entries.trace()
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"negativity expects a trace-1 state, got trace {tr}")
    pt = partial_transpose(dm, subsystem).entries
    eigs = np.linalg.eigvalsh(pt)
    neg = float(-eigs[eigs < -_EIG_FLOOR].sum())
    trace_norm_form = 0.5 * (np.abs(eigs).sum() - 1.0)
    if abs(neg - trace_norm_form) > 1e-10:
        raise ConsistencyError(
            f"eigenvalue sum {neg} vs trace-norm form {trace_norm_form}"
        )
    return neg


def _negativity_at(cs: CorrelatorSet, j: str, rest: str, lam: float) -> float:
    """Negativity at finite coupling for subsystem j against ``rest``."""
    if len(cs.labels) == 2:
        if len(rest) != 1:
            raise ValueError("one-vs-rest needs three detectors")
        return negativity(assemble_rho_pair(cs, (j, rest), lam), j)
    rho3 = assemble_rho3(cs, lam)
    if len(rest) == 2:
        return negativity(rho3, j)
    drop = next(l for l in cs.labels if l not in (j, rest))
    return negativity(reduce_rho(rho3, drop), j)


def _leading_order(cs: CorrelatorSet, j: str, rest: str, lambdas) -> float:
    """Per-coupling-squared negativity via two-point extrapolation in lambda^2."""
    l1, l2 = lambdas
    n1 = _negativity_at(cs, j, rest, l1) / l1**2
    n2 = _negativity_at(cs, j, rest, l2) / l2**2
    scale = max(abs(n1), abs(n2))
    if scale > 1e-6 and abs(n1 - n2) > 1e-3 * scale:
        raise LambdaSensitivityError(
            f"N_{j}({rest}) changes by {abs(n1 - n2) / scale:.2e} between "
            f"couplings {l1} and {l2}; leading order is not trustworthy"
        )
    x1, x2 = l1**2, l2**2
    return max(0.0, (n1 * x2 - n2 * x1) / (x2 - x1))


def bipartite_closed_form(p_j: float, p_k: float, abs_x: float) -> float:
    """Leading-order two-detector negativity for arbitrary responses."""
    return max(0.0, math.sqrt(0.25 * (p_j - p_k) ** 2 + abs_x**2) - 0.5 * (p_j + p_k))


def equilateral_negativities(p: float, c: float, abs_x: float):
    """Leading-order (one-vs-rest, pairwise) negativities of the symmetric triangle."""
    n_rest = max(0.0, 0.5 * math.sqrt(c * c + 8.0 * abs_x**2) - 0.5 * c - p)
    n_pair = max(0.0, abs_x - p)
    return n_rest, n_pair


def equilateral_pi(p: float, c: float, abs_x: float) -> float:
    """Closed-form pi-tangle of the symmetric triangle (per coupling^4)."""
    n_rest, n_pair = equilateral_negativities(p, c, abs_x)
    return n_rest**2 - 2.0 * n_pair**2


def negativity_perturbative(cs: CorrelatorSet, subsystem, mode: str = "eigen",
                            lambdas=DEFAULT_LAMBDAS) -> float:
    """Leading-order negativity (per squared coupling) for one split.

    ``subsystem`` is a pair like ('A', 'B') for two detectors or ('A', 'BC')
    for one against the rest.  ``mode='eigen'`` extracts the value from two
    small-coupling eigendecompositions; ``mode='closed-form'`` uses the
    analytic leading-order expressions (one-vs-rest only for the symmetric
    equilateral configuration).
    """
    j, rest = subsystem
    if mode == "eigen":
        return _leading_order(cs, j, rest, lambdas)
    if mode != "closed-form":
        raise ValueError(f"unknown mode {mode!r}")
    if len(rest) == 1:
        return bipartite_closed_form(cs.p(j), cs.p(rest), abs(cs.x(j, rest)))
    if not cs.is_equilateral():
        raise ValueError("closed-form one-vs-rest negativity needs the equilateral configuration")
    p = cs.p(j)
    c = next(iter(cs.C.values()))
    abs_x = abs(next(iter(cs.X.values())))
    return equilateral_negativities(p, c, abs_x)[0]


@dataclass
class EntanglementReport:
    """All negativities and pi-tangle pieces of one configuration.

    Negativities are per squared coupling, pi quantities per coupling^4.
    """

    labels: tuple
    bipartite: dict
    one_vs_rest: dict
    pi_components: dict = field(default_factory=dict)
    pi: float = 0.0
    method: str = "eigen"


def pi_tangle(cs: CorrelatorSet, lambdas=DEFAULT_LAMBDAS) -> EntanglementReport:
    """Full entanglement report: nine negativities, pi components and pi.

    For an equilateral input the eigendecomposition route is cross-checked
    against the closed forms to 1e-6 relative; disagreement raises
    ``ConsistencyError`` since both derive from the same matrix elements.
    """
    labels = cs.labels
    if len(labels) != 3:
        raise ValueError("pi-tangle needs three detectors")

    bipartite = {}
    for j in labels:
        for k in labels:
            if j != k:
                bipartite[(j, k)] = _leading_order(cs, j, k, lambdas)
    one_vs_rest = {}
    for j in labels:
        rest = "".join(l for l in labels if l != j)
        one_vs_rest[j] = _leading_order(cs, j, rest, lambdas)

    pi_components = {}
    for j in labels:
        others = [l for l in labels if l != j]
        pi_components[j] = one_vs_rest[j] ** 2 - sum(bipartite[(j, k)] ** 2 for k in others)
    pi = sum(pi_components.values()) / 3.0

    report = EntanglementReport(
        labels=labels,
        bipartite=bipartite,
        one_vs_rest=one_vs_rest,
        pi_components=pi_components,
        pi=pi,
        method="eigen",
    )

    if cs.is_equilateral():
        p = cs.p("A")
        c = next(iter(cs.C.values()))
        abs_x = abs(next(iter(cs.X.values())))
        n_rest, n_pair = equilateral_negativities(p, c, abs_x)
        pi_closed = equilateral_pi(p, c, abs_x)
        checks = [
            (one_vs_rest["A"], n_rest),
            (bipartite[("A", "B")], n_pair),
            (pi, pi_closed),
        ]
        for got, want in checks:
            if abs(got - want) > 1e-6 * abs(want) + 1e-9:
                raise ConsistencyError(
                    f"equilateral closed form {want} vs eigendecomposition {got}"
                )
    return report


def ckw_check(report: EntanglementReport) -> dict:
    """Monogamy inequality per detector: pairwise squares bounded by one-vs-rest.

    Never raises; a mixed state may legitimately violate the inequality, which
    is exactly when the pi component goes negative.
    """
    result = {}
    for j in report.labels:
        scale = max(report.one_vs_rest[j] ** 2, 1.0)
        result[j] = report.pi_components[j] >= -1e-9 * scale
    return result
