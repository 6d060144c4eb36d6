"""Replay of the finite-n master inequalities behind the conditional chain rules.

For ``rho_n = rho_AB^{(x)n}`` both variants bound ``Tr[P1 Pi]`` for a
difference operator ``Pi`` and its positive projector ``P1``, after splitting
the space with ``P2 = I_A (x) {rho_B >= e^{-n beta}}``:

``prop9``
    ``Pi = rho_n - e^{-n(alpha-beta)} I_A (x) rho_B``;
    ``Tr[P1 Pi] <= Tr[(rho_n - e^{-n alpha} I)_+] + Tr[Q rho_B] + 2 sqrt(Tr[Q rho_B] Tr[P1 P2 rho_n P2])``
    with ``Q = {rho_B < e^{-n beta}}``.
``prop12``
    ``Pi = rho_n - e^{-n(alpha+beta)} I``;
    ``Tr[P1 Pi] <= Tr[R rho_B] + Tr[(rho_n - e^{-n alpha} I_A (x) rho_B)_+] + 2 sqrt(Tr[R rho_B] Tr[P1 Pbar2 rho_n Pbar2])``
    with ``R = {rho_B >= e^{-n beta}}``.

Both hold for every real ``alpha`` and ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from qspectral.operators import (
    SubsystemShape,
    as_array,
    embed,
    hermitize,
    partial_trace,
    projector_from_spectrum,
    tensor_power,
)
from qspectral.rates import copy_labels
from qspectral.verify.report import OPERATOR_TOL, CheckReport, MarginTracker

VARIANTS = ("prop9", "prop12")


def default_grid(points: int = 9, lo: float = -1.0, hi: float = 1.0) -> list[tuple[float, float]]:
    axis = np.linspace(lo, hi, points)
    return [(float(a), float(b)) for a in axis for b in axis]


@dataclass
class ChainBoundSpec:
    rho_ab: np.ndarray
    shape: SubsystemShape
    n: int
    variant: str = "prop9"
    grid: Sequence[tuple[float, float]] = field(default_factory=default_grid)
    system: tuple[str, ...] = ("A",)
    conditioning: tuple[str, ...] = ("B",)
    seed: int = 0
    trial: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass
class ChainTerms:
    """Every trace appearing in one evaluation of a master inequality."""

    lhs: float
    first: float
    second: float
    cross: float
    scale: float
    idempotency_defect: float

    @property
    def rhs(self) -> float:
        return self.first + self.second + self.cross


class ChainContext:
    """Eigendecompositions of ``rho_n`` and ``rho_B,n`` shared across an (alpha, beta) grid."""

    def __init__(self, rho_ab, shape: SubsystemShape, n: int, system=("A",), conditioning=("B",)):
        self.n = n
        rho_ab = as_array(rho_ab)
        if len(system) + len(conditioning) != len(shape.labels):
            rho_ab = partial_trace(rho_ab, shape, list(system) + list(conditioning))
            shape = SubsystemShape(shape.dims_of(list(system) + list(conditioning)), tuple(system) + tuple(conditioning))
        shape_n = shape.power(n)
        self.rho = hermitize(tensor_power(rho_ab, n))
        cond_n = copy_labels(conditioning, n)
        rho_b = hermitize(partial_trace(self.rho, shape_n, cond_n))
        self.rho_b = rho_b
        self.wb, self.vb = np.linalg.eigh(rho_b)
        self.ib_rho_b = embed(rho_b, shape_n, cond_n)
        self.shape_n = shape_n
        self.cond_n = cond_n
        self.wr = np.linalg.eigvalsh(self.rho)
        self.dim = self.rho.shape[0]

    def _p2(self, beta: float) -> tuple[np.ndarray, float, float]:
        """``I_A (x) {rho_B >= e^{-n beta}}`` and the traces of rho_B on both sides of the split."""
        thr = math.exp(-self.n * beta)
        proj_b = projector_from_spectrum(self.wb - thr, self.vb, ">=")
        above = float(np.real(np.trace(proj_b @ self.rho_b)))
        below = float(np.real(np.trace(self.rho_b))) - above
        return embed(proj_b, self.shape_n, self.cond_n), max(above, 0.0), max(below, 0.0)

    def terms(self, alpha: float, beta: float, variant: str) -> ChainTerms:
        n, rho = self.n, self.rho
        eye = np.eye(self.dim)
        p2, above_b, below_b = self._p2(beta)
        pbar2 = eye - p2
        if variant == "prop9":
            pi = rho - math.exp(-n * (alpha - beta)) * self.ib_rho_b
            w, v = np.linalg.eigh(hermitize(pi))
            p1 = projector_from_spectrum(w, v, ">=")
            lhs = float(np.real(np.trace(p1 @ pi)))
            first = float(np.sum(np.maximum(self.wr - math.exp(-n * alpha), 0.0)))
            second = below_b
            inner = float(np.real(np.trace(p1 @ p2 @ rho @ p2)))
            cross = 2.0 * math.sqrt(max(second, 0.0) * max(inner, 0.0))
            scale = 1.0 + np.max(np.abs(w)) + math.exp(-n * alpha)
        else:
            thr = math.exp(-n * (alpha + beta))
            pi = rho - thr * eye
            w, v = np.linalg.eigh(hermitize(pi))
            p1 = projector_from_spectrum(w, v, ">=")
            lhs = float(np.real(np.trace(p1 @ pi)))
            first = above_b
            diff = rho - math.exp(-n * alpha) * self.ib_rho_b
            wd = np.linalg.eigvalsh(hermitize(diff))
            second = float(np.sum(np.maximum(wd, 0.0)))
            inner = float(np.real(np.trace(p1 @ pbar2 @ rho @ pbar2)))
            cross = 2.0 * math.sqrt(max(first, 0.0) * max(inner, 0.0))
            scale = 1.0 + np.max(np.abs(w)) + np.max(np.abs(wd))
        idem = float(np.max(np.abs(p1 @ p1 - p1))) if p1.size else 0.0
        return ChainTerms(lhs, first, second, cross, float(scale), idem)


def replay_chain_bound(spec: ChainBoundSpec, tracker: MarginTracker | None = None,
                       context: ChainContext | None = None) -> CheckReport:
    """Evaluate both sides of the chosen master inequality over ``spec.grid``.

    Margins ``rhs - lhs`` and ``lhs`` (which must be nonnegative) are recorded
    relative to the operator scale; the report passes when the worst of them
    stays above ``-1e-9``.
    """
    own = tracker is None
    if own:
        tracker = MarginTracker(f"chain_bound_{spec.variant}", spec.seed, OPERATOR_TOL, "exact")
    ctx = context or ChainContext(spec.rho_ab, spec.shape, spec.n, spec.system, spec.conditioning)
    for alpha, beta in spec.grid:
        t = ctx.terms(alpha, beta, spec.variant)
        where = f"{spec.variant} n={spec.n} alpha={alpha:.4g} beta={beta:.4g}"
        tracker.record(spec.trial, t.lhs / t.scale, what=f"{where}: lhs >= 0")
        tracker.record(spec.trial, (t.rhs - t.lhs) / t.scale, what=f"{where}: lhs <= rhs")
        tracker.record(spec.trial, -t.idempotency_defect, what=f"{where}: P1 idempotent")
    return tracker.report()
