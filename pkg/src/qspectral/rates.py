"""Finite-n estimates of spectral divergence and entropic rates.

At blocklength ``n`` the tail functional ``f_n(gamma)`` is nonincreasing in
``gamma``. The asymptotic conditions ``lim f_n = 0`` and ``lim f_n = 1`` are
replaced by level crossings:

* ``sup_thresh``: ``inf{gamma : f_n(gamma) <= eps}``
* ``inf_thresh``: ``sup{gamma : f_n(gamma) >= 1 - eps}``
* ``midpoint``:   the ``f_n = 1/2`` crossing

Every crossing is computed twice, once on ``positive_tail`` (the primary
estimate) and once on ``rho_tail`` (the ``rho_*`` fields).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from qspectral.errors import BracketError, CapacityError, ValidationError
from qspectral.operators import (
    DEFAULT_DIM_CAP,
    Operand,
    SubsystemShape,
    as_array,
    embed,
    hermitize,
    partial_trace,
    permute_subsystems,
)
from qspectral.spectrum import PairSequence, TailFunction

DEFAULT_EPSILON = 0.01
DEFAULT_GAMMA_TOL = 1e-4
DEFAULT_BRACKET = (-1.0, 1.0)
MAX_DOUBLINGS = 60
SENSITIVITY_EPSILONS = (0.001, 0.05)


@dataclass
class RateQuery:
    seq: PairSequence
    n_grid: Sequence[int]
    epsilon: float = DEFAULT_EPSILON
    gamma_bracket: tuple[float, float] = DEFAULT_BRACKET
    gamma_tol: float = DEFAULT_GAMMA_TOL
    engine: str = "auto"
    cap: int = DEFAULT_DIM_CAP
    with_rho_tail: bool = True

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValidationError(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        lo, hi = self.gamma_bracket
        if not lo < hi:
            raise ValidationError(f"gamma bracket must satisfy lo < hi, got {self.gamma_bracket}")
        grid = list(self.n_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] < 1:
            raise ValidationError(f"n_grid must be a strictly increasing list of positive ints, got {grid}")


@dataclass
class RateRecord:
    n: int
    epsilon: float
    sup_thresh: float
    inf_thresh: float
    midpoint: float
    engine: str
    rho_sup_thresh: float = math.nan
    rho_inf_thresh: float = math.nan
    rho_midpoint: float = math.nan


@dataclass
class RateEstimate:
    """Per-n estimates of one rate.

    For divergences and mutual information ``sup_thresh``/``inf_thresh`` are
    the estimates of the sup/inf rate directly. For entropies and conditional
    entropies the records already carry the flipped signs, so ``sup_thresh``
    estimates the sup-entropy rate (``-inf_thresh`` of the underlying
    divergence) and ``inf_thresh`` the inf-entropy rate. Either way
    ``inf_thresh <= midpoint <= sup_thresh`` at every ``n``.
    """

    records: list[RateRecord]
    kind: str = "divergence"
    gamma_tol: float = DEFAULT_GAMMA_TOL

    def at(self, n: int) -> RateRecord:
        for r in self.records:
            if r.n == n:
                return r
        raise KeyError(f"no estimate for n={n}")

    @property
    def engines(self) -> list[str]:
        return [r.engine for r in self.records]


def threshold_search(f, target: float, bracket: tuple[float, float] = DEFAULT_BRACKET,
                     tol: float = DEFAULT_GAMMA_TOL, *, strict: bool = False, which: str = "positive_tail") -> float:
    """Locate where a nonincreasing ``f(gamma)`` crosses ``target`` by bisection.

    ``f`` is a :class:`TailFunction` (or any callable returning a float).
    The lower end keeps ``f >= target`` (``f > target`` when ``strict``).
    An initial bracket that fails on either side is widened by doubling up
    to ``MAX_DOUBLINGS`` times before :class:`BracketError` is raised.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    value = f.value if isinstance(f, TailFunction) else None

    def above(g: float) -> bool:
        v = value(g, which) if value else f(g)
        return v > target if strict else v >= target

    lo, hi = map(float, bracket)
    width = hi - lo
    for _ in range(MAX_DOUBLINGS):
        if above(lo):
            break
        lo -= width
        width *= 2
    else:
        raise BracketError(_range_message(f, target, lo, hi, which, value))
    width = hi - lo
    for _ in range(MAX_DOUBLINGS):
        if not above(hi):
            break
        hi += width
        width *= 2
    else:
        raise BracketError(_range_message(f, target, lo, hi, which, value))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if above(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _range_message(f, target, lo, hi, which, value) -> str:
    ev = (lambda g: value(g, which)) if value else f
    return (
        f"target level {target} is not attained: achievable range of {which} is "
        f"[{ev(hi):.6g}, {ev(lo):.6g}] over gamma in [{lo:.6g}, {hi:.6g}]"
    )


def estimate_at(seq: PairSequence, n: int, epsilon: float = DEFAULT_EPSILON,
                bracket: tuple[float, float] = DEFAULT_BRACKET, tol: float = DEFAULT_GAMMA_TOL,
                engine: str = "auto", cap: int = DEFAULT_DIM_CAP, with_rho_tail: bool = True) -> RateRecord:
    """Divergence-rate thresholds at a single blocklength."""
    functionals = (("positive_tail", ""), ("rho_tail", "rho_")) if with_rho_tail else (("positive_tail", ""),)
    try:
        f = TailFunction(seq, n, engine=engine, cap=cap)
        vals = {}
        for which, prefix in functionals:
            vals[prefix + "sup_thresh"] = threshold_search(f, epsilon, bracket, tol, strict=True, which=which)
            vals[prefix + "inf_thresh"] = threshold_search(f, 1 - epsilon, bracket, tol, which=which)
            vals[prefix + "midpoint"] = threshold_search(f, 0.5, bracket, tol, which=which)
    except (BracketError, CapacityError) as exc:
        raise type(exc)(f"n={n}: {exc}") from exc
    return RateRecord(n=n, epsilon=epsilon, engine=f.engine, **vals)


def estimate_divergence_rates(q: RateQuery) -> RateEstimate:
    records = [
        estimate_at(q.seq, n, q.epsilon, q.gamma_bracket, q.gamma_tol, q.engine, q.cap, q.with_rho_tail)
        for n in q.n_grid
    ]
    return RateEstimate(records, "divergence", q.gamma_tol)


# ---------------------------------------------------------------------------
# entropic rates


def copy_labels(labels: Sequence[str], n: int) -> list[str]:
    """Labels of ``labels`` across copies ``1..n``, matching :meth:`SubsystemShape.power`."""
    return [f"{lab}{k}" for k in range(1, n + 1) for lab in labels]


@dataclass(frozen=True)
class EntropicKind:
    """Which entropic rate to estimate.

    ``entropy`` of ``system``; ``conditional`` entropy of ``system`` given
    ``conditioning``; ``mutual`` information between ``system`` and
    ``conditioning``.
    """

    kind: str
    shape: SubsystemShape
    system: tuple[str, ...] = ()
    conditioning: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("entropy", "conditional", "mutual"):
            raise ValidationError(f"unknown entropic kind {self.kind!r}")
        system = tuple(self.system) or (self.shape.labels if self.kind == "entropy" else self.shape.labels[:1])
        cond = tuple(self.conditioning)
        if self.kind != "entropy" and not cond:
            cond = tuple(lab for lab in self.shape.labels if lab not in system)
        for lab in system + cond:
            self.shape.index(lab)
        if set(system) & set(cond):
            raise ValidationError(f"system {system} and conditioning {cond} overlap")
        if self.kind != "entropy" and not cond:
            raise ValidationError(f"{self.kind} needs a nonempty conditioning/second system")
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "conditioning", cond)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.system + self.conditioning

    @property
    def reduced_shape(self) -> SubsystemShape:
        return SubsystemShape(self.shape.dims_of(self.labels), self.labels)

    @property
    def flips_sign(self) -> bool:
        return self.kind in ("entropy", "conditional")

    def reduce(self, rho: np.ndarray, shape_n: SubsystemShape) -> np.ndarray:
        n = len(shape_n.labels) // len(self.shape.labels)
        keep = copy_labels(self.labels, n)
        if list(keep) == list(shape_n.labels):
            return rho
        # keep copies grouped as (system cond)(system cond)... to match reduced_shape.power(n)
        return partial_trace(rho, shape_n, keep)

    def reference(self, rho_n: np.ndarray, shape_n: SubsystemShape) -> np.ndarray:
        """``omega_n`` built from ``rho_n`` on the reduced, copy-indexed shape."""
        if self.kind == "entropy":
            return np.eye(rho_n.shape[0], dtype=np.complex128)
        n = len(shape_n.labels) // len(self.labels)
        sys_n = copy_labels(self.system, n)
        cond_n = copy_labels(self.conditioning, n)
        rho_cond = partial_trace(rho_n, shape_n, cond_n)
        if self.kind == "conditional":
            return embed(rho_cond, shape_n, cond_n)
        rho_sys = partial_trace(rho_n, shape_n, sys_n)
        grouped = SubsystemShape(shape_n.dims_of(sys_n + cond_n), tuple(sys_n + cond_n))
        return permute_subsystems(np.kron(rho_sys, rho_cond), grouped, shape_n.labels)


def reference_sequence(seq: PairSequence, kind: EntropicKind) -> PairSequence:
    """The pair sequence ``(rho_n, omega_n)`` whose divergence rates define ``kind``."""
    return seq.derive(kind.reduce, kind.reduced_shape, kind.reference)


def _flip(rec: RateRecord) -> RateRecord:
    return RateRecord(
        n=rec.n, epsilon=rec.epsilon, engine=rec.engine,
        sup_thresh=-rec.inf_thresh, inf_thresh=-rec.sup_thresh, midpoint=-rec.midpoint,
        rho_sup_thresh=-rec.rho_inf_thresh, rho_inf_thresh=-rec.rho_sup_thresh, rho_midpoint=-rec.rho_midpoint,
    )


def entropic_rates(seq: PairSequence, kind: EntropicKind, n_grid: Sequence[int],
                   epsilon: float = DEFAULT_EPSILON, gamma_bracket: tuple[float, float] = DEFAULT_BRACKET,
                   gamma_tol: float = DEFAULT_GAMMA_TOL, engine: str = "auto",
                   cap: int = DEFAULT_DIM_CAP, with_rho_tail: bool = True) -> RateEstimate:
    """Estimate an entropy, conditional entropy or mutual information rate.

    The sign convention turns the inf-divergence threshold into the
    sup-entropy estimate and vice versa for entropies and conditional
    entropies; mutual information keeps the divergence signs.
    """
    ref = reference_sequence(seq, kind)
    est = estimate_divergence_rates(RateQuery(ref, n_grid, epsilon, gamma_bracket, gamma_tol, engine, cap, with_rho_tail))
    records = [_flip(r) for r in est.records] if kind.flips_sign else est.records
    return RateEstimate(records, kind.kind, gamma_tol)


def fit_inverse_sqrt(est: RateEstimate, field_name: str = "midpoint") -> tuple[float, float]:
    """Heuristic least-squares fit ``value ~ a + b / sqrt(n)``; returns ``(a, b)``."""
    ns = np.array([r.n for r in est.records], dtype=float)
    ys = np.array([getattr(r, field_name) for r in est.records])
    design = np.column_stack([np.ones_like(ns), 1.0 / np.sqrt(ns)])
    (a, b), *_ = np.linalg.lstsq(design, ys, rcond=None)
    return float(a), float(b)


# ---------------------------------------------------------------------------
# von Neumann oracles (nats)


def _spectrum(rho: Operand) -> np.ndarray:
    return np.clip(np.linalg.eigvalsh(hermitize(as_array(rho))), 0.0, None)


def von_neumann_entropy(rho: Operand) -> float:
    lam = _spectrum(rho)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def relative_entropy(rho: Operand, omega: Operand, support_tol: float = 1e-12) -> float:
    """``Tr[rho (ln rho - ln omega)]``; ``math.inf`` when supp rho is not inside supp omega."""
    r, o = hermitize(as_array(rho)), hermitize(as_array(omega))
    lr, vr = np.linalg.eigh(r)
    lo, vo = np.linalg.eigh(o)
    keep = lo > support_tol * max(1.0, float(np.max(np.abs(lo))))
    # mass of rho outside supp omega
    outside = vo[:, ~keep]
    if outside.size and float(np.real(np.trace(outside.conj().T @ r @ outside))) > support_tol:
        return math.inf
    lr = np.clip(lr, 0.0, None)
    pos = lr > 0
    s_term = float(np.sum(lr[pos] * np.log(lr[pos])))
    log_o = (vo[:, keep] * np.log(lo[keep])) @ vo[:, keep].conj().T
    cross = float(np.real(np.trace(r @ log_o)))
    return s_term - cross


def conditional_entropy(rho: Operand, shape: SubsystemShape, system: Sequence[str], conditioning: Sequence[str]) -> float:
    """``S(system, conditioning) - S(conditioning)``."""
    joint = partial_trace(rho, shape, list(system) + list(conditioning))
    return von_neumann_entropy(joint) - von_neumann_entropy(partial_trace(rho, shape, conditioning))


def mutual_information(rho: Operand, shape: SubsystemShape, a: Sequence[str], b: Sequence[str]) -> float:
    """``S(a) + S(b) - S(ab)``."""
    return (
        von_neumann_entropy(partial_trace(rho, shape, a))
        + von_neumann_entropy(partial_trace(rho, shape, b))
        - von_neumann_entropy(partial_trace(rho, shape, list(a) + list(b)))
    )


def von_neumann_oracle(rho: Operand, kind: EntropicKind | None = None, omega: Operand | None = None) -> float:
    """Single-copy limit of the spectral rates for i.i.d. sequences.

    With ``omega`` given: relative entropy. Otherwise ``kind`` selects entropy,
    conditional entropy or mutual information of ``rho`` on ``kind.shape``.
    """
    if omega is not None:
        return relative_entropy(rho, omega)
    if kind is None:
        return von_neumann_entropy(rho)
    if kind.kind == "entropy":
        r = rho if set(kind.system) == set(kind.shape.labels) and len(kind.system) == len(kind.shape.labels) \
            else partial_trace(rho, kind.shape, kind.system)
        return von_neumann_entropy(r)
    if kind.kind == "conditional":
        return conditional_entropy(rho, kind.shape, kind.system, kind.conditioning)
    return mutual_information(rho, kind.shape, kind.system, kind.conditioning)
