"""Registered verification checks.

Each check draws its inputs from :func:`trial_rng` so that a report depends
only on ``(seed, check_id, params)``. Two levels exist:

* ``exact``: finite-n operator inequalities, tolerance ``1e-9`` relative to
  the operator scale, no statistical allowance.
* ``estimate``: inequalities between finite-n rate estimates, each allowed
  ``slack(n)``; the same inequality is also asserted exactly on the von
  Neumann quantities the rates collapse to for i.i.d. inputs.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qspectral.channels import apply_channel, channel_power, dephasing, partial_channel, random_channel, random_unital_channel
from qspectral.errors import QSpectralError
from qspectral.operators import (
    SubsystemShape,
    hermitize,
    partial_trace,
    positive_part_trace,
    random_hermitian,
    sample,
    spectral_projector,
    tensor_power,
)
from qspectral.rates import (
    EntropicKind,
    RateQuery,
    conditional_entropy,
    entropic_rates,
    estimate_divergence_rates,
    mutual_information,
    relative_entropy,
    von_neumann_entropy,
)
from qspectral.spectrum import PairSequence, TypeClassTable, dense_tails
from qspectral.verify.chain import ChainBoundSpec, ChainContext, default_grid, replay_chain_bound
from qspectral.verify.report import OPERATOR_TOL, CheckDescriptor, CheckReport, MarginTracker, slack, trial_rng

ORACLE_TOL = 1e-9


@dataclass(frozen=True)
class CheckInfo:
    func: Callable[[CheckDescriptor, MarginTracker], None]
    level: str
    trials: int
    dims: tuple[int, ...]
    n_grid: tuple[int, ...]


REGISTRY: dict[str, CheckInfo] = {}


def register(check_id: str, level: str, trials: int, dims=(), n_grid=()):
    def deco(func):
        REGISTRY[check_id] = CheckInfo(func, level, trials, tuple(dims), tuple(n_grid))
        return func

    return deco


def _opts(desc: CheckDescriptor) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    info = REGISTRY[desc.check_id]
    return (
        desc.trials if desc.trials is not None else info.trials,
        tuple(desc.dims) if desc.dims else info.dims,
        tuple(desc.n_grid) if desc.n_grid else info.n_grid,
    )


def _rng(desc: CheckDescriptor, trial: int) -> np.random.Generator:
    return trial_rng(desc.seed, desc.check_id, trial)


def _spectral_norm(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(hermitize(a)))))


class Rates:
    """Sign-adjusted entropic estimates of one i.i.d. state, cached by quantity."""

    def __init__(self, rho: np.ndarray, shape: SubsystemShape, desc: CheckDescriptor, n_grid):
        self.rho = rho
        self.shape = shape
        self.desc = desc
        self.n_grid = list(n_grid)
        self._cache: dict[tuple, dict[int, tuple[float, float, float]]] = {}

    def get(self, kind: str, system: str, cond: str = "") -> dict[int, tuple[float, float, float]]:
        """``{n: (sup, inf, mid)}`` for the entropy/conditional/mutual rate of ``system`` (given ``cond``)."""
        key = (kind, system, cond)
        if key not in self._cache:
            ek = EntropicKind(kind, self.shape, tuple(system), tuple(cond))
            est = entropic_rates(
                PairSequence.iid(self.rho, shape=self.shape), ek, self.n_grid,
                epsilon=self.desc.epsilon, gamma_tol=self.desc.gamma_tol, with_rho_tail=False,
            )
            self._cache[key] = {r.n: (r.sup_thresh, r.inf_thresh, r.midpoint) for r in est.records}
        return self._cache[key]

    # shorthands: S-bar / S-underbar of an entropy or conditional entropy at n
    def sup(self, n: int, system: str, cond: str = "", kind: str | None = None) -> float:
        kind = kind or ("conditional" if cond else "entropy")
        return self.get(kind, system, cond)[n][0]

    def inf(self, n: int, system: str, cond: str = "", kind: str | None = None) -> float:
        kind = kind or ("conditional" if cond else "entropy")
        return self.get(kind, system, cond)[n][1]


def _estimate_ineqs(tracker: MarginTracker, trial: int, n: int, desc: CheckDescriptor, items):
    """Record ``lhs <= rhs`` pairs with the ``slack(n)`` allowance."""
    allowance = slack(n, desc.epsilon, desc.gamma_tol)
    for label, lhs, rhs in items:
        tracker.record(trial, rhs - lhs, allowance, f"n={n}: {label}")


def _oracle_ineqs(tracker: MarginTracker, trial: int, items):
    for label, lhs, rhs in items:
        tracker.record(trial, rhs - lhs, 0.0, f"oracle: {label}")


def _oracle_eq(tracker: MarginTracker, trial: int, label: str, a: float, b: float):
    tracker.record(trial, -abs(a - b), 0.0, f"oracle: {label}")


# ---------------------------------------------------------------------------
# exact operator-level checks


@register("lemma1_random", "exact", 10_000, dims=(2, 4, 8, 16))
def lemma1_random(desc, tracker):
    trials, dims, _ = _opts(desc)
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        a, b = random_hermitian(d, rng), random_hermitian(d, rng)
        p = sample("contraction", d, rng).matrix
        lhs = float(np.real(np.trace(p @ (a - b))))
        rhs = positive_part_trace(a, b)
        tracker.record(i, (rhs - lhs) / (1.0 + _spectral_norm(a - b)), what=f"d={d}: Tr[P(A-B)] <= Tr[{{A>=B}}(A-B)]")


@register("lemma2_random", "exact", 1_000, dims=(2, 4, 8))
def lemma2_random(desc, tracker):
    trials, dims, _ = _opts(desc)
    envs = tuple(desc.extra.get("env_dims", (1, 2, 4)))
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        e = envs[(i // len(dims)) % len(envs)]
        a, b = random_hermitian(d, rng), random_hermitian(d, rng)
        t = random_channel(d, e, rng)
        lhs = positive_part_trace(apply_channel(t, a), apply_channel(t, b))
        rhs = positive_part_trace(a, b)
        tracker.record(i, (rhs - lhs) / (1.0 + _spectral_norm(a - b)), what=f"d={d} env={e}: monotone under T")


def _random_pair(rng, d):
    rho = sample("density_hs", d, rng).matrix
    omega = sample("density_hs", d, rng).matrix * rng.uniform(0.5, 2.0)
    return rho, omega


SCALES = (0.5, 1.0, 2.0, 10.0)


@register("tail_decomposition", "exact", 200, dims=(2, 4))
def tail_decomposition(desc, tracker):
    trials, dims, _ = _opts(desc)
    scales = tuple(desc.extra.get("scales", SCALES))
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho, omega = _random_pair(rng, d)
        tails = {s: dense_tails(rho, omega, s) for s in scales}
        norm = 1.0 + _spectral_norm(rho) + max(scales) * _spectral_norm(omega)
        for s, (pos, rt, ot) in tails.items():
            tracker.record(i, -abs(rt - pos - s * ot) / norm, what=f"s={s}: rho_tail = positive + s*omega_tail")
        for s in scales:
            for s2 in scales:
                rhs = tails[s][0] + s * tails[s2][2]
                tracker.record(i, (rhs - tails[s2][1]) / norm, what=f"s={s} s'={s2}: rho_tail(s') <= pos(s) + s*omega_tail(s')")


@register("omega_tail_bound", "exact", 200, dims=(2, 4))
def omega_tail_bound(desc, tracker):
    trials, dims, _ = _opts(desc)
    scales = tuple(desc.extra.get("scales", SCALES))
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho, omega = _random_pair(rng, d)
        tr_rho = float(np.real(np.trace(rho)))
        for s in scales:
            ot = dense_tails(rho, omega, s)[2]
            tracker.record(i, tr_rho / s - ot, what=f"s={s}: omega_tail <= Tr(rho)/s")


@register("entropy_bounds", "exact", 20, dims=(2, 4), n_grid=(1, 2, 3, 4))
def entropy_bounds(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    gammas = tuple(desc.extra.get("gammas", (0.01, 0.1, 1.0)))
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho = sample("density_hs", d, rng).matrix
        for n in n_grid:
            if d**n > 4096:
                continue
            rho_n = tensor_power(rho, n)
            lam_max = float(np.linalg.eigvalsh(hermitize(rho_n))[-1])
            for g in gammas:
                s = math.exp(n * g)
                proj = spectral_projector(rho_n, s * np.eye(d**n), ">=").matrix
                rank = int(round(float(np.real(np.trace(proj)))))
                margin = (s - lam_max) / (1.0 + s) if rank == 0 else -1.0
                tracker.record(i, margin, what=f"d={d} n={n} gamma={g}: {{rho_n >= e^(n gamma)}} = 0")
        est = Rates(rho, SubsystemShape((d,)), desc, n_grid)
        for n in n_grid:
            band = abs(math.log(desc.epsilon)) / n
            for name, val in (("sup", est.sup(n, "A")), ("inf", est.inf(n, "A"))):
                tracker.record(i, val + band, desc.gamma_tol, f"n={n}: {name} entropy >= -|ln eps|/n")
                tracker.record(i, math.log(d) + band - val, desc.gamma_tol, f"n={n}: {name} entropy <= ln d + |ln eps|/n")


@register("pure_reduced_spectra", "exact", 100, dims=(3, 3), n_grid=(1, 2, 4))
def pure_reduced_spectra(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    da, db = (dims + dims)[:2]
    shape = SubsystemShape((da, db))
    for i in range(trials):
        rng = _rng(desc, i)
        psi = sample("pure_haar", da * db, rng).matrix
        ra = partial_trace(psi, shape, ["A"])
        rb = partial_trace(psi, shape, ["B"])
        k = min(da, db)
        la = np.sort(np.linalg.eigvalsh(hermitize(ra)))[::-1][:k]
        lb = np.sort(np.linalg.eigvalsh(hermitize(rb)))[::-1][:k]
        tracker.record(i, -float(np.max(np.abs(la - lb))), what="spectrum(rho_A) = spectrum(rho_B)")
        est = Rates(psi, shape, desc, n_grid)
        for n in n_grid:
            for which in (0, 1, 2):
                a = est.get("entropy", "A")[n][which]
                b = est.get("entropy", "B")[n][which]
                # both estimates resolve the same crossing to within gamma_tol each
                tracker.record(i, 2 * desc.gamma_tol - abs(a - b), what=f"n={n}: S(A) estimate = S(B) estimate")


@register("classical_positive", "exact", 100, dims=(4, 4), n_grid=(1, 2, 3, 4, 5, 6))
def classical_positive(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    da, db = (dims + dims)[:2]
    gammas = tuple(desc.extra.get("gammas", (-0.5, -0.1, -0.01)))
    for i in range(trials):
        rng = _rng(desc, i)
        joint = rng.dirichlet(np.ones(da * db))
        lam = joint.reshape(da, db)
        ref = np.tile(lam.sum(axis=0), da)  # diagonal of I_A (x) rho_B
        for n in n_grid:
            table = TypeClassTable(joint, ref, n)
            dense_ok = (da * db) ** n <= 4096
            if dense_ok:
                rho_d = joint
                ref_d = ref
                for _ in range(n - 1):
                    rho_d = np.kron(rho_d, joint)
                    ref_d = np.kron(ref_d, ref)
            for g in gammas:
                # P(gamma) = {rho_n >= e^{-n gamma} I (x) rho_B,n}; gamma < 0 means a scale above one
                log_s = -n * g
                _, rank_mass, _ = table.tails(-g)
                top = float(np.max(table.llr))
                margin = (log_s - top) / (1.0 + log_s)
                if rank_mass > 0:
                    margin = min(margin, -1.0)
                tracker.record(i, margin, what=f"n={n} gamma={g}: P(gamma) = 0 (type classes)")
                if dense_ok:
                    diag = rho_d - math.exp(log_s) * ref_d
                    rank = int(np.count_nonzero(diag >= 0))
                    m = -float(np.max(diag)) / (1.0 + math.exp(log_s))
                    tracker.record(i, m if rank == 0 else -1.0, what=f"n={n} gamma={g}: P(gamma) = 0 (diagonal)")


@register("chain_bound_prop9", "exact", 50, dims=(2, 2), n_grid=(1, 2, 3))
def chain_bound_prop9(desc, tracker):
    _chain_bound(desc, tracker, "prop9")


@register("chain_bound_prop12", "exact", 50, dims=(2, 2), n_grid=(1, 2, 3))
def chain_bound_prop12(desc, tracker):
    _chain_bound(desc, tracker, "prop12")


def _chain_bound(desc, tracker, variant):
    trials, dims, n_grid = _opts(desc)
    da, db = (dims + dims)[:2]
    shape = SubsystemShape((da, db))
    points = int(desc.extra.get("grid_points", 9))
    for i in range(trials):
        rng = _rng(desc, i)
        rho = sample("density_hs", da * db, rng).matrix
        # proof-motivated points: alpha, beta at the single-copy entropies
        s_ab = von_neumann_entropy(rho)
        s_b = von_neumann_entropy(partial_trace(rho, shape, ["B"]))
        extra = [(s_ab, s_b)] if variant == "prop9" else [(s_ab - s_b, s_b)]
        grid = default_grid(points) + extra
        for n in n_grid:
            ctx = ChainContext(rho, shape, n)
            replay_chain_bound(ChainBoundSpec(rho, shape, n, variant, grid, seed=desc.seed, trial=i), tracker, ctx)


# ---------------------------------------------------------------------------
# estimate-level checks


def _pair_estimates(rho, omega, n_grid, desc):
    est = estimate_divergence_rates(
        RateQuery(PairSequence.iid(rho, omega), n_grid, desc.epsilon, gamma_tol=desc.gamma_tol, with_rho_tail=False)
    )
    return {r.n: (r.sup_thresh, r.inf_thresh, r.midpoint) for r in est.records}


@register("divergence_order", "estimate", 5, dims=(2,), n_grid=(1, 2, 3, 4))
def divergence_order(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho, omega = _random_pair(rng, d)
        for n, (sup, inf, mid) in _pair_estimates(rho, omega, n_grid, desc).items():
            tracker.record(i, mid - inf, desc.gamma_tol, f"n={n}: inf_thresh <= midpoint")
            tracker.record(i, sup - mid, desc.gamma_tol, f"n={n}: midpoint <= sup_thresh")


@register("divergence_nonneg", "estimate", 5, dims=(2,), n_grid=(1, 2, 3, 4))
def divergence_nonneg(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho = sample("density_hs", d, rng).matrix
        omega = sample("density_hs", d, rng).matrix
        for n, (sup, inf, mid) in _pair_estimates(rho, omega, n_grid, desc).items():
            floor = -abs(math.log(desc.epsilon)) / n
            tracker.record(i, inf - floor, desc.gamma_tol, f"n={n}: inf_thresh >= -|ln eps|/n")
            tracker.record(i, mid - floor, desc.gamma_tol, f"n={n}: midpoint >= -|ln eps|/n")
        _oracle_ineqs(tracker, i, [("D(rho||omega) >= 0", 0.0, relative_entropy(rho, omega) + ORACLE_TOL)])


@register("cptp_monotonicity", "estimate", 4, dims=(2,), n_grid=(1, 2, 3, 4))
def cptp_monotonicity(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho = sample("density_hs", d, rng).matrix
        omega = sample("density_hs", d, rng).matrix
        t = random_channel(d, 2, rng)
        before = _pair_estimates(rho, omega, n_grid, desc)
        table = {}
        for n in n_grid:
            tn = channel_power(t, n)
            table[n] = (apply_channel(tn, tensor_power(rho, n)), apply_channel(tn, tensor_power(omega, n)))
        est = estimate_divergence_rates(
            RateQuery(PairSequence.explicit(table), n_grid, desc.epsilon, gamma_tol=desc.gamma_tol, with_rho_tail=False)
        )
        for r in est.records:
            b = before[r.n]
            _estimate_ineqs(tracker, i, r.n, desc, [
                ("sup D(T rho||T omega) <= sup D(rho||omega)", r.sup_thresh, b[0]),
                ("inf D(T rho||T omega) <= inf D(rho||omega)", r.inf_thresh, b[1]),
                ("mid D(T rho||T omega) <= mid D(rho||omega)", r.midpoint, b[2]),
            ])
        d_before = relative_entropy(rho, omega)
        d_after = relative_entropy(apply_channel(t, rho), apply_channel(t, omega))
        _oracle_ineqs(tracker, i, [("D(T rho||T omega) <= D(rho||omega)", d_after, d_before + ORACLE_TOL)])


@register("unital_increase", "estimate", 5, dims=(2, 4), n_grid=(1, 2, 4, 8))
def unital_increase(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        rng = _rng(desc, i)
        d = dims[i % len(dims)]
        rho = sample("density_hs", d, rng).matrix
        shape = SubsystemShape((d,))
        for name, t in (("mixture", random_unital_channel(d, 3, rng)), ("dephasing", dephasing(d))):
            out = apply_channel(t, rho)
            before, after = Rates(rho, shape, desc, n_grid), Rates(out, shape, desc, n_grid)
            for n in n_grid:
                _estimate_ineqs(tracker, i, n, desc, [
                    (f"{name}: sup S(rho) <= sup S(T rho)", before.sup(n, "A"), after.sup(n, "A")),
                    (f"{name}: inf S(rho) <= inf S(T rho)", before.inf(n, "A"), after.inf(n, "A")),
                ])
            _oracle_ineqs(tracker, i, [(f"{name}: S(rho) <= S(T rho)", von_neumann_entropy(rho), von_neumann_entropy(out) + ORACLE_TOL)])


@register("conditioning_reduces", "estimate", 3, dims=(2, 2, 2), n_grid=(1, 2))
def conditioning_reduces(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    shape = SubsystemShape(dims[:3] if len(dims) >= 3 else (2, 2, 2))
    for i in range(trials):
        rng = _rng(desc, i)
        rho = sample("density_hs", shape.dim, rng).matrix
        est = Rates(rho, shape, desc, n_grid)
        for n in n_grid:
            items = []
            for name, pick in (("sup", est.sup), ("inf", est.inf)):
                items += [
                    (f"{name} S(A|BC) <= {name} S(A|B)", pick(n, "A", "BC"), pick(n, "A", "B")),
                    (f"{name} S(A|B) <= {name} S(A)", pick(n, "A", "B"), pick(n, "A")),
                ]
            _estimate_ineqs(tracker, i, n, desc, items)
        s_a_bc = conditional_entropy(rho, shape, ["A"], ["B", "C"])
        s_a_b = conditional_entropy(rho, shape, ["A"], ["B"])
        s_a = von_neumann_entropy(partial_trace(rho, shape, ["A"]))
        _oracle_ineqs(tracker, i, [
            ("S(A|BC) <= S(A|B)", s_a_bc, s_a_b + ORACLE_TOL),
            ("S(A|B) <= S(A)", s_a_b, s_a + ORACLE_TOL),
        ])


def _bipartite(desc, i, dims):
    rng = _rng(desc, i)
    shape = SubsystemShape((dims + dims)[:2])
    return rng, shape, sample("density_hs", shape.dim, rng).matrix


def _oracle_entropies(rho, shape):
    s = {}
    labels = shape.labels
    for k in range(1, len(labels) + 1):
        for combo in itertools.combinations(labels, k):
            r = rho if k == len(labels) else partial_trace(rho, shape, list(combo))
            s["".join(combo)] = von_neumann_entropy(r)
    return s


@register("chain_rules_iid", "estimate", 2, dims=(2, 2), n_grid=(1, 2, 3, 4))
def chain_rules_iid(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        _, shape, rho = _bipartite(desc, i, dims)
        e = Rates(rho, shape, desc, n_grid)
        log_da = math.log(shape.factor_dims[0])
        for n in n_grid:
            su, si = e.sup, e.inf
            _estimate_ineqs(tracker, i, n, desc, [
                ("inf S(AB) - sup S(B) <= inf S(A|B)", si(n, "AB") - su(n, "B"), si(n, "A", "B")),
                ("sup S(AB) - sup S(B) <= sup S(A|B)", su(n, "AB") - su(n, "B"), su(n, "A", "B")),
                ("inf S(AB) - inf S(B) <= sup S(A|B)", si(n, "AB") - si(n, "B"), su(n, "A", "B")),
                ("sup S(A|B) <= sup S(AB) - inf S(B)", su(n, "A", "B"), su(n, "AB") - si(n, "B")),
                ("inf S(A|B) <= inf S(AB) - inf S(B)", si(n, "A", "B"), si(n, "AB") - si(n, "B")),
                ("inf S(A|B) <= sup S(AB) - sup S(B)", si(n, "A", "B"), su(n, "AB") - su(n, "B")),
                ("-sup S(A) <= inf S(A|B)", -su(n, "A"), si(n, "A", "B")),
                ("sup S(A|B) <= ln d_A", su(n, "A", "B"), log_da),
            ])
        s = _oracle_entropies(rho, shape)
        s_a_b = conditional_entropy(rho, shape, ["A"], ["B"])
        _oracle_eq(tracker, i, "S(A|B) = S(AB) - S(B)", s_a_b, s["AB"] - s["B"])
        _oracle_ineqs(tracker, i, [
            ("-S(A) <= S(A|B)", -s["A"], s_a_b + ORACLE_TOL),
            ("S(A|B) <= ln d_A", s_a_b, log_da + ORACLE_TOL),
        ])


@register("ssa_iid", "estimate", 3, dims=(2, 2, 2), n_grid=(1, 2, 3, 4))
def ssa_iid(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    shape = SubsystemShape(dims[:3] if len(dims) >= 3 else (2, 2, 2))
    for i in range(trials):
        rng = _rng(desc, i)
        rho = sample("density_hs", shape.dim, rng).matrix
        e = Rates(rho, shape, desc, n_grid)
        for n in n_grid:
            su, si = (lambda x: e.sup(n, x)), (lambda x: e.inf(n, x))
            _estimate_ineqs(tracker, i, n, desc, [
                ("inf S(ABC) + sup S(B) <= sup S(AB) + sup S(BC)", si("ABC") + su("B"), su("AB") + su("BC")),
                ("sup S(ABC) + inf S(B) <= sup S(AB) + sup S(BC)", su("ABC") + si("B"), su("AB") + su("BC")),
                ("inf S(ABC) + inf S(B) <= sup S(AB) + inf S(BC)", si("ABC") + si("B"), su("AB") + si("BC")),
                ("inf S(ABC) + inf S(B) <= inf S(AB) + sup S(BC)", si("ABC") + si("B"), si("AB") + su("BC")),
            ])
        s = _oracle_entropies(rho, shape)
        _oracle_ineqs(tracker, i, [("S(ABC) + S(B) <= S(AB) + S(BC)", s["ABC"] + s["B"], s["AB"] + s["BC"] + ORACLE_TOL)])


@register("subadd_araki_lieb_iid", "estimate", 3, dims=(2, 2), n_grid=(1, 2, 3, 4))
def subadd_araki_lieb_iid(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        _, shape, rho = _bipartite(desc, i, dims)
        e = Rates(rho, shape, desc, n_grid)
        for n in n_grid:
            su, si = (lambda x: e.sup(n, x)), (lambda x: e.inf(n, x))
            _estimate_ineqs(tracker, i, n, desc, [
                ("sup S(AB) <= sup S(A) + sup S(B)", su("AB"), su("A") + su("B")),
                ("inf S(AB) <= inf S(A) + sup S(B)", si("AB"), si("A") + su("B")),
                ("inf S(AB) <= sup S(A) + inf S(B)", si("AB"), su("A") + si("B")),
                ("sup S(A) - sup S(B) <= sup S(AB)", su("A") - su("B"), su("AB")),
                ("sup S(B) - sup S(A) <= sup S(AB)", su("B") - su("A"), su("AB")),
                ("inf S(A) - sup S(B) <= inf S(AB)", si("A") - su("B"), si("AB")),
                ("inf S(B) - sup S(A) <= inf S(AB)", si("B") - su("A"), si("AB")),
            ])
        s = _oracle_entropies(rho, shape)
        _oracle_ineqs(tracker, i, [
            ("S(AB) <= S(A) + S(B)", s["AB"], s["A"] + s["B"] + ORACLE_TOL),
            ("|S(A) - S(B)| <= S(AB)", abs(s["A"] - s["B"]), s["AB"] + ORACLE_TOL),
        ])


@register("classical_max", "estimate", 5, dims=(2, 3), n_grid=(1, 2, 4, 8))
def classical_max(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    da, db = (dims + dims)[:2]
    shape = SubsystemShape((da, db))
    for i in range(trials):
        rng = _rng(desc, i)
        rho = sample("classical_joint", (da, db), rng).matrix
        e = Rates(rho, shape, desc, n_grid)
        for n in n_grid:
            _estimate_ineqs(tracker, i, n, desc, [
                ("sup S(A) <= sup S(AB)", e.sup(n, "A"), e.sup(n, "AB")),
                ("sup S(B) <= sup S(AB)", e.sup(n, "B"), e.sup(n, "AB")),
                ("inf S(A) <= inf S(AB)", e.inf(n, "A"), e.inf(n, "AB")),
                ("inf S(B) <= inf S(AB)", e.inf(n, "B"), e.inf(n, "AB")),
            ])
        s = _oracle_entropies(rho, shape)
        _oracle_ineqs(tracker, i, [("max(S(A), S(B)) <= S(AB)", max(s["A"], s["B"]), s["AB"] + ORACLE_TOL)])


@register("mutual_props", "estimate", 2, dims=(2, 2, 2), n_grid=(1, 2))
def mutual_props(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    shape3 = SubsystemShape(dims[:3] if len(dims) >= 3 else (2, 2, 2))
    da, db = shape3.factor_dims[:2]
    shape2 = SubsystemShape((da, db))
    for i in range(trials):
        rng = _rng(desc, i)
        rho3 = sample("density_hs", shape3.dim, rng).matrix
        rho2 = partial_trace(rho3, shape3, ["A", "B"])
        t = random_channel(db, 2, rng)
        out2 = apply_channel(partial_channel(t, da), rho2)
        e2, eo, e3 = Rates(rho2, shape2, desc, n_grid), Rates(out2, shape2, desc, n_grid), Rates(rho3, shape3, desc, n_grid)
        for n in n_grid:
            m = e2.get("mutual", "A", "B")[n]
            mo = eo.get("mutual", "A", "B")[n]
            m3 = e3.get("mutual", "A", "BC")[n]
            floor = -abs(math.log(desc.epsilon)) / n
            _estimate_ineqs(tracker, i, n, desc, [
                ("inf S(A:B) <= sup S(A:B)", m[1], m[0]),
                ("sup S(A:(id x T)B) <= sup S(A:B)", mo[0], m[0]),
                ("inf S(A:(id x T)B) <= inf S(A:B)", mo[1], m[1]),
                ("sup S(A:B) <= sup S(A:BC)", m[0], m3[0]),
                ("inf S(A:B) <= inf S(A:BC)", m[1], m3[1]),
            ])
            tracker.record(i, m[1] - floor, desc.gamma_tol, f"n={n}: inf S(A:B) >= -|ln eps|/n")
        i_ab = mutual_information(rho2, shape2, ["A"], ["B"])
        _oracle_ineqs(tracker, i, [
            ("I(A:B) >= 0", 0.0, i_ab + ORACLE_TOL),
            ("I(A:T(B)) <= I(A:B)", mutual_information(out2, shape2, ["A"], ["B"]), i_ab + ORACLE_TOL),
            ("I(A:B) <= I(A:BC)", i_ab, mutual_information(rho3, shape3, ["A"], ["B", "C"]) + ORACLE_TOL),
        ])


@register("mutual_chain_iid", "estimate", 2, dims=(2, 2), n_grid=(1, 2, 3, 4))
def mutual_chain_iid(desc, tracker):
    trials, dims, n_grid = _opts(desc)
    for i in range(trials):
        _, shape, rho = _bipartite(desc, i, dims)
        e = Rates(rho, shape, desc, n_grid)
        for n in n_grid:
            m_sup, m_inf, _ = e.get("mutual", "A", "B")[n]
            sa, ia = e.sup(n, "A"), e.inf(n, "A")
            sc, ic = e.sup(n, "A", "B"), e.inf(n, "A", "B")
            _estimate_ineqs(tracker, i, n, desc, [
                ("sup S(A:B) <= sup S(A) - inf S(A|B)", m_sup, sa - ic),
                ("sup S(A) - sup S(A|B) <= sup S(A:B)", sa - sc, m_sup),
                ("inf S(A) - inf S(A|B) <= sup S(A:B)", ia - ic, m_sup),
                ("inf S(A) - sup S(A|B) <= inf S(A:B)", ia - sc, m_inf),
                ("inf S(A:B) <= sup S(A) - sup S(A|B)", m_inf, sa - sc),
                ("inf S(A:B) <= inf S(A) - inf S(A|B)", m_inf, ia - ic),
            ])
        s = _oracle_entropies(rho, shape)
        _oracle_eq(tracker, i, "I(A:B) = S(A) - S(A|B)",
                   mutual_information(rho, shape, ["A"], ["B"]), s["A"] - conditional_entropy(rho, shape, ["A"], ["B"]))


# ---------------------------------------------------------------------------


def run_check(desc: CheckDescriptor) -> CheckReport:
    """Run one registered check deterministically from ``desc.seed``."""
    if desc.check_id not in REGISTRY:
        raise KeyError(f"unknown check_id {desc.check_id!r}; registered: {sorted(REGISTRY)}")
    info = REGISTRY[desc.check_id]
    tol = desc.tolerance if desc.tolerance is not None else OPERATOR_TOL
    tracker = MarginTracker(desc.check_id, desc.seed, tol, info.level)
    start = time.perf_counter()
    try:
        info.func(desc, tracker)
    except QSpectralError as exc:
        raise type(exc)(f"{desc.check_id}: {exc}") from exc
    return tracker.report((time.perf_counter() - start) * 1e3)


def check_ids() -> list[str]:
    return list(REGISTRY)
