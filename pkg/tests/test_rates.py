import math

import numpy as np
import pytest
from scipy.stats import binom

from qspectral.errors import BracketError, ValidationError
from qspectral.operators import SubsystemShape, sample
from qspectral.rates import (
    EntropicKind,
    RateQuery,
    conditional_entropy,
    entropic_rates,
    estimate_divergence_rates,
    fit_inverse_sqrt,
    mutual_information,
    relative_entropy,
    threshold_search,
    von_neumann_entropy,
    von_neumann_oracle,
)
from qspectral.spectrum import PairSequence, TailFunction

TOL = 1e-4
KL_STEIN = 0.368064  # 0.9 ln 1.8 + 0.1 ln 0.2
H_QUARTER = 0.562335  # -(0.75 ln 0.75 + 0.25 ln 0.25)


@pytest.mark.parametrize("engine", ["typeclass", "dense"])
def test_equal_pair_thresholds(rng, engine):
    rho = sample("density_hs", 2, rng).matrix
    eps = 0.01
    est = estimate_divergence_rates(RateQuery(PairSequence.iid(rho, rho), [1, 2, 5, 8], eps, engine=engine))
    for r in est.records:
        # f = max(0, 1 - e^{n gamma}) drops to eps at ln(1 - eps)/n and leaves 1 - eps at ln(eps)/n
        assert r.sup_thresh == pytest.approx(math.log(1 - eps) / r.n, abs=TOL)
        assert r.inf_thresh == pytest.approx(math.log(eps) / r.n, abs=TOL)
        assert r.midpoint == pytest.approx(math.log(0.5) / r.n, abs=TOL)
        assert r.engine == engine


def test_bell_conditional_closed_form(bell):
    rho, shape = bell
    kind = EntropicKind("conditional", shape, ("A",), ("B",))
    est = entropic_rates(PairSequence.iid(rho, shape=shape), kind, range(1, 7))
    for r in est.records:
        assert r.midpoint == pytest.approx(-(math.log(2) - math.log(2) / r.n), abs=TOL)
        # rho_tail is a step at gamma = ln 2
        assert r.rho_midpoint == pytest.approx(-math.log(2), abs=TOL)


def test_bell_conditional_dense_engine_agrees(bell):
    rho, shape = bell
    kind = EntropicKind("conditional", shape, ("A",), ("B",))
    fast = entropic_rates(PairSequence.iid(rho, shape=shape), kind, [1, 2, 3], with_rho_tail=False)
    slow = entropic_rates(PairSequence.iid(rho, shape=shape), kind, [1, 2, 3], engine="dense", with_rho_tail=False)
    assert fast.engines == ["typeclass"] * 3 and slow.engines == ["dense"] * 3
    for a, b in zip(fast.records, slow.records):
        assert a.midpoint == pytest.approx(b.midpoint, abs=TOL)
        assert a.sup_thresh == pytest.approx(b.sup_thresh, abs=TOL)


def _binom_positive_tail(n, gamma):
    k = np.arange(n + 1)
    pk = binom.pmf(k, n, 0.1)
    qk = binom.pmf(k, n, 0.5)
    return float(np.sum(np.maximum(pk - math.exp(n * gamma) * qk, 0.0)))


def test_threshold_matches_grid_scan():
    n = 500
    f = TailFunction(PairSequence.classical([0.9, 0.1], [0.5, 0.5]), n)
    got = threshold_search(f, 0.5)
    grid = np.arange(0.30, 0.45, TOL / 4)
    vals = np.array([_binom_positive_tail(n, g) for g in grid])
    crossing = grid[np.argmax(vals < 0.5)]
    assert abs(got - crossing) <= 2 * TOL


def test_threshold_plain_callable_and_bracket_growth():
    assert threshold_search(lambda g: 1 / (1 + math.exp(g - 30)), 0.5) == pytest.approx(30, abs=TOL)
    assert threshold_search(lambda g: 1 / (1 + math.exp(g + 30)), 0.5) == pytest.approx(-30, abs=TOL)
    with pytest.raises(ValueError):
        threshold_search(lambda g: 0.5, 1.0)


def test_unbracketable_target_names_range():
    # omega's kernel carries half of rho: f never drops below 1/2
    seq = PairSequence.iid(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    with pytest.raises(BracketError, match="achievable range"):
        estimate_divergence_rates(RateQuery(seq, [2], 0.01))


def test_stein_convergence():
    est = estimate_divergence_rates(RateQuery(PairSequence.classical([0.9, 0.1], [0.5, 0.5]), [10, 100, 1000]))
    assert est.engines == ["typeclass"] * 3
    last = est.at(1000)
    assert abs(last.midpoint - KL_STEIN) < 0.03
    assert last.midpoint == pytest.approx(0.367462, abs=2 * TOL)
    first = est.at(10)
    assert abs(last.midpoint - KL_STEIN) < abs(first.midpoint - KL_STEIN) + 0.01
    with pytest.raises(KeyError):
        est.at(7)


def test_ordering_on_random_pairs(rng):
    for _ in range(5):
        rho = sample("density_hs", 2, rng).matrix
        omega = sample("density_hs", 2, rng).matrix
        est = estimate_divergence_rates(RateQuery(PairSequence.iid(rho, omega), [1, 2, 3, 4]))
        for r in est.records:
            assert r.inf_thresh <= r.midpoint + TOL
            assert r.midpoint <= r.sup_thresh + TOL
            assert r.rho_inf_thresh <= r.rho_sup_thresh + TOL


def test_maxmixed_entropy():
    rho = np.eye(2) / 2
    est = entropic_rates(PairSequence.iid(rho), EntropicKind("entropy", SubsystemShape((2,))), [1, 2, 5, 50, 500])
    for r in est.records:
        assert r.rho_sup_thresh == pytest.approx(math.log(2), abs=TOL)
        assert r.rho_inf_thresh == pytest.approx(math.log(2), abs=TOL)
        assert r.rho_midpoint == pytest.approx(math.log(2), abs=TOL)
        # positive-tail level sets sit at ln 2 - ln(level)/n
        assert r.midpoint == pytest.approx(math.log(2) + math.log(2) / r.n, abs=TOL)


def test_entropy_convergence():
    est = entropic_rates(PairSequence.iid(np.diag([0.75, 0.25])), EntropicKind("entropy", SubsystemShape((2,))), [10, 1000])
    assert abs(est.at(1000).midpoint - H_QUARTER) < 0.03
    assert est.at(1000).midpoint == pytest.approx(0.563263, abs=2 * TOL)
    r = est.at(1000)
    assert r.inf_thresh <= r.midpoint <= r.sup_thresh


def test_mutual_information_sign_convention(bell):
    rho, shape = bell
    est = entropic_rates(PairSequence.iid(rho, shape=shape), EntropicKind("mutual", shape, ("A",), ("B",)), [1, 2, 3])
    for r in est.records:
        assert r.inf_thresh <= r.midpoint <= r.sup_thresh
        # rho_AB vs I/4: rank-one Pi with eigenvalue 1 - e^{n gamma} 4^{-n}
        assert r.midpoint == pytest.approx(2 * math.log(2) + math.log(0.5) / r.n, abs=TOL)


def test_fit_is_heuristic_but_exact_on_model():
    from qspectral.rates import RateEstimate, RateRecord

    recs = [RateRecord(n, 0.01, 0, 0, 0.4 - 0.3 / math.sqrt(n), "typeclass") for n in (4, 16, 64, 256)]
    a, b = fit_inverse_sqrt(RateEstimate(recs))
    assert a == pytest.approx(0.4) and b == pytest.approx(-0.3)


def test_query_validation():
    seq = PairSequence.classical([0.5, 0.5], [0.5, 0.5])
    with pytest.raises(ValidationError):
        RateQuery(seq, [1, 2], epsilon=0.5)
    with pytest.raises(ValidationError):
        RateQuery(seq, [2, 1])
    with pytest.raises(ValidationError):
        RateQuery(seq, [1], gamma_bracket=(1.0, -1.0))
    with pytest.raises(ValidationError):
        EntropicKind("conditional", SubsystemShape((2, 2)), ("A",), ("A",))


# ---------------------------------------------------------------------------
# oracles


def test_von_neumann_examples(rng):
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2))
    rho = sample("density_hs", 3, rng).matrix
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert relative_entropy(np.diag([0.9, 0.1]), np.diag([0.5, 0.5])) == pytest.approx(KL_STEIN, abs=1e-6)
    assert relative_entropy(np.diag([0.5, 0.5]), np.diag([1.0, 0.0])) == math.inf


def test_kl_against_empirical_llr():
    rng = np.random.default_rng(12345)
    x = rng.random(10**6) < 0.1
    llr = np.where(x, math.log(0.1 / 0.5), math.log(0.9 / 0.5))
    # standard error of the mean is about 6.6e-4
    assert abs(llr.mean() - KL_STEIN) < 3e-3
    assert abs(relative_entropy(np.diag([0.9, 0.1]), np.diag([0.5, 0.5])) - llr.mean()) < 3e-3


def test_bipartite_oracles(bell, rng):
    rho, shape = bell
    assert conditional_entropy(rho, shape, ["A"], ["B"]) == pytest.approx(-math.log(2))
    assert mutual_information(rho, shape, ["A"], ["B"]) == pytest.approx(2 * math.log(2))
    kind = EntropicKind("conditional", shape, ("A",), ("B",))
    assert von_neumann_oracle(rho, kind) == pytest.approx(-math.log(2))
    r, s = sample("density_hs", 2, rng).matrix, sample("density_hs", 3, rng).matrix
    assert mutual_information(np.kron(r, s), SubsystemShape((2, 3)), ["A"], ["B"]) == pytest.approx(0, abs=1e-10)
    assert von_neumann_oracle(r, omega=r) == pytest.approx(0, abs=1e-12)
