"""Acceptance criteria 1-10, one test each; every test prints a PASS/FAIL line."""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from qspectral.io import builtin_state
from qspectral.operators import SubsystemShape
from qspectral.rates import SENSITIVITY_EPSILONS, EntropicKind, RateQuery, entropic_rates, estimate_divergence_rates
from qspectral.spectrum import PairSequence, TailFunction
from qspectral.verify import CheckDescriptor, run_check

GAMMA_TOL = 1e-4
SEED = 42


@pytest.fixture
def announce(capsys):
    def _announce(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return _announce


def _timed_check(check_id, **kw):
    start = time.perf_counter()
    rep = run_check(CheckDescriptor(check_id, seed=SEED, **kw))
    return rep, time.perf_counter() - start


def test_acceptance_1_projector_maximizes_trace(announce):
    rep, secs = _timed_check("lemma1_random", trials=10_000, dims=(2, 4, 8, 16))
    ok = rep.passed and rep.trials == 10_000 and rep.worst_slack >= -1e-9 and secs < 30
    announce(1, ok, f"lemma1_random trials={rep.trials} worst_slack={rep.worst_slack:.3e} runtime={secs:.1f}s (<30s)")


def test_acceptance_2_channel_monotonicity(announce):
    rep, secs = _timed_check("lemma2_random", trials=1_000, dims=(2, 4, 8), extra={"env_dims": (1, 2, 4)})
    ok = rep.passed and rep.trials == 1_000 and rep.worst_slack >= -1e-9 and secs < 60
    announce(2, ok, f"lemma2_random trials={rep.trials} worst_slack={rep.worst_slack:.3e} runtime={secs:.1f}s (<60s)")


def test_acceptance_3_engine_equivalence(announce):
    grid = np.linspace(-1.0, 1.0, 21)
    cases = [((0.9, 0.1), (0.5, 0.5), 8), ((0.7, 0.2, 0.1), (1 / 3, 1 / 3, 1 / 3), 5)]
    worst = 0.0
    for p, q, n_max in cases:
        seq = PairSequence.classical(p, q)
        for n in range(1, n_max + 1):
            fast, slow = TailFunction(seq, n, engine="typeclass"), TailFunction(seq, n, engine="dense")
            for g in grid:
                a, b = fast(g), slow(g)
                worst = max(worst, abs(a[0] - b[0]), abs(a[1] - b[1]))
    announce(3, worst <= 1e-9, f"max |typeclass - dense| over positive/rho tails = {worst:.2e} (<=1e-9)")


def test_acceptance_4_stein(announce):
    start = time.perf_counter()
    seq = PairSequence.classical((0.9, 0.1), (0.5, 0.5))
    main = estimate_divergence_rates(RateQuery(seq, [1000], 0.01, engine="typeclass")).at(1000)
    brackets = []
    for eps in SENSITIVITY_EPSILONS:
        r = estimate_divergence_rates(RateQuery(seq, [1000], eps, engine="typeclass")).at(1000)
        brackets.append((eps, r.inf_thresh, r.sup_thresh, r.inf_thresh <= r.midpoint <= r.sup_thresh))
    secs = time.perf_counter() - start
    gap = abs(main.midpoint - 0.368064)
    ok = gap < 0.03 and all(b[3] for b in brackets) and secs < 60
    detail = "; ".join(f"eps={e}: [{lo:.4f}, {hi:.4f}]" for e, lo, hi, _ in brackets)
    announce(4, ok, f"n=1000 midpoint={main.midpoint:.6f} |gap|={gap:.2e} (<0.03); {detail}; runtime={secs:.1f}s")


def test_acceptance_5_entropy(announce):
    shape = SubsystemShape((2,))
    kind = EntropicKind("entropy", shape)
    est = entropic_rates(PairSequence.iid(np.diag([0.75, 0.25])), kind, [1000], engine="typeclass")
    gap = abs(est.at(1000).midpoint - 0.562335)
    grid = list(range(1, 11)) + [50, 100, 500, 1000]
    mm = entropic_rates(PairSequence.iid(np.eye(2) / 2), kind, grid)
    # the uniform-spectrum closed form is a step: it holds for the rho_tail level sets
    dev = max(abs(v - math.log(2)) for r in mm.records for v in (r.rho_sup_thresh, r.rho_inf_thresh, r.rho_midpoint))
    pos_dev = max(abs(r.midpoint - math.log(2)) for r in mm.records)
    ok = gap < 0.03 and dev <= GAMMA_TOL
    announce(5, ok, f"diag(.75,.25) n=1000 midpoint gap={gap:.2e} (<0.03); maxmixed rho_tail estimates "
                    f"max |S - ln 2|={dev:.2e} (<=1e-4) at n={grid}; positive_tail midpoint deviates by "
                    f"ln2/n (max {pos_dev:.3f} at n=1)")


def test_acceptance_6_bell_conditional(announce):
    rho, shape = builtin_state("bell")
    kind = EntropicKind("conditional", shape, ("A",), ("B",))
    est = entropic_rates(PairSequence.iid(rho, shape=shape), kind, range(1, 7))
    dev = max(abs(r.midpoint + (math.log(2) - math.log(2) / r.n)) for r in est.records)
    ok = dev <= GAMMA_TOL
    announce(6, ok, f"max |midpoint + (ln2 - ln2/n)| over n=1..6 = {dev:.2e} (<=1e-4); "
                    f"n=6 midpoint={est.at(6).midpoint:.6f}, limit -0.693147")


def test_acceptance_7_exact_operator_checks(announce):
    ids = ["omega_tail_bound", "tail_decomposition", "entropy_bounds", "classical_positive", "pure_reduced_spectra"]
    reports = [_timed_check(cid)[0] for cid in ids]
    ok = all(r.passed and r.level == "exact" for r in reports)
    detail = ", ".join(f"{r.check_id}: trials={r.trials} worst={r.worst_slack:.2e}" for r in reports)
    announce(7, ok, detail)


def test_acceptance_8_chain_replays(announce):
    results = [_timed_check(cid, trials=50, n_grid=(1, 2, 3)) for cid in ("chain_bound_prop9", "chain_bound_prop12")]
    ok = all(r.passed and r.worst_slack >= -1e-9 for r, _ in results) and sum(s for _, s in results) < 180
    detail = ", ".join(f"{r.check_id}: worst={r.worst_slack:.2e} {s:.1f}s" for r, s in results)
    announce(8, ok, detail + " (81-point grid plus proof point, n=1..3)")


def test_acceptance_9_estimate_suites(announce):
    ids = ["cptp_monotonicity", "conditioning_reduces", "chain_rules_iid", "ssa_iid",
           "subadd_araki_lieb_iid", "mutual_props", "mutual_chain_iid"]
    reports = [_timed_check(cid)[0] for cid in ids]
    ok = all(r.passed and r.level == "estimate" for r in reports)
    detail = ", ".join(f"{r.check_id}: worst={r.worst_slack:.2e}" for r in reports)
    announce(9, ok, detail)


def test_acceptance_10_full_suite(tmp_path, announce):
    outs, times, codes = [], [], []
    for name, jobs in (("a.json", "4"), ("b.json", "1")):
        path = tmp_path / name
        start = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "qspectral.cli", "verify", "--suite", "all", "--seed", str(SEED),
             "--jobs", jobs, "--out", str(path)],
            capture_output=True, text=True,
        )
        times.append(time.perf_counter() - start)
        codes.append(proc.returncode)
        outs.append(path.read_text() if path.exists() else "")

    def strip(text):
        doc = json.loads(text)
        for rep in doc:
            rep.pop("wall_time_ms")
        return json.dumps(doc, indent=2)

    identical = all(outs) and strip(outs[0]) == strip(outs[1])
    ok = codes == [0, 0] and identical and max(times) < 300
    announce(10, ok, f"exit codes={codes} runtimes={times[0]:.0f}s/{times[1]:.0f}s (<300s) "
                     f"byte-identical except wall_time={identical}")
