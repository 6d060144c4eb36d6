"""Check descriptors, reports and margin bookkeeping."""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

OPERATOR_TOL = 1e-9
MAX_WITNESSES = 5


def round_sig(x: float, digits: int = 12) -> float:
    """Round to ``digits`` significant digits so reports are diffable."""
    if x is None or not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")


def trial_rng(seed: int, check_id: str, trial: int) -> np.random.Generator:
    """Counter-based per-trial generator, independent of execution order."""
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(check_id.encode()), trial])


def slack(n: int, epsilon: float, gamma_tol: float) -> float:
    """Resolution allowance for inequalities between finite-n rate estimates."""
    return 2.0 * (abs(math.log(epsilon)) / n + gamma_tol)


@dataclass
class CheckDescriptor:
    check_id: str
    trials: int | None = None
    dims: tuple[int, ...] | None = None
    n_grid: tuple[int, ...] | None = None
    seed: int = 0
    tolerance: float | None = None
    epsilon: float = 0.01
    gamma_tol: float = 1e-4
    extra: dict[str, Any] = field(default_factory=dict)


@dataclass
class CheckReport:
    """Outcome of one named check.

    ``worst_slack`` is the smallest margin seen across all inequalities after
    adding each inequality's allowance (zero for operator-level inequalities,
    ``slack(n)`` for estimate-level ones). Operator-level margins are divided
    by their scale first, so ``tolerance`` is a plain floating-point bound and
    ``passed`` is exactly ``worst_slack >= -tolerance``.
    """

    check_id: str
    passed: bool
    trials: int
    worst_slack: float
    tolerance: float
    level: str
    witnesses: list[dict]
    wall_time_ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "check_id": self.check_id,
            "pass": self.passed,
            "trials": self.trials,
            "worst_slack": round_sig(self.worst_slack),
            "tolerance": round_sig(self.tolerance),
            "level": self.level,
            "witnesses": self.witnesses,
            "wall_time_ms": round(self.wall_time_ms, 3),
        }


class MarginTracker:
    def __init__(self, check_id: str, seed: int, tolerance: float, level: str):
        self.check_id = check_id
        self.seed = seed
        self.tolerance = tolerance
        self.level = level
        self.worst = math.inf
        self.witnesses: list[dict] = []
        self._trials: set[int] = set()

    def record(self, trial: int, margin: float, allowance: float = 0.0, what: str = "") -> float:
        value = float(margin) + allowance
        self._trials.add(trial)
        if math.isnan(value):
            value = -math.inf
        self.worst = min(self.worst, value)
        if value < -self.tolerance and len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append(
                {"seed": self.seed, "trial": trial, "inequality": what, "slack": round_sig(value)}
            )
        return value

    def report(self, wall_time_ms: float = 0.0) -> CheckReport:
        worst = self.worst if self._trials else 0.0
        return CheckReport(
            check_id=self.check_id,
            passed=bool(worst >= -self.tolerance),
            trials=len(self._trials),
            worst_slack=worst,
            tolerance=self.tolerance,
            level=self.level,
            witnesses=list(self.witnesses),
            wall_time_ms=wall_time_ms,
        )


def dump_reports(reports: list[CheckReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=False) + "\n"


def format_table(reports: list[CheckReport]) -> str:
    rows = [f"{'check':<24} {'level':<8} {'trials':>7} {'worst_slack':>14} {'result':>6} {'ms':>10}"]
    for r in reports:
        rows.append(
            f"{r.check_id:<24} {r.level:<8} {r.trials:>7} {r.worst_slack:>14.6g} "
            f"{'PASS' if r.passed else 'FAIL':>6} {r.wall_time_ms:>10.1f}"
        )
    return "\n".join(rows)
