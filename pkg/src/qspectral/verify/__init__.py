"""Randomized, reproducible checks of the finite-n inequalities."""

from qspectral.verify.chain import ChainBoundSpec, ChainContext, ChainTerms, replay_chain_bound
from qspectral.verify.checks import REGISTRY, check_ids, run_check
from qspectral.verify.report import CheckDescriptor, CheckReport, dump_reports, format_table, slack


def run_suite(suite: str = "all", seed: int = 0, trials: int | None = None,
              dims: tuple[int, ...] | None = None) -> list[CheckReport]:
    """Run one check id, or every registered check for ``"all"``, in registry order."""
    ids = check_ids() if suite == "all" else [suite]
    return [run_check(CheckDescriptor(cid, trials=trials, dims=dims, seed=seed)) for cid in ids]


__all__ = [
    "REGISTRY",
    "ChainBoundSpec",
    "ChainContext",
    "ChainTerms",
    "CheckDescriptor",
    "CheckReport",
    "check_ids",
    "dump_reports",
    "format_table",
    "replay_chain_bound",
    "run_check",
    "run_suite",
    "slack",
]
