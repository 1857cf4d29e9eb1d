"""Yield estimation and regime planning from verification statistics.

The expected verified count for a round is K(P, p) = P * (p * r_seq +
(1 - p) * r_sinq); matched budgets divide a K target by the inequivalence
yield. Presets mirror the four standard regimes (main 50/50, max-volume
pure-SINQ, balanced-yield 96/4, and the volume-matched small-budget run).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable

from .engine import GameInstance, GameType
from .errors import NoAttempts, ZeroYield


@dataclass(frozen=True)
class RegimeSpec:
    name: str
    budget_p: int
    p_seq: float
    tau: float = 3.0
    n_bob_samples: int = 10
    rounds: int = 7

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "budget_p": self.budget_p,
            "p_seq": self.p_seq,
            "tau": self.tau,
            "n_bob_samples": self.n_bob_samples,
            "rounds": self.rounds,
        }

    @classmethod
    def from_record(cls, record: dict) -> "RegimeSpec":
        return cls(**record)


PRESETS = {
    "E0": RegimeSpec("E0", budget_p=500, p_seq=0.5),
    "E1": RegimeSpec("E1", budget_p=500, p_seq=0.0),
    "E2": RegimeSpec("E2", budget_p=500, p_seq=0.96),
    "E3": RegimeSpec("E3", budget_p=40, p_seq=0.0),
}


@dataclass(frozen=True)
class YieldEstimate:
    seq_attempts: int
    seq_validated: int
    sinq_attempts: int
    sinq_validated: int

    @property
    def r_seq(self) -> float:
        return self.seq_validated / self.seq_attempts

    @property
    def r_sinq(self) -> float:
        return self.sinq_validated / self.sinq_attempts


# Yields measured on the reference 7-round 50/50 run at 250 attempts per
# game per round; the planner's default calibration.
REFERENCE_YIELDS = YieldEstimate(
    seq_attempts=1750, seq_validated=34, sinq_attempts=1750, sinq_validated=903
)


def estimate_yields(instances: Iterable[GameInstance]) -> YieldEstimate:
    """Pool attempts vs verified counts across all rounds of an archive."""
    seq_attempts = seq_validated = sinq_attempts = sinq_validated = 0
    for inst in instances:
        if inst.game == GameType.SEQ:
            seq_attempts += 1
            seq_validated += inst.verified
        else:
            sinq_attempts += 1
            sinq_validated += inst.verified
    if seq_attempts == 0:
        raise NoAttempts("SEQ")
    if sinq_attempts == 0:
        raise NoAttempts("SINQ")
    return YieldEstimate(seq_attempts, seq_validated, sinq_attempts, sinq_validated)


@dataclass(frozen=True)
class ExpectedVerified:
    k_seq: float
    k_sinq: float

    @property
    def k_total(self) -> float:
        return self.k_seq + self.k_sinq


def expected_verified(p_budget: float, p_seq: float, y: YieldEstimate) -> ExpectedVerified:
    """K(P, p) split by game: P*p*r_seq and P*(1-p)*r_sinq."""
    return ExpectedVerified(
        k_seq=p_budget * p_seq * y.r_seq,
        k_sinq=p_budget * (1.0 - p_seq) * y.r_sinq,
    )


ROUNDING_MODES = ("ceil-to-10", "ceil", "nearest")


@dataclass(frozen=True)
class MatchedBudget:
    exact: float
    suggested: int


def matched_budget(
    k_target: float, r_sinq: float, rounding: str = "ceil-to-10"
) -> MatchedBudget:
    """Reference budget for a pure-SINQ run matching k_target verified pairs."""
    if r_sinq <= 0:
        raise ZeroYield("r_sinq must be positive to match a budget")
    if rounding not in ROUNDING_MODES:
        raise ValueError(f"rounding must be one of {ROUNDING_MODES}")
    exact = k_target / r_sinq
    if rounding == "ceil-to-10":
        suggested = int(math.ceil(exact / 10.0) * 10)
    elif rounding == "ceil":
        suggested = int(math.ceil(exact))
    else:
        suggested = int(math.floor(exact + 0.5))
    return MatchedBudget(exact=exact, suggested=suggested)


@dataclass(frozen=True)
class PlanResult:
    spec: RegimeSpec
    solved_p_seq: float | None = None
    exact_budget: float | None = None


def plan_regime(
    objective: str,
    y: YieldEstimate,
    k_target: float | None = None,
    rounding: str = "ceil-to-10",
) -> PlanResult:
    """Derive a regime for an experimental objective from measured yields."""
    if objective == "main":
        return PlanResult(PRESETS["E0"])
    if objective == "max_volume":
        return PlanResult(PRESETS["E1"])
    if objective == "balanced_yield":
        denominator = y.r_seq + y.r_sinq
        if denominator <= 0:
            raise ZeroYield("cannot balance zero yields")
        solved = y.r_sinq / denominator
        return PlanResult(PRESETS["E2"], solved_p_seq=solved)
    if objective == "volume_control":
        if k_target is None:
            raise ValueError("volume_control requires k_target")
        budget = matched_budget(k_target, y.r_sinq, rounding)
        spec = replace(PRESETS["E3"], budget_p=budget.suggested)
        return PlanResult(spec, exact_budget=budget.exact)
    raise ValueError(f"unknown objective {objective!r}")


def k_table(
    y: YieldEstimate,
    budgets: Iterable[int] = (40, 100, 250, 500),
    p_values: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 0.96, 1.0),
) -> list[dict]:
    """Grid of expected verified counts, for the `plan` CLI output."""
    rows = []
    for budget in budgets:
        for p in p_values:
            expected = expected_verified(budget, p, y)
            rows.append(
                {
                    "budget_p": budget,
                    "p_seq": p,
                    "k_seq": expected.k_seq,
                    "k_sinq": expected.k_sinq,
                    "k_total": expected.k_total,
                }
            )
    return rows
