"""Rubric reward stack and RL reference math.

Ternary verdicts collapse to binary reward signals asymmetrically: positive
rubrics pay out only on full satisfaction, negative rubrics penalize any
degree of presence. The advantage/objective functions are verifiable
reference implementations (importance ratio, GAE, clipped surrogate), not a
training loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from drkit.rubrics import RubricRole, RubricSpec


class TernaryVerdict(str, Enum):
    NOT_SATISFIED = "not_satisfied"
    PARTIALLY_SATISFIED = "partially_satisfied"
    FULLY_SATISFIED = "fully_satisfied"


_TERNARY_SCORES = {
    TernaryVerdict.NOT_SATISFIED: 0.0,
    TernaryVerdict.PARTIALLY_SATISFIED: 0.5,
    TernaryVerdict.FULLY_SATISFIED: 1.0,
}


def ternary_score(verdict: TernaryVerdict) -> float:
    """not -> 0, partial -> 0.5, full -> 1."""
    return _TERNARY_SCORES[verdict]


def strict_map(verdict: TernaryVerdict, role: RubricRole) -> int:
    """Asymmetric binary collapse of a ternary verdict.

    Positive roles (explicit/implicit): 1 only when fully satisfied.
    Negative role: 0 only when not satisfied; any presence of the flaw is 1.
    """
    if role is RubricRole.NEGATIVE:
        return 0 if verdict is TernaryVerdict.NOT_SATISFIED else 1
    return 1 if verdict is TernaryVerdict.FULLY_SATISFIED else 0


@dataclass(frozen=True)
class RubricJudgment:
    rubric: RubricSpec
    verdict: TernaryVerdict
    rationale: str = ""

    @property
    def binary(self) -> int:
        return strict_map(self.verdict, self.rubric.role)


class NoPositiveRubricError(ValueError):
    """Aggregation is undefined without at least one positive-weight rubric."""


def aggregate_reward(judgments: list[RubricJudgment]) -> float:
    """Weighted binary reward, normalized by the positive-weight mass.

    R = sum_i w_i * b_i / sum_{i: w_i > 0} w_i, clamped to [-1, 1]. With every
    positive rubric satisfied and no negative triggered this is exactly 1.
    """
    pos_mass = sum(j.rubric.weight for j in judgments if j.rubric.weight > 0)
    if pos_mass <= 0:
        raise NoPositiveRubricError("need at least one positive-weight rubric")
    total = sum(j.rubric.weight * j.binary for j in judgments)
    return max(-1.0, min(1.0, total / pos_mass))


def importance_ratio(logp_new: float, logp_old: float) -> float:
    """r = pi_new(a|s) / pi_old(a|s), computed from log-probabilities."""
    return math.exp(logp_new - logp_old)


@dataclass
class AdvantageTrace:
    """Per-step rewards and values for advantage estimation.

    values has one more entry than rewards: values[t] is V(s_t) and the last
    entry is the terminal bootstrap V(s_{T+1}) (0 for true terminals).
    """

    rewards: list[float]
    values: list[float]
    gamma: float = 1.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        if len(self.values) != len(self.rewards) + 1:
            raise ValueError(
                f"length mismatch: {len(self.rewards)} rewards need "
                f"{len(self.rewards) + 1} values, got {len(self.values)}"
            )

    def deltas(self) -> list[float]:
        """TD residuals: delta_t = r_t + gamma * V(s_{t+1}) - V(s_t)."""
        return [
            r + self.gamma * self.values[t + 1] - self.values[t]
            for t, r in enumerate(self.rewards)
        ]


def gae_advantages(trace: AdvantageTrace) -> list[float]:
    """A_t = sum_{l=0}^{T-t} (gamma*lambda)^l * delta_{t+l}.

    Computed by the standard backward recursion A_t = delta_t + gamma*lambda*A_{t+1},
    which is algebraically identical to the definition. At gamma = lambda = 1 the
    sum telescopes to sum_{k>=t} r_k + V(s_{T+1}) - V(s_t).
    """
    deltas = trace.deltas()
    decay = trace.gamma * trace.lam
    advantages = [0.0] * len(deltas)
    acc = 0.0
    for t in range(len(deltas) - 1, -1, -1):
        acc = deltas[t] + decay * acc
        advantages[t] = acc
    return advantages


@dataclass
class PpoBatch:
    logp_old: list[float]
    logp_new: list[float]
    advantages: list[float]
    epsilon: float = 0.2

    def __post_init__(self) -> None:
        if not (len(self.logp_old) == len(self.logp_new) == len(self.advantages)):
            raise ValueError("logp_old, logp_new, and advantages must have equal length")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")


def ppo_clipped_objective(batch: PpoBatch) -> float:
    """Mean over steps of min(r_t * A_t, clip(r_t, 1-eps, 1+eps) * A_t)."""
    if not batch.advantages:
        return 0.0
    lo, hi = 1.0 - batch.epsilon, 1.0 + batch.epsilon
    total = 0.0
    for lp_old, lp_new, adv in zip(batch.logp_old, batch.logp_new, batch.advantages):
        r = importance_ratio(lp_new, lp_old)
        clipped = min(max(r, lo), hi)
        total += min(r * adv, clipped * adv)
    return total / len(batch.advantages)
