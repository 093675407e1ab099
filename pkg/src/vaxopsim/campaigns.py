"""Positive-campaign targeting strategies and per-step budget allocation.

Seven strategies plus a no-campaign baseline. Static strategies pick their
target set once at t=0 and keep it; dynamic ones resample every
update_interval steps from the agents still neutral at that moment. The
per-step budget mu_pos * N is split evenly over current targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigurationError
from .graph import Graph
from .opinion import NEUTRAL, OpinionState


class Strategy(str, Enum):
    NONE = "none"
    UNIF_RAND = "unif-rand"
    TARGT_RAND = "targt-rand"
    CNTRL = "cntrl"
    DYN_RAND = "dyn-rand"
    LOCL_INFO = "locl-info"
    ADV_LOCL_INFO = "adv-locl-info"
    ADV_MULT_LOCL_INFO = "adv-mult-locl-info"

    @property
    def is_static(self) -> bool:
        return self in (Strategy.TARGT_RAND, Strategy.CNTRL)

    @property
    def is_dynamic(self) -> bool:
        return self in (
            Strategy.DYN_RAND,
            Strategy.LOCL_INFO,
            Strategy.ADV_LOCL_INFO,
            Strategy.ADV_MULT_LOCL_INFO,
        )

    @property
    def is_targeted(self) -> bool:
        return self.is_static or self.is_dynamic


ADV_POOL_CHOICES = ("frontier", "all-neutral")


@dataclass(frozen=True)
class CampaignSpec:
    strategy: Strategy
    mu_pos: float = 0.0
    target_size: int | None = None  # T
    update_interval: int | None = None  # t_r, dynamic strategies only
    zeta: int | None = None  # adv-locl-info and adv-mult-locl-info
    z_target: int | None = None  # adv-mult-locl-info only
    # Candidate pool for the advanced scores: "frontier" restricts scoring to
    # neutral agents with at least one anti-vaccine neighbor (random fill-up
    # to T), "all-neutral" scores every neutral agent.
    adv_pool: str = "frontier"

    def __post_init__(self):
        if not 0.0 <= self.mu_pos <= 1.0:
            raise ConfigurationError(f"mu_pos must lie in [0, 1], got {self.mu_pos}")
        if self.adv_pool not in ADV_POOL_CHOICES:
            raise ConfigurationError(f"adv_pool must be one of {ADV_POOL_CHOICES}")
        if self.strategy.is_targeted:
            if self.target_size is None or self.target_size < 1:
                raise ConfigurationError(f"{self.strategy.value} requires a positive target_size")
        if self.strategy.is_dynamic:
            if self.update_interval is None or self.update_interval < 1:
                raise ConfigurationError(
                    f"{self.strategy.value} requires a positive update_interval"
                )
        if self.strategy in (Strategy.ADV_LOCL_INFO, Strategy.ADV_MULT_LOCL_INFO):
            if self.zeta is None or self.zeta < 0:
                raise ConfigurationError(f"{self.strategy.value} requires zeta >= 0")
        if self.strategy is Strategy.ADV_MULT_LOCL_INFO:
            if self.z_target is None or self.z_target < 0:
                raise ConfigurationError("adv-mult-locl-info requires z_target >= 0")

    def validate_for(self, n: int) -> None:
        if self.strategy.is_targeted and self.target_size > n:
            raise ConfigurationError(
                f"target_size {self.target_size} exceeds population {n}"
            )


def allocation(
    spec: CampaignSpec, members: np.ndarray | None, n: int
) -> tuple[np.ndarray, int]:
    """Per-agent positive rates for the current target set.

    Targeted strategies split the budget as mu_pos * n / |members| over the
    members, clamped to 1.0. Returns (rates, clamp_events) where clamp_events
    counts the member rates that hit the clamp.
    """
    if spec.strategy is Strategy.NONE:
        return np.zeros(n), 0
    if spec.strategy is Strategy.UNIF_RAND:
        return np.full(n, spec.mu_pos), 0
    rates = np.zeros(n)
    if members is None or len(members) == 0:
        return rates, 0
    per_member = spec.mu_pos * n / len(members)
    clamped = 0
    if per_member > 1.0:
        per_member = 1.0
        clamped = len(members)
    rates[members] = per_member
    return rates, clamped


def select_static(
    spec: CampaignSpec,
    graph: Graph,
    centrality: np.ndarray | None,
    rng: np.random.Generator,
) -> np.ndarray:
    """Choose the fixed target set at t=0 (population is all neutral then).

    TargtRand picks a uniform random subset; Cntrl takes the top target_size
    nodes by betweenness with ties at the cutoff broken uniformly at random.
    """
    t = spec.target_size
    if spec.strategy is Strategy.TARGT_RAND:
        members = rng.choice(graph.node_count, size=t, replace=False)
        return np.sort(members.astype(np.int64))
    if spec.strategy is Strategy.CNTRL:
        if centrality is None:
            raise ValueError("cntrl strategy needs centrality scores")
        return _top_scores_with_ties(
            np.arange(graph.node_count), -centrality, t, rng
        )
    raise ValueError(f"{spec.strategy.value} is not a static strategy")


def _top_scores_with_ties(
    candidates: np.ndarray, scores: np.ndarray, t: int, rng: np.random.Generator
) -> np.ndarray:
    """Take the t candidates with lowest scores, cutoff ties resolved randomly.

    candidates must be in ascending order so the tie draw is deterministic for
    a given stream.
    """
    if len(candidates) <= t:
        return np.sort(candidates)
    kth = np.partition(scores, t - 1)[t - 1]
    sure = candidates[scores < kth]
    tied = candidates[scores == kth]
    need = t - len(sure)
    picked = rng.choice(tied, size=need, replace=False)
    return np.sort(np.concatenate([sure, picked]))


def select_dynamic(
    spec: CampaignSpec,
    graph: Graph,
    state: OpinionState,
    step_index: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Resample the target set from the currently neutral agents.

    Invoked when step_index is a multiple of update_interval. At step 0 the
    initial targets are uniform random neutrals for every dynamic strategy;
    later refreshes apply the strategy's own rule. LoclInfo draws only from
    neutral agents with an anti-vaccine neighbor and returns a smaller set
    when that pool runs short (the budget then concentrates on it); the
    advanced scoring strategies instead top up with uniform random neutrals
    until target_size is reached. With fewer than target_size neutrals in
    total, all remaining neutrals are taken.
    """
    assert step_index % spec.update_interval == 0
    neutrals = state.neutral_indices()
    t = spec.target_size
    if neutrals.size == 0:
        return np.empty(0, dtype=np.int64)
    if neutrals.size <= t:
        return neutrals.astype(np.int64)

    if spec.strategy is Strategy.DYN_RAND or step_index == 0:
        return np.sort(rng.choice(neutrals, size=t, replace=False).astype(np.int64))

    frontier_mask = state.n_neg[neutrals] >= 1
    if spec.strategy is Strategy.LOCL_INFO:
        pool = neutrals[frontier_mask]
        if pool.size <= t:
            return pool.astype(np.int64)
        return np.sort(rng.choice(pool, size=t, replace=False).astype(np.int64))

    # advanced information-based scores
    if spec.adv_pool == "frontier":
        pool = neutrals[frontier_mask]
        rest = neutrals[~frontier_mask]
    else:
        pool = neutrals
        rest = np.empty(0, dtype=neutrals.dtype)
    scores = np.abs(state.n_neg[pool] - spec.zeta)
    if spec.strategy is Strategy.ADV_MULT_LOCL_INFO:
        degrees = graph.indptr[pool + 1] - graph.indptr[pool]
        n_neu = degrees - state.n_neg[pool] - state.n_pos[pool]
        scores = scores + np.abs(n_neu - spec.z_target)
    if pool.size >= t:
        return _top_scores_with_ties(pool, scores.astype(np.float64), t, rng)
    fill = rng.choice(rest, size=t - pool.size, replace=False)
    return np.sort(np.concatenate([pool, fill]).astype(np.int64))


class CampaignController:
    """Per-run driver: owns the target set, recomputes allocations on schedule.

    Counts clamp events and empty-target allocations so the harness can report
    them. All randomness comes from the caller's stream in a fixed order
    (selection first, then the step's exposure draws).
    """

    def __init__(
        self,
        spec: CampaignSpec,
        graph: Graph,
        centrality: np.ndarray | None = None,
    ):
        spec.validate_for(graph.node_count)
        self.spec = spec
        self.graph = graph
        self.centrality = centrality
        self.members: np.ndarray | None = None
        self.clamp_events = 0
        self.empty_target_events = 0
        self.retarget_count = 0
        self._rates: np.ndarray | None = None

    def allocations(self, step_index: int, state: OpinionState, rng: np.random.Generator) -> np.ndarray:
        spec = self.spec
        if not spec.strategy.is_targeted:
            if self._rates is None:
                self._rates, _ = allocation(spec, None, self.graph.node_count)
            return self._rates
        if spec.strategy.is_static:
            if self._rates is None:
                self.members = select_static(spec, self.graph, self.centrality, rng)
                self._rates, clamped = allocation(spec, self.members, self.graph.node_count)
                self.clamp_events += clamped
            return self._rates
        if step_index % spec.update_interval == 0:
            self.members = select_dynamic(spec, self.graph, state, step_index, rng)
            self.retarget_count += 1
            self._rates, clamped = allocation(spec, self.members, self.graph.node_count)
            self.clamp_events += clamped
            if self.members.size == 0:
                self.empty_target_events += 1
        return self._rates
