"""Dual-contagion opinion diffusion with an absorbing threshold rule.

Agents start neutral and accumulate negative/positive exposure counters from
general (campaign) sources and from opinionated neighbors. Once the counter
difference reaches the threshold the agent adopts that opinion for good.

Updates are synchronous: all exposures in a step are drawn against the state
snapshot from the start of the step, then the threshold rule is applied to
every neutral agent at once. An agent flipping at step t therefore exerts no
social influence until step t+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .graph import Graph

NEUTRAL = np.int8(0)
NEGATIVE = np.int8(-1)
POSITIVE = np.int8(1)

# Fallback step cap for runs that can never absorb (mu_neg == 0 misconfiguration).
FALLBACK_STEP_CAP = 100_000


@dataclass(frozen=True)
class OpinionParams:
    mu_neg: float
    omega_neg: float
    omega_pos: float
    theta: int
    tau: float  # positive integer, or math.inf to run to absorption

    def __post_init__(self):
        for name in ("mu_neg", "omega_neg", "omega_pos"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {v}")
        if self.theta < 1:
            raise ConfigurationError(f"theta must be >= 1, got {self.theta}")
        if self.tau != math.inf and (self.tau < 1 or int(self.tau) != self.tau):
            raise ConfigurationError(f"tau must be a positive integer or inf, got {self.tau}")

    @property
    def step_cap(self) -> int:
        """Safety cap for run-to-absorption runs: 100*ceil(theta/mu_neg)."""
        if self.mu_neg > 0.0:
            return 100 * math.ceil(self.theta / self.mu_neg)
        return FALLBACK_STEP_CAP


class OpinionState:
    """Per-agent opinion states plus exposure and neighbor counters.

    Stored as parallel arrays. n_neg/n_pos track each agent's number of
    negative/positive neighbors under the current snapshot and are kept in
    sync by apply_flips; campaign selection reads them directly.
    """

    __slots__ = ("states", "phi_neg", "phi_pos", "n_neg", "n_pos", "neutral_count")

    def __init__(self, n: int):
        self.states = np.zeros(n, dtype=np.int8)
        self.phi_neg = np.zeros(n, dtype=np.int32)
        self.phi_pos = np.zeros(n, dtype=np.int32)
        self.n_neg = np.zeros(n, dtype=np.int32)
        self.n_pos = np.zeros(n, dtype=np.int32)
        self.neutral_count = n

    @property
    def n(self) -> int:
        return self.states.shape[0]

    def counts(self) -> tuple[int, int, int]:
        """(neutral, positive, negative) agent counts."""
        neg = int(np.count_nonzero(self.states == NEGATIVE))
        pos = int(np.count_nonzero(self.states == POSITIVE))
        return self.n - neg - pos, pos, neg

    def neutral_indices(self) -> np.ndarray:
        return np.flatnonzero(self.states == NEUTRAL)


@njit(cache=True)
def _bump_neighbor_counts(indptr, indices, nodes, counts):  # pragma: no cover
    for k in range(nodes.shape[0]):
        v = nodes[k]
        for e in range(indptr[v], indptr[v + 1]):
            counts[indices[e]] += 1


def apply_flips(graph: Graph, state: OpinionState, new_neg: np.ndarray, new_pos: np.ndarray) -> None:
    """Commit newly adopted agents and refresh neighbor counters."""
    if new_neg.size:
        state.states[new_neg] = NEGATIVE
        _bump_neighbor_counts(graph.indptr, graph.indices, new_neg, state.n_neg)
    if new_pos.size:
        state.states[new_pos] = POSITIVE
        _bump_neighbor_counts(graph.indptr, graph.indices, new_pos, state.n_pos)
    state.neutral_count -= int(new_neg.size) + int(new_pos.size)


def step(
    graph: Graph,
    state: OpinionState,
    alloc: np.ndarray,
    params: OpinionParams,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance the opinion process by one synchronous step.

    Draw order is fixed for reproducibility: general-negative, general-positive,
    then social (negative before positive). General draws are consumed for every
    agent, opinionated ones included, so streams stay aligned across campaign
    variants; draws against non-neutral agents are discarded. Social exposures
    are independent per opinionated-neighbor edge, so an agent's increment from
    each side is binomial in its snapshot neighbor count.

    Returns (newly_negative, newly_positive) index arrays; state is updated
    in place, including neighbor counters.
    """
    neutral = state.states == NEUTRAL

    u = rng.random(state.n)
    gained = neutral & (u < params.mu_neg)
    state.phi_neg[gained] += 1

    u = rng.random(state.n)
    gained = neutral & (u < alloc)
    state.phi_pos[gained] += 1

    if params.omega_neg > 0.0:
        exposed = np.flatnonzero(neutral & (state.n_neg > 0))
        if exposed.size:
            state.phi_neg[exposed] += rng.binomial(state.n_neg[exposed], params.omega_neg)
    if params.omega_pos > 0.0:
        exposed = np.flatnonzero(neutral & (state.n_pos > 0))
        if exposed.size:
            state.phi_pos[exposed] += rng.binomial(state.n_pos[exposed], params.omega_pos)

    idx = np.flatnonzero(neutral)
    diff = state.phi_neg[idx] - state.phi_pos[idx]
    new_neg = idx[diff >= params.theta]
    new_pos = idx[diff <= -params.theta]
    apply_flips(graph, state, new_neg, new_pos)
    return new_neg, new_pos


@dataclass
class OpinionTrace:
    """Per-step population counts plus the final per-agent states.

    Row t holds the counts after t steps; row 0 is the all-neutral start.
    """

    steps: np.ndarray
    neutral: np.ndarray
    positive: np.ndarray
    negative: np.ndarray
    final_states: np.ndarray
    cap_hit: bool = False
    steps_run: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("step,neutral,positive,negative\n")
            for t, ne, po, ng in zip(self.steps, self.neutral, self.positive, self.negative):
                fh.write(f"{t},{ne},{po},{ng}\n")


def run_opinion_stage(
    graph: Graph,
    params: OpinionParams,
    campaign,
    rng: np.random.Generator,
) -> OpinionTrace:
    """Run the opinion process from an all-neutral start to its stopping point.

    The campaign controller is consulted before each step for that step's
    per-agent positive allocation (dynamic strategies retarget there). Stops
    after tau steps, or with tau=inf when no neutral agents remain; a safety
    cap guards non-absorbing configurations and flags the run when hit.
    """
    state = OpinionState(graph.node_count)
    counts = [(graph.node_count, 0, 0)]
    cap = params.step_cap
    cap_hit = False
    t = 0
    while True:
        if params.tau != math.inf:
            if t >= params.tau:
                break
        else:
            if state.neutral_count == 0:
                break
            if t >= cap:
                cap_hit = True
                break
        alloc = campaign.allocations(t, state, rng)
        step(graph, state, alloc, params, rng)
        counts.append(state.counts())
        t += 1

    arr = np.asarray(counts, dtype=np.int64)
    return OpinionTrace(
        steps=np.arange(arr.shape[0], dtype=np.int64),
        neutral=arr[:, 0],
        positive=arr[:, 1],
        negative=arr[:, 2],
        final_states=state.states,
        cap_hit=cap_hit,
        steps_run=t,
    )
