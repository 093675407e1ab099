"""Vaccination and discrete-time SIR spread among anti-vaccine agents.

Vaccination happens after the opinion stage: every non-negative agent is
immunized (full immunity), negative agents stay susceptible. The epidemic is
then seeded among susceptible agents and iterated synchronously until no
infected remain. Epidemic size is the number of agents ever infected.

Per step, transmission comes before recovery: every currently infected agent
attempts to infect each susceptible neighbor independently with probability
beta, then every agent that was already infected before this step recovers
with probability gamma. Newly infected agents cannot recover in their
infection step but do transmit from the next step on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .graph import Graph
from .opinion import NEGATIVE

SUSCEPTIBLE = np.int8(0)
INFECTED = np.int8(1)
RECOVERED = np.int8(2)
VACCINATED = np.int8(3)


@dataclass(frozen=True)
class EpidemicParams:
    beta: float
    gamma: float
    initial_infected: int = 1

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigurationError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.initial_infected < 1:
            raise ConfigurationError(f"initial_infected must be >= 1, got {self.initial_infected}")


@dataclass
class RunOutcome:
    """Result of one SIR replicate."""

    epidemic_size: int
    vaccinated_count: int
    anti_vaccine_count: int
    no_seed: bool = False
    cap_hit: bool = False  # inherited from a flagged opinion stage
    # Per-susceptible event log (subgraph coordinates), only kept on request.
    node_ids: np.ndarray | None = None
    infection_step: np.ndarray | None = None
    recovery_step: np.ndarray | None = None

    @property
    def epidemic_fraction(self) -> float:
        """Epidemic size as a fraction of the whole population."""
        n = self.vaccinated_count + self.anti_vaccine_count
        return self.epidemic_size / n if n else 0.0


def vaccinate(opinion_states: np.ndarray) -> np.ndarray:
    """Map final opinion states to disease states.

    Neutral and positive agents are vaccinated, negative agents refuse and
    stay susceptible.
    """
    disease = np.full(opinion_states.shape[0], VACCINATED, dtype=np.int8)
    disease[opinion_states == NEGATIVE] = SUSCEPTIBLE
    return disease


@dataclass(frozen=True)
class SusceptibleSubgraph:
    """CSR restriction of the contact network to susceptible agents.

    Vaccinated agents neither transmit nor receive, so the epidemic lives
    entirely on this subgraph. Built once per network and shared across that
    network's SIR replicates.
    """

    node_ids: np.ndarray  # original node index per subgraph node
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def n(self) -> int:
        return self.node_ids.shape[0]


def susceptible_subgraph(graph: Graph, disease_states: np.ndarray) -> SusceptibleSubgraph:
    node_ids = np.flatnonzero(disease_states == SUSCEPTIBLE)
    local = np.full(graph.node_count, -1, dtype=np.int64)
    local[node_ids] = np.arange(node_ids.size)
    indptr = np.zeros(node_ids.size + 1, dtype=np.int64)
    chunks = []
    for k, v in enumerate(node_ids):
        nbrs = local[graph.neighbors(v)]
        nbrs = nbrs[nbrs >= 0]
        indptr[k + 1] = indptr[k] + nbrs.size
        chunks.append(nbrs)
    indices = (
        np.concatenate(chunks).astype(np.int32) if chunks else np.empty(0, dtype=np.int32)
    )
    return SusceptibleSubgraph(node_ids=node_ids, indptr=indptr, indices=indices)


@njit(cache=True)
def _sir_kernel(indptr, indices, n, seeds, beta, gamma, gen, infection_step, recovery_step):  # pragma: no cover
    # state: 0 susceptible, 1 infected, 2 recovered
    state = np.zeros(n, np.int8)
    pressure = np.zeros(n, np.int32)  # infected-neighbor count
    newbuf = np.empty(n, np.int64)
    recbuf = np.empty(n, np.int64)
    infected = 0
    for k in range(seeds.shape[0]):
        s = seeds[k]
        state[s] = 1
        infection_step[s] = 0
        infected += 1
        for e in range(indptr[s], indptr[s + 1]):
            pressure[indices[e]] += 1
    t = 0
    while infected > 0:
        t += 1
        # Transmission draws in ascending node order, one aggregated draw per
        # at-risk susceptible: with m infected neighbors and independent
        # per-edge attempts, infection probability is 1 - (1-beta)^m.
        n_new = 0
        for i in range(n):
            if state[i] == 0 and pressure[i] > 0:
                p = 1.0 - (1.0 - beta) ** pressure[i]
                if gen.random() < p:
                    newbuf[n_new] = i
                    n_new += 1
        # Recovery draws for agents infected before this step.
        n_rec = 0
        for i in range(n):
            if state[i] == 1:
                if gen.random() < gamma:
                    recbuf[n_rec] = i
                    n_rec += 1
        for k in range(n_new):
            v = newbuf[k]
            state[v] = 1
            infection_step[v] = t
            infected += 1
            for e in range(indptr[v], indptr[v + 1]):
                pressure[indices[e]] += 1
        for k in range(n_rec):
            v = recbuf[k]
            state[v] = 2
            recovery_step[v] = t
            infected -= 1
            for e in range(indptr[v], indptr[v + 1]):
                pressure[indices[e]] -= 1
    ever = 0
    for i in range(n):
        if state[i] == 2:
            ever += 1
    return ever


def run_sir_on_subgraph(
    sub: SusceptibleSubgraph,
    params: EpidemicParams,
    rng: np.random.Generator,
    vaccinated_count: int,
    record_events: bool = False,
) -> RunOutcome:
    """Run one SIR replicate on a prebuilt susceptible subgraph."""
    n = sub.n
    if n == 0:
        return RunOutcome(
            epidemic_size=0,
            vaccinated_count=vaccinated_count,
            anti_vaccine_count=0,
            no_seed=True,
        )
    seeds = rng.choice(n, size=min(params.initial_infected, n), replace=False)
    seeds = np.sort(seeds).astype(np.int64)
    infection_step = np.full(n, -1, dtype=np.int64)
    recovery_step = np.full(n, -1, dtype=np.int64)
    size = _sir_kernel(
        sub.indptr,
        sub.indices,
        n,
        seeds,
        params.beta,
        params.gamma,
        rng,
        infection_step,
        recovery_step,
    )
    outcome = RunOutcome(
        epidemic_size=int(size),
        vaccinated_count=vaccinated_count,
        anti_vaccine_count=n,
    )
    if record_events:
        outcome.node_ids = sub.node_ids
        outcome.infection_step = infection_step
        outcome.recovery_step = recovery_step
    return outcome


def run_sir(
    graph: Graph,
    disease_states: np.ndarray,
    params: EpidemicParams,
    rng: np.random.Generator,
    record_events: bool = False,
) -> RunOutcome:
    """Seed and run the SIR process to absorption, returning the epidemic size.

    Seeds initial_infected uniform random susceptible agents (all of them if
    fewer exist; none exist gives epidemic size 0 with the no-seed flag).
    """
    vaccinated_count = int(np.count_nonzero(disease_states == VACCINATED))
    sub = susceptible_subgraph(graph, disease_states)
    return run_sir_on_subgraph(sub, params, rng, vaccinated_count, record_events)
