"""Independent brute-force oracles used to cross-check the fast paths.

Everything here favors directness over speed: plain loops, explicit
enumeration, no shared code with the implementations under test.
"""

from __future__ import annotations

from collections import deque
from itertools import combinations

import numpy as np

from .campaigns import CampaignSpec, Strategy
from .epidemic import EpidemicParams
from .graph import Graph


def brute_force_betweenness(graph: Graph) -> np.ndarray:
    """Betweenness by enumerating every shortest path of every ordered pair.

    Each interior node of a shortest path earns 1/(number of shortest paths
    for that pair); ordered-pair totals are halved to count unordered pairs
    once. Feasible for small graphs only.
    """
    n = graph.node_count
    adj = [list(graph.neighbors(i)) for i in range(n)]
    scores = np.zeros(n)
    for s in range(n):
        dist = _bfs_distances(adj, s, n)
        for t in range(n):
            if t == s or dist[t] < 0:
                continue
            paths = _all_shortest_paths(adj, dist, s, t)
            for path in paths:
                for v in path[1:-1]:
                    scores[v] += 1.0 / len(paths)
    return scores / 2.0


def _bfs_distances(adj, source, n):
    dist = [-1] * n
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _all_shortest_paths(adj, dist, s, t):
    """All shortest s-t paths, walked backward from t along decreasing dist."""
    paths = []
    stack = [(t, (t,))]
    while stack:
        v, tail = stack.pop()
        if v == s:
            paths.append(tail[::-1])
            continue
        for u in adj[v]:
            if dist[u] == dist[v] - 1:
                stack.append((u, tail + (u,)))
    return paths


def exact_sir_mean(
    graph: Graph, params: EpidemicParams, seed: int | None = None
) -> float:
    """Exact expected epidemic size by full Markov-chain enumeration.

    All graph nodes are treated as susceptible. With seed=None the result is
    averaged over the uniform choice of a single seed node (matching one
    initial infected drawn uniformly at random); otherwise the given node is
    the seed. Tractable for graphs of a handful of nodes only.
    """
    n = graph.node_count
    if n > 12:
        raise ValueError("state space grows as 3^n; refusing n > 12")
    adj = [list(graph.neighbors(i)) for i in range(n)]
    beta, gamma = params.beta, params.gamma
    cache: dict[tuple, float] = {}

    def expected_final(state: tuple) -> float:
        infected = [i for i in range(n) if state[i] == 1]
        if not infected:
            return float(sum(1 for x in state if x == 2))
        if state in cache:
            return cache[state]
        at_risk = []
        for i in range(n):
            if state[i] == 0:
                m = sum(1 for j in adj[i] if state[j] == 1)
                if m:
                    at_risk.append((i, 1.0 - (1.0 - beta) ** m))
        total = 0.0
        stay_prob = 0.0
        for k_inf in range(len(at_risk) + 1):
            for inf_set in combinations(range(len(at_risk)), k_inf):
                p_inf = 1.0
                for idx, (node, p) in enumerate(at_risk):
                    p_inf *= p if idx in inf_set else (1.0 - p)
                for k_rec in range(len(infected) + 1):
                    for rec_set in combinations(range(len(infected)), k_rec):
                        p_rec = gamma ** k_rec * (1.0 - gamma) ** (len(infected) - k_rec)
                        prob = p_inf * p_rec
                        if prob == 0.0:
                            continue
                        nxt = list(state)
                        for idx in inf_set:
                            nxt[at_risk[idx][0]] = 1
                        for idx in rec_set:
                            nxt[infected[idx]] = 2
                        nxt = tuple(nxt)
                        if nxt == state:
                            stay_prob += prob
                        else:
                            total += prob * expected_final(nxt)
        value = total / (1.0 - stay_prob)
        cache[state] = value
        return value

    if seed is not None:
        init = tuple(1 if i == seed else 0 for i in range(n))
        return expected_final(init)
    acc = 0.0
    for s in range(n):
        init = tuple(1 if i == s else 0 for i in range(n))
        acc += expected_final(init)
    return acc / n


class SelectionOracle:
    """Exhaustively derived description of every valid dynamic target set.

    The strategies involve random tie-breaking and random fill-up, so instead
    of a single expected set the oracle yields the partition (forced members,
    cutoff-tie candidates with slot count, fill candidates with slot count)
    against which a concrete selection can be verified exactly. With
    initial=True the set models the step-0 rule (uniform random neutrals).
    """

    def __init__(
        self, spec: CampaignSpec, graph: Graph, states: np.ndarray, initial: bool = False
    ):
        n = graph.node_count
        neutrals = [i for i in range(n) if states[i] == 0]
        n_neg = {
            i: sum(1 for j in graph.neighbors(i) if states[j] == -1) for i in neutrals
        }
        n_neu = {
            i: sum(1 for j in graph.neighbors(i) if states[j] == 0) for i in neutrals
        }
        t = spec.target_size
        self.forced: set[int] = set()
        self.tie_candidates: set[int] = set()
        self.tie_slots = 0
        self.fill_candidates: set[int] = set()
        self.fill_slots = 0

        if len(neutrals) <= t:
            self.forced = set(neutrals)
            return
        if spec.strategy is Strategy.DYN_RAND or initial:
            self.fill_candidates = set(neutrals)
            self.fill_slots = t
            return
        if spec.adv_pool == "frontier" or spec.strategy is Strategy.LOCL_INFO:
            pool = [i for i in neutrals if n_neg[i] >= 1]
        else:
            pool = list(neutrals)
        rest = [i for i in neutrals if i not in set(pool)]
        if spec.strategy is Strategy.LOCL_INFO:
            # no fill-up: the set shrinks to the pool when it runs short
            if len(pool) >= t:
                self.tie_candidates = set(pool)
                self.tie_slots = t
            else:
                self.forced = set(pool)
            return

        def score(i: int) -> int:
            g = abs(n_neg[i] - spec.zeta)
            if spec.strategy is Strategy.ADV_MULT_LOCL_INFO:
                g += abs(n_neu[i] - spec.z_target)
            return g

        if len(pool) < t:
            self.forced = set(pool)
            self.fill_candidates = set(rest)
            self.fill_slots = t - len(pool)
            return
        ordered = sorted(pool, key=score)
        cutoff = score(ordered[t - 1])
        self.forced = {i for i in pool if score(i) < cutoff}
        self.tie_candidates = {i for i in pool if score(i) == cutoff}
        self.tie_slots = t - len(self.forced)

    @property
    def size(self) -> int:
        return len(self.forced) + self.tie_slots + self.fill_slots

    def accepts(self, selected) -> bool:
        """True when the concrete set is reachable under the stated rules."""
        chosen = set(int(x) for x in selected)
        if len(chosen) != self.size:
            return False
        if not self.forced <= chosen:
            return False
        extra = chosen - self.forced
        ties = extra & self.tie_candidates
        fills = extra - self.tie_candidates
        return (
            len(ties) == self.tie_slots
            and len(fills) == self.fill_slots
            and fills <= self.fill_candidates
        )
