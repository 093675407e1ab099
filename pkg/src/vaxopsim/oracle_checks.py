"""Runnable oracle cross-checks behind the `vaxopsim oracle` subcommand.

Each check compares a production code path with the corresponding brute-force
oracle and reports one line per suite; the test suite reuses these helpers at
larger sample sizes.
"""

from __future__ import annotations

import numpy as np

from .campaigns import CampaignSpec, Strategy, select_dynamic
from .epidemic import EpidemicParams, SUSCEPTIBLE, run_sir
from .graph import Graph, betweenness, generate_watts_strogatz
from .opinion import NEGATIVE, NEUTRAL, OpinionState, POSITIVE, apply_flips
from .oracles import SelectionOracle, brute_force_betweenness, exact_sir_mean


def random_graph(rng: np.random.Generator, max_n: int = 50) -> Graph:
    """Random Gilbert graph (possibly disconnected) for oracle comparisons."""
    n = int(rng.integers(3, max_n + 1))
    p = float(rng.uniform(0.04, 0.3))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return Graph.from_edges(n, edges)


def check_betweenness(seed: int, n_graphs: int, echo=print) -> int:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_graphs):
        graph = random_graph(rng)
        fast = betweenness(graph)
        slow = brute_force_betweenness(graph)
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    ok = worst <= 1e-9
    echo(f"betweenness vs brute force on {n_graphs} graphs: max |diff| = {worst:.2e} "
         f"({'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def check_sir(seed: int, runs: int, echo=print) -> int:
    graph = path_graph(4)
    params = EpidemicParams(beta=0.1, gamma=0.1, initial_infected=1)
    exact = exact_sir_mean(graph, params)
    states = np.full(graph.node_count, SUSCEPTIBLE, dtype=np.int8)
    sizes = np.empty(runs, dtype=np.float64)
    base = np.random.SeedSequence(seed)
    for i, child in enumerate(base.spawn(runs)):
        rng = np.random.Generator(np.random.PCG64(child))
        sizes[i] = run_sir(graph, states.copy(), params, rng).epidemic_size
    mean = float(np.mean(sizes))
    se = float(np.std(sizes, ddof=1)) / np.sqrt(runs)
    ok = abs(mean - exact) <= 3 * se
    echo(f"SIR mean on 4-node path: simulated {mean:.4f} vs exact {exact:.4f} "
         f"(3 SE = {3 * se:.4f}, {'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def random_opinion_state(
    graph: Graph, rng: np.random.Generator, frac_neg=0.3, frac_pos=0.2
) -> OpinionState:
    """State with a random mix of opinions, neighbor counters consistent."""
    state = OpinionState(graph.node_count)
    roll = rng.random(graph.node_count)
    new_neg = np.flatnonzero(roll < frac_neg)
    new_pos = np.flatnonzero((roll >= frac_neg) & (roll < frac_neg + frac_pos))
    apply_flips(graph, state, new_neg, new_pos)
    return state


def selection_cases(seed: int, cases: int):
    """Randomized 20-node scenarios covering the dynamic strategies."""
    rng = np.random.default_rng(seed)
    specs = [
        CampaignSpec(Strategy.DYN_RAND, 0.001, target_size=5, update_interval=1),
        CampaignSpec(Strategy.LOCL_INFO, 0.001, target_size=5, update_interval=1),
        CampaignSpec(Strategy.ADV_LOCL_INFO, 0.001, target_size=5, update_interval=1, zeta=1),
        CampaignSpec(
            Strategy.ADV_MULT_LOCL_INFO, 0.001, target_size=5, update_interval=1,
            zeta=1, z_target=3,
        ),
        CampaignSpec(
            Strategy.ADV_MULT_LOCL_INFO, 0.001, target_size=6, update_interval=1,
            zeta=2, z_target=2, adv_pool="all-neutral",
        ),
    ]
    for case in range(cases):
        graph = generate_watts_strogatz(20, 4, 0.2, rng)
        state = random_opinion_state(graph, rng, frac_neg=rng.uniform(0.1, 0.5),
                                     frac_pos=rng.uniform(0.0, 0.3))
        yield case, graph, state, specs[case % len(specs)], rng


def check_selection(seed: int, cases: int, echo=print) -> int:
    failures = 0
    for case, graph, state, spec, rng in selection_cases(seed, cases):
        selected = select_dynamic(spec, graph, state, spec.update_interval, rng)
        oracle = SelectionOracle(spec, graph, np.asarray(state.states))
        if not oracle.accepts(selected):
            failures += 1
            echo(f"selection case {case} ({spec.strategy.value}): FAIL")
    echo(f"target selection vs exhaustive oracle on {cases} scenarios: "
         f"{cases - failures}/{cases} ok")
    return failures
