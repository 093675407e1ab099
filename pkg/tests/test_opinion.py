"""Opinion diffusion: threshold rule, synchronicity, stage invariants."""

import math

import numpy as np
import pytest

from vaxopsim.campaigns import CampaignController, CampaignSpec, Strategy
from vaxopsim.graph import Graph, generate_watts_strogatz
from vaxopsim.opinion import (
    NEGATIVE,
    NEUTRAL,
    POSITIVE,
    OpinionParams,
    OpinionState,
    apply_flips,
    run_opinion_stage,
    step,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def isolated(n=1):
    return Graph.from_adjacency([set() for _ in range(n)])


def none_controller(graph):
    return CampaignController(CampaignSpec(Strategy.NONE), graph)


class TestStep:
    def test_deterministic_counter_growth_flips_at_theta(self):
        g = isolated()
        state = OpinionState(1)
        params = OpinionParams(mu_neg=1.0, omega_neg=0.0, omega_pos=0.0, theta=2, tau=10)
        alloc = np.zeros(1)
        new_neg, _ = step(g, state, alloc, params, rng())
        assert new_neg.size == 0 and state.states[0] == NEUTRAL
        new_neg, _ = step(g, state, alloc, params, rng())
        assert list(new_neg) == [0] and state.states[0] == NEGATIVE

    def test_balanced_counters_stay_neutral(self):
        g = isolated()
        state = OpinionState(1)
        state.phi_neg[0] = 1
        state.phi_pos[0] = 1
        params = OpinionParams(mu_neg=0.0, omega_neg=0.0, omega_pos=0.0, theta=2, tau=10)
        step(g, state, np.zeros(1), params, rng())
        assert state.states[0] == NEUTRAL

    def test_synchronicity_on_three_node_path(self):
        # center negative, omega=1: both ends flip at step 2, never at step 1
        params = OpinionParams(mu_neg=0.0, omega_neg=1.0, omega_pos=0.0, theta=2, tau=10)
        for seed in range(10):
            g = Graph.from_edges(3, [(0, 1), (1, 2)])
            state = OpinionState(3)
            apply_flips(g, state, np.array([1]), np.array([], dtype=np.int64))
            new_neg, _ = step(g, state, np.zeros(3), params, rng(seed))
            assert new_neg.size == 0
            new_neg, _ = step(g, state, np.zeros(3), params, rng(seed + 100))
            assert sorted(new_neg) == [0, 2]

    def test_newly_flipped_exert_no_influence_within_step(self):
        # chain 0-1-2 with 0 negative: node 2 must not see node 1's flip early
        g = Graph.from_edges(3, [(0, 1), (1, 2)])
        state = OpinionState(3)
        apply_flips(g, state, np.array([0]), np.array([], dtype=np.int64))
        params = OpinionParams(mu_neg=0.0, omega_neg=1.0, omega_pos=0.0, theta=1, tau=10)
        new_neg, _ = step(g, state, np.zeros(3), params, rng())
        assert list(new_neg) == [1]
        new_neg, _ = step(g, state, np.zeros(3), params, rng(1))
        assert list(new_neg) == [2]

    def test_non_neutral_agents_frozen(self):
        g = isolated(3)
        state = OpinionState(3)
        apply_flips(g, state, np.array([0]), np.array([2]))
        params = OpinionParams(mu_neg=1.0, omega_neg=0.0, omega_pos=0.0, theta=1, tau=10)
        step(g, state, np.ones(3), params, rng())
        assert state.phi_neg[0] == 0 and state.phi_pos[2] == 0
        assert state.states[0] == NEGATIVE and state.states[2] == POSITIVE


class TestRunStage:
    def test_no_exposure_sources_stays_all_neutral(self):
        g = generate_watts_strogatz(50, 4, 0.1, rng())
        params = OpinionParams(mu_neg=0.0, omega_neg=0.0, omega_pos=0.0, theta=2, tau=30)
        trace = run_opinion_stage(g, params, none_controller(g), rng(1))
        assert trace.neutral[-1] == 50 and trace.steps_run == 30
        assert not trace.cap_hit

    def test_negative_only_absorbs_everyone(self):
        g = generate_watts_strogatz(60, 4, 0.1, rng())
        params = OpinionParams(mu_neg=0.05, omega_neg=0.0, omega_pos=0.0, theta=2, tau=math.inf)
        trace = run_opinion_stage(g, params, none_controller(g), rng(2))
        assert trace.negative[-1] == 60
        assert np.all(trace.final_states == NEGATIVE)

    def test_population_conservation_every_step(self):
        g = generate_watts_strogatz(80, 6, 0.05, rng())
        params = OpinionParams(mu_neg=0.01, omega_neg=0.05, omega_pos=0.05, theta=2, tau=200)
        ctrl = CampaignController(CampaignSpec(Strategy.UNIF_RAND, mu_pos=0.01), g)
        trace = run_opinion_stage(g, params, ctrl, rng(3))
        totals = trace.neutral + trace.positive + trace.negative
        assert np.all(totals == 80)

    def test_adopter_counts_monotone(self):
        g = generate_watts_strogatz(80, 6, 0.05, rng())
        params = OpinionParams(mu_neg=0.01, omega_neg=0.05, omega_pos=0.05, theta=2, tau=200)
        ctrl = CampaignController(CampaignSpec(Strategy.UNIF_RAND, mu_pos=0.01), g)
        trace = run_opinion_stage(g, params, ctrl, rng(4))
        assert np.all(np.diff(trace.negative) >= 0)
        assert np.all(np.diff(trace.positive) >= 0)

    def test_safety_cap_flags_non_absorbing_run(self, monkeypatch):
        monkeypatch.setattr("vaxopsim.opinion.FALLBACK_STEP_CAP", 50)
        g = isolated(5)
        params = OpinionParams(mu_neg=0.0, omega_neg=0.0, omega_pos=0.0, theta=2, tau=math.inf)
        trace = run_opinion_stage(g, params, none_controller(g), rng(5))
        assert trace.cap_hit and trace.steps_run == 50

    def test_trace_csv_round_trip(self, tmp_path):
        g = generate_watts_strogatz(40, 4, 0.1, rng())
        params = OpinionParams(mu_neg=0.02, omega_neg=0.05, omega_pos=0.05, theta=2, tau=25)
        trace = run_opinion_stage(g, params, none_controller(g), rng(6))
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        rows = path.read_text().strip().split("\n")
        assert rows[0] == "step,neutral,positive,negative"
        assert len(rows) == trace.steps.size + 1
        assert rows[1] == "0,40,0,0"


class TestInvariantSuite:
    """Randomized step invariants: absorbing states, conservation, quiescence."""

    def test_randomized_steps_preserve_invariants(self):
        r = rng(123)
        checked = 0
        for _ in range(40):
            n = int(r.integers(20, 60))
            g = generate_watts_strogatz(n, 4, float(r.uniform(0, 0.5)), r)
            params = OpinionParams(
                mu_neg=float(r.uniform(0, 0.2)),
                omega_neg=float(r.uniform(0, 0.3)),
                omega_pos=float(r.uniform(0, 0.3)),
                theta=int(r.integers(1, 4)),
                tau=1000,
            )
            state = OpinionState(n)
            alloc = np.full(n, float(r.uniform(0, 0.2)))
            for _ in range(25):
                before = state.states.copy()
                phi_neg_before = state.phi_neg.copy()
                phi_pos_before = state.phi_pos.copy()
                step(g, state, alloc, params, r)
                changed = before != state.states
                assert np.all(before[changed] == NEUTRAL), "only neutral agents flip"
                assert np.all(state.phi_neg >= phi_neg_before)
                assert np.all(state.phi_pos >= phi_pos_before)
                frozen = before != NEUTRAL
                assert np.array_equal(state.phi_neg[frozen], phi_neg_before[frozen])
                assert np.array_equal(state.phi_pos[frozen], phi_pos_before[frozen])
                neutral = state.states == NEUTRAL
                diff = state.phi_neg[neutral] - state.phi_pos[neutral]
                assert np.all(np.abs(diff) < params.theta), "post-update quiescence"
                # neighbor counters stay consistent with states
                for v in r.integers(0, n, size=3):
                    nbrs = g.neighbors(int(v))
                    assert state.n_neg[v] == np.sum(state.states[nbrs] == NEGATIVE)
                    assert state.n_pos[v] == np.sum(state.states[nbrs] == POSITIVE)
                checked += 1
        assert checked == 1000

    def test_sign_symmetry_distributional(self):
        # swapping mu-/mu+ and omega-/omega+ mirrors the outcome distribution
        g = generate_watts_strogatz(150, 6, 0.05, rng(9))
        reps = 120
        neg_counts = np.empty(reps)
        pos_counts = np.empty(reps)
        for i in range(reps):
            params = OpinionParams(mu_neg=0.004, omega_neg=0.05, omega_pos=0.02, theta=2, tau=150)
            ctrl = CampaignController(CampaignSpec(Strategy.UNIF_RAND, mu_pos=0.001), g)
            trace = run_opinion_stage(g, params, ctrl, rng(1000 + i))
            neg_counts[i] = trace.negative[-1]
            mirrored = OpinionParams(mu_neg=0.001, omega_neg=0.02, omega_pos=0.05, theta=2, tau=150)
            ctrl = CampaignController(CampaignSpec(Strategy.UNIF_RAND, mu_pos=0.004), g)
            trace = run_opinion_stage(g, mirrored, ctrl, rng(5000 + i))
            pos_counts[i] = trace.positive[-1]
        se = math.sqrt(neg_counts.var(ddof=1) / reps + pos_counts.var(ddof=1) / reps)
        assert abs(neg_counts.mean() - pos_counts.mean()) < 3 * se + 1e-9
