"""Acceptance suite: desk-scale benchmark scenarios, oracles, determinism.

Every simulation experiment here is driven by a TOML file from configs/, so
each scenario is reproducible from the CLI without code changes. One PASS or
FAIL line is printed per criterion (visible with `pytest -s` or in failure
output). Reference magnitudes and tolerances are fixed below; structural
assertions (orderings, interior optimum, monotonicity) are checked with 95%
confidence separation.
"""

from __future__ import annotations

import math
import subprocess
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from vaxopsim.campaigns import Strategy
from vaxopsim.config import load_config
from vaxopsim.epidemic import SUSCEPTIBLE, EpidemicParams, run_sir
from vaxopsim.graph import betweenness, generate_watts_strogatz
from vaxopsim.harness import run_experiment, seed_schedule
from vaxopsim.opinion import NEGATIVE, NEUTRAL, OpinionParams, OpinionState, step
from vaxopsim.oracle_checks import path_graph, random_graph, selection_cases
from vaxopsim.oracles import SelectionOracle, brute_force_betweenness, exact_sir_mean

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
THREADS = 2

_cache: dict = {}


def results_for(name: str, tmp_factory):
    """Run (once per session) the configs/accept_<name>.toml experiment."""
    if name not in _cache:
        config = load_config(CONFIG_DIR / f"accept_{name}.toml")
        out_dir = tmp_factory.getbasetemp() / "acceptance"
        out_dir.mkdir(exist_ok=True)
        config = replace(config, out=str(out_dir / f"{name}.csv"))
        _cache[name] = run_experiment(config, threads=THREADS)
    return _cache[name]


def report(criterion: str, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    return ok


def within(value, target, tol) -> bool:
    return abs(value - target) <= tol * target


def separated(lo, hi) -> bool:
    """Non-overlapping 95% CIs: lo's upper bound below hi's lower bound."""
    return lo.mean_sr + lo.ci95_sr < hi.mean_sr - hi.ci95_sr


@pytest.fixture(scope="module")
def tmp_factory(tmp_path_factory):
    return tmp_path_factory


# ---------------------------------------------------------------------------
# Statistical criteria
# ---------------------------------------------------------------------------


class TestBaselineMagnitude:
    def test_baseline_magnitude(self, tmp_factory):
        res = results_for("baseline", tmp_factory)[0]
        ok = within(res.mean_sr, 4174, 0.10)
        assert report(
            "baseline magnitude",
            ok,
            f"mean_Sr={res.mean_sr:.0f} ci95={res.ci95_sr:.1f}, expected 4174 +-10%",
        )


class TestStaticCampaigns:
    def test_static_ordering_with_ci_separation(self, tmp_factory):
        none = results_for("baseline", tmp_factory)[0]
        unif = results_for("static_unifrand", tmp_factory)[0]
        targt = results_for("static_targtrand", tmp_factory)[0]
        cntrl = results_for("static_cntrl", tmp_factory)[0]
        ok = separated(cntrl, targt) and separated(targt, unif) and separated(unif, none)
        assert report(
            "static ordering cntrl < targt-rand < unif-rand < none",
            ok,
            f"{cntrl.mean_sr:.0f} < {targt.mean_sr:.0f} < {unif.mean_sr:.0f} < {none.mean_sr:.0f}",
        )

    @pytest.mark.parametrize(
        "name,target",
        [("static_unifrand", 1615), ("static_targtrand", 288), ("static_cntrl", 161)],
    )
    def test_static_magnitudes(self, tmp_factory, name, target):
        res = results_for(name, tmp_factory)[0]
        ok = within(res.mean_sr, target, 0.15)
        assert report(
            f"static magnitude {name}",
            ok,
            f"mean_Sr={res.mean_sr:.0f} ci95={res.ci95_sr:.1f}, expected {target} +-15%",
        )


class TestDynamicOptimum:
    def test_interior_optimum_at_tr20(self, tmp_factory):
        by_tr = {r.point.campaign.update_interval: r for r in results_for("dynopt", tmp_factory)}
        ok = separated(by_tr[20], by_tr[1]) and separated(by_tr[20], by_tr[200])
        assert report(
            "dynamic interior optimum at t_r=20",
            ok,
            f"Sr(t_r=1)={by_tr[1].mean_sr:.0f} Sr(20)={by_tr[20].mean_sr:.0f} "
            f"Sr(200)={by_tr[200].mean_sr:.0f}",
        )

    def test_optimum_magnitude(self, tmp_factory):
        by_tr = {r.point.campaign.update_interval: r for r in results_for("dynopt", tmp_factory)}
        ok = within(by_tr[20].mean_sr, 688, 0.15)
        assert report(
            "dynamic optimum magnitude",
            ok,
            f"mean_Sr(t_r=20)={by_tr[20].mean_sr:.0f}, expected 688 +-15%",
        )


class TestLoclInfoCrossover:
    def rows(self, tmp_factory):
        locl = {r.point.campaign.mu_pos: r for r in results_for("crossover_loclinfo", tmp_factory)}
        dyn = {r.point.campaign.mu_pos: r for r in results_for("crossover_dynrand", tmp_factory)}
        return locl, dyn

    def test_ordering_strict_both_budgets(self, tmp_factory):
        locl, dyn = self.rows(tmp_factory)
        ok = separated(locl[0.001], dyn[0.001]) and separated(locl[0.002], dyn[0.002])
        assert report(
            "locl-info below dyn-rand at t_r=1",
            ok,
            f"mu+=0.001: {locl[0.001].mean_sr:.0f} vs {dyn[0.001].mean_sr:.0f}; "
            f"mu+=0.002: {locl[0.002].mean_sr:.1f} vs {dyn[0.002].mean_sr:.1f}",
        )

    def test_magnitudes(self, tmp_factory):
        locl, dyn = self.rows(tmp_factory)
        checks = [
            ("locl-info mu+=0.001", locl[0.001].mean_sr, 139, 0.20),
            ("dyn-rand mu+=0.001", dyn[0.001].mean_sr, 972, 0.20),
            ("locl-info mu+=0.002", locl[0.002].mean_sr, 3, 0.50),
        ]
        detail = "; ".join(
            f"{label}: {value:.1f} vs {target}" for label, value, target, _ in checks
        )
        ok = all(within(value, target, tol) for _, value, target, tol in checks)
        assert report("crossover magnitudes", ok, detail)


MONO_NAMES = {
    Strategy.UNIF_RAND: "mono_unifrand",
    Strategy.TARGT_RAND: "mono_targtrand",
    Strategy.CNTRL: "mono_cntrl",
    Strategy.DYN_RAND: "mono_dynrand",
    Strategy.LOCL_INFO: "mono_loclinfo",
    Strategy.ADV_LOCL_INFO: "mono_advloclinfo",
    Strategy.ADV_MULT_LOCL_INFO: "mono_advmultloclinfo",
}


class TestCrossCampaign:
    def test_advmult_strictly_best_at_matched_budget(self, tmp_factory):
        means = {}
        for strategy, name in MONO_NAMES.items():
            rows = {r.point.campaign.mu_pos: r for r in results_for(name, tmp_factory)}
            means[strategy.value] = rows[0.001].mean_sr
        advmult = means.pop("adv-mult-locl-info")
        ok = all(advmult < value for value in means.values())
        assert report(
            "adv-mult-locl-info best at mu+=0.001",
            ok,
            f"adv-mult={advmult:.1f} vs " + ", ".join(f"{k}={v:.0f}" for k, v in means.items()),
        )

    def test_advmult_magnitude(self, tmp_factory):
        rows = {
            r.point.campaign.mu_pos: r
            for r in results_for("mono_advmultloclinfo", tmp_factory)
        }
        ok = within(rows[0.001].mean_sr, 12, 0.50)
        assert report(
            "adv-mult-locl-info magnitude",
            ok,
            f"mean_Sr={rows[0.001].mean_sr:.1f}, expected 12 +-50%",
        )

    def test_unifrand_long_run_anti_fraction_interior(self, tmp_factory):
        rows = {r.point.campaign.mu_pos: r for r in results_for("mono_unifrand", tmp_factory)}
        res = rows[0.001]
        ok = 0 < res.mean_anti < 5000
        assert report(
            "unif-rand long-run anti-vaccine fraction strictly inside (0, 1)",
            ok,
            f"mean_anti={res.mean_anti:.0f} of 5000",
        )

    def test_suppression_monotone_in_mu_pos(self, tmp_factory):
        # non-increasing within CI noise: no significant increase between
        # consecutive budgets
        failures = []
        for strategy, name in MONO_NAMES.items():
            rows = {r.point.campaign.mu_pos: r for r in results_for(name, tmp_factory)}
            for lo_budget, hi_budget in [(0.0006, 0.001), (0.001, 0.002)]:
                lo, hi = rows[lo_budget], rows[hi_budget]
                margin = math.sqrt(lo.ci95_sr**2 + hi.ci95_sr**2)
                if hi.mean_sr > lo.mean_sr + margin:
                    failures.append(
                        f"{strategy.value}: Sr({hi_budget})={hi.mean_sr:.0f} > "
                        f"Sr({lo_budget})={lo.mean_sr:.0f}"
                    )
        assert report(
            "suppression monotone in mu+ for every strategy",
            not failures,
            "; ".join(failures) if failures else "all 7 strategies non-increasing",
        )


# ---------------------------------------------------------------------------
# Oracle suites (no statistics beyond stated error bounds)
# ---------------------------------------------------------------------------


def _sir_chunk(args):
    seed, runs = args
    graph = path_graph(4)
    params = EpidemicParams(beta=0.1, gamma=0.1, initial_infected=1)
    states = np.full(4, SUSCEPTIBLE, dtype=np.int8)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    total = 0.0
    total_sq = 0.0
    for _ in range(runs):
        size = run_sir(graph, states, params, rng).epidemic_size
        total += size
        total_sq += size * size
    return total, total_sq


class TestOracleSuites:
    def test_brandes_vs_brute_force_200_graphs(self):
        rng = np.random.default_rng(20240817)
        worst = 0.0
        for _ in range(200):
            graph = random_graph(rng, max_n=50)
            diff = np.abs(betweenness(graph) - brute_force_betweenness(graph))
            worst = max(worst, float(diff.max()))
        assert report(
            "oracle: Brandes vs brute force (200 graphs, n<=50)",
            worst <= 1e-9,
            f"max |diff| = {worst:.2e}",
        )

    def test_sir_mean_vs_exact_enumeration_1e6_runs(self):
        runs = 1_000_000
        chunks = 50
        per_chunk = runs // chunks
        exact = exact_sir_mean(path_graph(4), EpidemicParams(0.1, 0.1, 1))
        with ProcessPoolExecutor(max_workers=THREADS) as pool:
            parts = list(pool.map(_sir_chunk, [(i, per_chunk) for i in range(chunks)]))
        total = sum(p[0] for p in parts)
        total_sq = sum(p[1] for p in parts)
        mean = total / runs
        var = (total_sq - runs * mean * mean) / (runs - 1)
        se = math.sqrt(var / runs)
        ok = abs(mean - exact) <= 3 * se
        assert report(
            "oracle: SIR mean vs exact Markov chain (1e6 runs)",
            ok,
            f"simulated {mean:.5f} vs exact {exact:.5f} (3 SE = {3 * se:.5f})",
        )

    def test_target_selection_vs_exhaustive_oracle_50_cases(self):
        from vaxopsim.campaigns import select_dynamic

        bad = 0
        for case, graph, state, spec, rng in selection_cases(seed=20240817, cases=50):
            selected = select_dynamic(spec, graph, state, spec.update_interval, rng)
            if not SelectionOracle(spec, graph, state.states).accepts(selected):
                bad += 1
        assert report(
            "oracle: target selection vs exhaustive scoring (50 cases)",
            bad == 0,
            f"{50 - bad}/50 selections valid",
        )

    def test_opinion_step_invariants_1e4_randomized_steps(self):
        rng = np.random.default_rng(20240817)
        steps_checked = 0
        violations = []
        while steps_checked < 10_000:
            n = int(rng.integers(20, 80))
            graph = generate_watts_strogatz(n, 4, float(rng.uniform(0, 0.5)), rng)
            params = OpinionParams(
                mu_neg=float(rng.uniform(0, 0.2)),
                omega_neg=float(rng.uniform(0, 0.3)),
                omega_pos=float(rng.uniform(0, 0.3)),
                theta=int(rng.integers(1, 4)),
                tau=1000,
            )
            state = OpinionState(n)
            alloc = np.full(n, float(rng.uniform(0, 0.2)))
            for _ in range(50):
                before = state.states.copy()
                step(graph, state, alloc, params, rng)
                changed = before != state.states
                if not np.all(before[changed] == NEUTRAL):
                    violations.append("non-neutral agent changed state")
                counts = np.array(state.counts())
                if counts.sum() != n:
                    violations.append("population not conserved")
                neutral = state.states == NEUTRAL
                diff = state.phi_neg[neutral] - state.phi_pos[neutral]
                if neutral.any() and np.abs(diff).max() >= params.theta:
                    violations.append("neutral agent past threshold")
                steps_checked += 1
                if violations:
                    break
            if violations:
                break
        assert report(
            "oracle: opinion step invariants (1e4 randomized steps)",
            not violations,
            violations[0] if violations else f"{steps_checked} steps clean",
        )

    def test_seed_stream_collision_scan_1e6_triples(self):
        seen = set()
        count = 0
        for master in range(4):
            for net in range(500):
                for sir in range(500):
                    gen = seed_schedule(master, net, sir)
                    seen.add(gen.bit_generator.random_raw(64).tobytes())
                    count += 1
        ok = len(seen) == count
        assert report(
            "oracle: seed schedule collision scan (1e6 triples, first 64 draws)",
            ok,
            f"{len(seen)}/{count} unique streams",
        )


# ---------------------------------------------------------------------------
# Determinism across worker counts (through the real CLI)
# ---------------------------------------------------------------------------


DETERMINISM_CONFIG = """\
master_seed = 77
out = "{out}"

[network]
n = 400
mean_degree = 6
rewire_prob = 0.02

[opinion]
mu_neg = 0.002
omega_neg = 0.02
omega_pos = 0.02
theta = 2
tau = 150

[campaign]
strategy = "dyn-rand"
mu_pos = 0.002
target_size = 20
update_interval = 5

[epidemic]
beta = 0.1
gamma = 0.1
initial_infected = 1

[replication]
num_networks = 6
sir_runs_per_network = 10

[sweep]
omega = [0.01, 0.03]
mu_pos = [0.001, 0.002]
"""


class TestDeterminism:
    def test_cli_threads_1_vs_8_byte_identical(self, tmp_path):
        outputs = []
        for threads in (1, 8):
            out = tmp_path / f"det_{threads}.csv"
            config_path = tmp_path / f"det_{threads}.toml"
            config_path.write_text(DETERMINISM_CONFIG.format(out=out))
            proc = subprocess.run(
                [sys.executable, "-m", "vaxopsim.cli", "run", "--config",
                 str(config_path), "--threads", str(threads), "--no-meta", "--quiet"],
                capture_output=True,
                text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        ok = outputs[0] == outputs[1]
        assert report(
            "determinism: --threads 1 vs --threads 8 byte-identical CSV",
            ok,
            f"{len(outputs[0])} bytes each" if ok else "outputs differ",
        )
