"""Experiment orchestration: sweeps, replication, seeding, statistics, CSV.

Every replicate derives its own random stream from the master seed by key,
never from a shared sequential source, so results are bit-identical for any
worker count and any execution order. Graphs depend only on
(master_seed, network_index) and are cached per worker process; all grid
points of a sweep reuse the same replicate networks (common random numbers).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from .campaigns import CampaignController, CampaignSpec, Strategy
from .epidemic import (
    EpidemicParams,
    run_sir_on_subgraph,
    susceptible_subgraph,
    vaccinate,
)
from .errors import ConfigurationError
from .graph import Graph, betweenness, generate_watts_strogatz
from .opinion import NEGATIVE, POSITIVE, OpinionParams, OpinionTrace, run_opinion_stage

# Stream keys are always (master, network, stream_id) triples of the same
# length: SeedSequence hashes entropy (a, b) and (a, b, 0) identically, so
# mixed-length keys would collide. SIR runs use stream_id = sir_index; the
# opinion and graph stages use tags far above any realistic replication count.
_OPINION_STREAM_TAG = 1 << 33
_GRAPH_STREAM_TAG = (1 << 33) + 1

RNG_DESCRIPTOR = f"numpy-PCG64/SeedSequence (numpy {np.__version__})"


def seed_schedule(
    master_seed: int, network_index: int, sir_index: int | None = None
) -> np.random.Generator:
    """Derive the independent stream for a replicate.

    The opinion stage of network j is keyed by (master_seed, j); SIR run s on
    that network by (master_seed, j, s). Derivation is hash-based via
    SeedSequence, so it is collision-free and independent of execution order.
    """
    if sir_index is None:
        stream_id = _OPINION_STREAM_TAG
    else:
        if not 0 <= sir_index < _OPINION_STREAM_TAG:
            raise ValueError(f"sir_index out of range: {sir_index}")
        stream_id = sir_index
    entropy = (master_seed, network_index, stream_id)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def graph_stream(master_seed: int, network_index: int) -> np.random.Generator:
    entropy = (master_seed, network_index, _GRAPH_STREAM_TAG)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full parameter set: network, model stages, sweep axes, replication."""

    n: int
    mean_degree: int
    rewire_prob: float
    opinion: OpinionParams
    campaign: CampaignSpec
    epidemic: EpidemicParams
    num_networks: int
    sir_runs_per_network: int
    master_seed: int
    sweep: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.num_networks < 1 or self.sir_runs_per_network < 1:
            raise ConfigurationError("replication counts must be >= 1")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be a non-negative integer")
        for axis, values in self.sweep.items():
            if axis not in SWEEP_AXES:
                raise ConfigurationError(f"unknown sweep axis {axis!r}")
            if not values:
                raise ConfigurationError(f"sweep axis {axis!r} must be non-empty")
        self.campaign.validate_for(self.n)


# Cartesian sweep axes in canonical (output row) order.
SWEEP_AXES = ("omega", "mu_pos", "t_r", "zeta", "z_target", "target_size")


@dataclass(frozen=True)
class GridPoint:
    """One resolved point of the sweep grid."""

    index: int
    opinion: OpinionParams
    campaign: CampaignSpec
    epidemic: EpidemicParams


def build_grid(config: ExperimentConfig) -> list[GridPoint]:
    axes = [config.sweep.get(name, [None]) for name in SWEEP_AXES]
    points = []
    for idx, (omega, mu_pos, t_r, zeta, z_target, target_size) in enumerate(
        product(*axes)
    ):
        op = config.opinion
        if omega is not None:
            op = replace(op, omega_neg=omega, omega_pos=omega)
        camp = config.campaign
        updates = {}
        if mu_pos is not None:
            updates["mu_pos"] = mu_pos
        if t_r is not None:
            updates["update_interval"] = t_r
        if zeta is not None:
            updates["zeta"] = zeta
        if z_target is not None:
            updates["z_target"] = z_target
        if target_size is not None:
            updates["target_size"] = target_size
        if updates:
            camp = replace(camp, **updates)
        camp.validate_for(config.n)
        points.append(
            GridPoint(index=idx, opinion=op, campaign=camp, epidemic=config.epidemic)
        )
    return points


@dataclass
class ReplicateOutcome:
    """Summary of one network replicate (opinion stage + its SIR batch)."""

    epidemic_sizes: np.ndarray
    no_seed_count: int
    anti_count: int
    pro_count: int
    clamp_events: int
    cap_hit: bool


@dataclass
class AggregateResult:
    """Pooled statistics for one grid point."""

    point: GridPoint
    n_runs: int
    mean_sr: float | None
    ci95_sr: float | None
    mean_anti: float | None
    mean_pro: float | None
    noseed_frac: float | None
    clamp_count: int
    flagged_runs: int
    netmean_sr: float | None
    netmean_ci95: float | None


def mean_ci95(values: np.ndarray) -> tuple[float, float]:
    """Mean and 1.96*sd/sqrt(n) half-width (sample sd, ddof=1)."""
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    sd = float(np.std(values, ddof=1))
    return mean, 1.96 * sd / math.sqrt(n)


def aggregate_outcomes(epidemic_sizes: np.ndarray):
    return mean_ci95(np.asarray(epidemic_sizes, dtype=np.float64))


def aggregate(outcomes) -> dict:
    """Pool a list of RunOutcome records into summary statistics."""
    included = [o for o in outcomes if not o.cap_hit]
    flagged = len(outcomes) - len(included)
    if not included:
        return {
            "n": 0,
            "mean_sr": None,
            "ci95_sr": None,
            "noseed_frac": None,
            "flagged_runs": flagged,
        }
    sizes = np.array([o.epidemic_size for o in included], dtype=np.float64)
    mean, ci = mean_ci95(sizes)
    return {
        "n": len(included),
        "mean_sr": mean,
        "ci95_sr": ci,
        "noseed_frac": sum(o.no_seed for o in included) / len(included),
        "flagged_runs": flagged,
    }


# ---------------------------------------------------------------------------
# Replicate execution (used directly and from worker processes)
# ---------------------------------------------------------------------------

_graph_cache: dict = {}


def _cached_network(config: ExperimentConfig, net_idx: int, need_centrality: bool):
    key = (config.n, config.mean_degree, config.rewire_prob, config.master_seed, net_idx)
    entry = _graph_cache.get(key)
    if entry is None:
        rng = graph_stream(config.master_seed, net_idx)
        graph = generate_watts_strogatz(
            config.n, config.mean_degree, config.rewire_prob, rng
        )
        entry = [graph, None]
        _graph_cache[key] = entry
    if need_centrality and entry[1] is None:
        entry[1] = betweenness(entry[0])
    return entry[0], entry[1]


def run_replicate(
    config: ExperimentConfig, point: GridPoint, net_idx: int
) -> ReplicateOutcome:
    """Full pipeline for one network: graph, opinions, vaccination, SIR batch."""
    need_centrality = point.campaign.strategy is Strategy.CNTRL
    graph, centrality = _cached_network(config, net_idx, need_centrality)
    rng = seed_schedule(config.master_seed, net_idx)
    controller = CampaignController(point.campaign, graph, centrality)
    trace = run_opinion_stage(graph, point.opinion, controller, rng)
    disease = vaccinate(trace.final_states)
    sub = susceptible_subgraph(graph, disease)
    vaccinated_count = graph.node_count - sub.n
    sizes = np.empty(config.sir_runs_per_network, dtype=np.int64)
    no_seed = 0
    for sir_idx in range(config.sir_runs_per_network):
        sir_rng = seed_schedule(config.master_seed, net_idx, sir_idx)
        outcome = run_sir_on_subgraph(sub, point.epidemic, sir_rng, vaccinated_count)
        sizes[sir_idx] = outcome.epidemic_size
        no_seed += outcome.no_seed
    return ReplicateOutcome(
        epidemic_sizes=sizes,
        no_seed_count=no_seed,
        anti_count=int(np.count_nonzero(trace.final_states == NEGATIVE)),
        pro_count=int(np.count_nonzero(trace.final_states == POSITIVE)),
        clamp_events=controller.clamp_events,
        cap_hit=trace.cap_hit,
    )


_worker_state: dict = {}


def _init_worker(config: ExperimentConfig):
    _worker_state["config"] = config
    _worker_state["points"] = build_grid(config)


def _run_task(task: tuple[int, int]):
    point_idx, net_idx = task
    config = _worker_state["config"]
    point = _worker_state["points"][point_idx]
    return point_idx, net_idx, run_replicate(config, point, net_idx)


def run_experiment(
    config: ExperimentConfig, threads: int = 1, progress=None
) -> list[AggregateResult]:
    """Run the full sweep; deterministic for a config regardless of threads.

    Replicates are independent tasks over a process pool; the reduction is
    keyed by (grid point, network index) and folded in canonical order, so
    scheduling cannot change the output.
    """
    points = build_grid(config)
    tasks = [
        (p_idx, net_idx)
        for net_idx in range(config.num_networks)
        for p_idx in range(len(points))
    ]
    outcomes: dict[tuple[int, int], ReplicateOutcome] = {}
    if threads <= 1:
        _init_worker(config)
        for task in tasks:
            p_idx, net_idx, outcome = _run_task(task)
            outcomes[(p_idx, net_idx)] = outcome
            if progress:
                progress(len(outcomes), len(tasks))
    else:
        with ProcessPoolExecutor(
            max_workers=threads, initializer=_init_worker, initargs=(config,)
        ) as pool:
            futures = [pool.submit(_run_task, task) for task in tasks]
            for fut in as_completed(futures):
                p_idx, net_idx, outcome = fut.result()
                outcomes[(p_idx, net_idx)] = outcome
                if progress:
                    progress(len(outcomes), len(tasks))

    results = []
    for p_idx, point in enumerate(points):
        reps = [outcomes[(p_idx, net_idx)] for net_idx in range(config.num_networks)]
        results.append(_reduce_point(config, point, reps))
    return results


def _reduce_point(
    config: ExperimentConfig, point: GridPoint, reps: list[ReplicateOutcome]
) -> AggregateResult:
    included = [r for r in reps if not r.cap_hit]
    flagged_runs = (len(reps) - len(included)) * config.sir_runs_per_network
    clamp_count = sum(r.clamp_events for r in reps)
    if not included:
        return AggregateResult(
            point=point,
            n_runs=0,
            mean_sr=None,
            ci95_sr=None,
            mean_anti=None,
            mean_pro=None,
            noseed_frac=None,
            clamp_count=clamp_count,
            flagged_runs=flagged_runs,
            netmean_sr=None,
            netmean_ci95=None,
        )
    pooled = np.concatenate([r.epidemic_sizes for r in included]).astype(np.float64)
    mean_sr, ci95_sr = mean_ci95(pooled)
    net_means = np.array([float(np.mean(r.epidemic_sizes)) for r in included])
    netmean_sr, netmean_ci95 = mean_ci95(net_means)
    return AggregateResult(
        point=point,
        n_runs=int(pooled.size),
        mean_sr=mean_sr,
        ci95_sr=ci95_sr,
        mean_anti=float(np.mean([r.anti_count for r in included])),
        mean_pro=float(np.mean([r.pro_count for r in included])),
        noseed_frac=float(sum(r.no_seed_count for r in included) / pooled.size),
        clamp_count=clamp_count,
        flagged_runs=flagged_runs,
        netmean_sr=netmean_sr,
        netmean_ci95=netmean_ci95,
    )


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "strategy",
    "N",
    "k",
    "p",
    "theta",
    "tau",
    "mu_neg",
    "mu_pos",
    "omega_neg",
    "omega_pos",
    "T",
    "t_r",
    "zeta",
    "Z",
    "beta",
    "gamma",
    "I0",
    "n_runs",
    "mean_Sr",
    "ci95_Sr",
    "mean_anti",
    "mean_pro",
    "noseed_frac",
    "clamp_count",
    "flagged_runs",
    # auxiliary per-network-mean statistics, appended after the core columns
    "netmean_Sr",
    "netmean_ci95",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        value = float(value)  # normalize numpy scalars for stable repr
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def result_row(config: ExperimentConfig, res: AggregateResult) -> dict:
    """CSV cell values for one grid point; unused parameters stay empty."""
    camp = res.point.campaign
    strat = camp.strategy
    row = {
        "strategy": strat.value,
        "N": config.n,
        "k": config.mean_degree,
        "p": config.rewire_prob,
        "theta": res.point.opinion.theta,
        "tau": res.point.opinion.tau if math.isinf(res.point.opinion.tau) else int(res.point.opinion.tau),
        "mu_neg": res.point.opinion.mu_neg,
        "mu_pos": camp.mu_pos if strat is not Strategy.NONE else None,
        "omega_neg": res.point.opinion.omega_neg,
        "omega_pos": res.point.opinion.omega_pos,
        "T": camp.target_size if strat.is_targeted else None,
        "t_r": camp.update_interval if strat.is_dynamic else None,
        "zeta": camp.zeta
        if strat in (Strategy.ADV_LOCL_INFO, Strategy.ADV_MULT_LOCL_INFO)
        else None,
        "Z": camp.z_target if strat is Strategy.ADV_MULT_LOCL_INFO else None,
        "beta": res.point.epidemic.beta,
        "gamma": res.point.epidemic.gamma,
        "I0": res.point.epidemic.initial_infected,
        "n_runs": res.n_runs,
        "mean_Sr": res.mean_sr,
        "ci95_Sr": res.ci95_sr,
        "mean_anti": res.mean_anti,
        "mean_pro": res.mean_pro,
        "noseed_frac": res.noseed_frac,
        "clamp_count": res.clamp_count,
        "flagged_runs": res.flagged_runs,
        "netmean_Sr": res.netmean_sr,
        "netmean_ci95": res.netmean_ci95,
    }
    return row


def write_csv(config: ExperimentConfig, results: list[AggregateResult], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for res in results:
            row = result_row(config, res)
            writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])


def run_trace(
    config: ExperimentConfig, network_index: int = 0, point_index: int = 0
) -> OpinionTrace:
    """Single opinion replicate with per-step counts, for diagnostics export."""
    points = build_grid(config)
    point = points[point_index]
    need_centrality = point.campaign.strategy is Strategy.CNTRL
    graph, centrality = _cached_network(config, network_index, need_centrality)
    rng = seed_schedule(config.master_seed, network_index)
    controller = CampaignController(point.campaign, graph, centrality)
    return run_opinion_stage(graph, point.opinion, controller, rng)
