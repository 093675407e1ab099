"""TOML experiment configuration.

Key mapping to the model symbols (see README for the full table):
network.n=N, network.mean_degree=k, network.rewire_prob=p, opinion.mu_neg,
opinion.omega_neg/omega_pos, opinion.theta, opinion.tau (integer or inf),
campaign.mu_pos, campaign.target_size=T, campaign.update_interval=t_r,
campaign.zeta, campaign.z_target=Z, epidemic.beta, epidemic.gamma,
epidemic.initial_infected=I0.
"""

from __future__ import annotations

import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .campaigns import CampaignSpec, Strategy
from .epidemic import EpidemicParams
from .errors import ConfigurationError
from .harness import SWEEP_AXES, ExperimentConfig
from .opinion import OpinionParams

_KNOWN = {
    "": {"master_seed", "out"},
    "network": {"n", "mean_degree", "rewire_prob"},
    "opinion": {"mu_neg", "omega_neg", "omega_pos", "theta", "tau"},
    "campaign": {
        "strategy",
        "mu_pos",
        "target_size",
        "update_interval",
        "zeta",
        "z_target",
        "adv_pool",
    },
    "epidemic": {"beta", "gamma", "initial_infected"},
    "replication": {"num_networks", "sir_runs_per_network"},
    "sweep": set(SWEEP_AXES),
}


def _check_keys(table: dict, section: str) -> None:
    unknown = set(table) - _KNOWN[section]
    if unknown:
        where = f"[{section}]" if section else "top level"
        raise ConfigurationError(f"unknown keys {sorted(unknown)} in {where}")


def config_from_dict(raw: dict) -> ExperimentConfig:
    tables = {k: v for k, v in raw.items() if isinstance(v, dict)}
    top = {k: v for k, v in raw.items() if not isinstance(v, dict)}
    _check_keys(top, "")
    for name in tables:
        if name not in _KNOWN:
            raise ConfigurationError(f"unknown table [{name}]")
        _check_keys(tables[name], name)

    def need(section: str, key: str):
        table = tables.get(section)
        if table is None or key not in table:
            raise ConfigurationError(f"missing required key {section}.{key}")
        return table[key]

    network = tables.get("network", {})
    opinion_tbl = tables.get("opinion", {})
    campaign_tbl = dict(tables.get("campaign", {}))
    epidemic_tbl = tables.get("epidemic", {})
    replication = tables.get("replication", {})

    tau = need("opinion", "tau")
    if isinstance(tau, str):
        if tau != "inf":
            raise ConfigurationError(f"tau must be an integer or inf, got {tau!r}")
        tau = math.inf
    opinion = OpinionParams(
        mu_neg=float(need("opinion", "mu_neg")),
        omega_neg=float(need("opinion", "omega_neg")),
        omega_pos=float(need("opinion", "omega_pos")),
        theta=int(need("opinion", "theta")),
        tau=float(tau),
    )

    strategy_name = campaign_tbl.pop("strategy", "none")
    try:
        strategy = Strategy(strategy_name)
    except ValueError:
        valid = ", ".join(s.value for s in Strategy)
        raise ConfigurationError(
            f"unknown strategy {strategy_name!r}; expected one of: {valid}"
        ) from None
    campaign = CampaignSpec(strategy=strategy, **campaign_tbl)

    epidemic = EpidemicParams(
        beta=float(need("epidemic", "beta")),
        gamma=float(need("epidemic", "gamma")),
        initial_infected=int(epidemic_tbl.get("initial_infected", 1)),
    )

    if "master_seed" not in top:
        raise ConfigurationError("missing required key master_seed")

    return ExperimentConfig(
        n=int(need("network", "n")),
        mean_degree=int(need("network", "mean_degree")),
        rewire_prob=float(need("network", "rewire_prob")),
        opinion=opinion,
        campaign=campaign,
        epidemic=epidemic,
        num_networks=int(replication.get("num_networks", 50)),
        sir_runs_per_network=int(replication.get("sir_runs_per_network", 100)),
        master_seed=int(top["master_seed"]),
        sweep={k: list(v) for k, v in tables.get("sweep", {}).items()},
        out=top.get("out"),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Round-trippable echo of the configuration (for the metadata sidecar)."""
    camp = config.campaign
    out = {
        "master_seed": config.master_seed,
        "network": {
            "n": config.n,
            "mean_degree": config.mean_degree,
            "rewire_prob": config.rewire_prob,
        },
        "opinion": {
            "mu_neg": config.opinion.mu_neg,
            "omega_neg": config.opinion.omega_neg,
            "omega_pos": config.opinion.omega_pos,
            "theta": config.opinion.theta,
            "tau": "inf" if math.isinf(config.opinion.tau) else int(config.opinion.tau),
        },
        "campaign": {
            "strategy": camp.strategy.value,
            "mu_pos": camp.mu_pos,
            "adv_pool": camp.adv_pool,
        },
        "epidemic": {
            "beta": config.epidemic.beta,
            "gamma": config.epidemic.gamma,
            "initial_infected": config.epidemic.initial_infected,
        },
        "replication": {
            "num_networks": config.num_networks,
            "sir_runs_per_network": config.sir_runs_per_network,
        },
    }
    for key, value in (
        ("target_size", camp.target_size),
        ("update_interval", camp.update_interval),
        ("zeta", camp.zeta),
        ("z_target", camp.z_target),
    ):
        if value is not None:
            out["campaign"][key] = value
    if config.sweep:
        out["sweep"] = dict(config.sweep)
    if config.out is not None:
        out["out"] = config.out
    return out
