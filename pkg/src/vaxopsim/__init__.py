"""Coupled vaccine-opinion diffusion and SIR epidemic simulation."""

__version__ = "0.1.0"

from .campaigns import CampaignSpec, Strategy
from .epidemic import EpidemicParams, RunOutcome, run_sir, vaccinate
from .graph import Graph, betweenness, generate_watts_strogatz
from .harness import ExperimentConfig, run_experiment, seed_schedule
from .opinion import OpinionParams, OpinionTrace, run_opinion_stage, step

__all__ = [
    "CampaignSpec",
    "Strategy",
    "EpidemicParams",
    "RunOutcome",
    "run_sir",
    "vaccinate",
    "Graph",
    "betweenness",
    "generate_watts_strogatz",
    "ExperimentConfig",
    "run_experiment",
    "seed_schedule",
    "OpinionParams",
    "OpinionTrace",
    "run_opinion_stage",
    "step",
]
