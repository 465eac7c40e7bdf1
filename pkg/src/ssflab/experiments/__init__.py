"""Theorem-verification campaigns."""

from .base import ExperimentConfig, ExperimentError, ResultRecord
from .brownian_exp import run_brownian
from .bulk import run_bulk_limit
from .cluster import run_cluster
from .cutoff import run_cutoff_equivalence
from .kirsch import run_kirsch_demo
from .locality import run_locality
from .resolvent import run_resolvent_power
from .subadditive import run_subadditive
from .surface import run_surface

RUNNERS = {
    "bulk-limit": run_bulk_limit,
    "locality": run_locality,
    "cutoff": run_cutoff_equivalence,
    "cluster": run_cluster,
    "subadditive": run_subadditive,
    "surface": run_surface,
    "kirsch": run_kirsch_demo,
    "resolvent": run_resolvent_power,
    "brownian": run_brownian,
}

__all__ = ["ExperimentConfig", "ExperimentError", "ResultRecord", "RUNNERS",
           "run_bulk_limit", "run_locality", "run_cutoff_equivalence",
           "run_cluster", "run_subadditive", "run_surface", "run_kirsch_demo",
           "run_resolvent_power", "run_brownian"]
