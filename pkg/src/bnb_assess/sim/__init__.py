"""Seeded knapsack branch and bound with a simulated parallel execution model."""

from .knapsack import (
    KnapsackInstance,
    brute_force_knapsack,
    generate_instance,
    load_instance,
    save_instance,
)
from .simulator import SimConfig, SimResult, seed_sweep, simulate_parallel, solve_sequential

generate_instances = generate_instance

__all__ = [
    "KnapsackInstance",
    "SimConfig",
    "SimResult",
    "brute_force_knapsack",
    "generate_instance",
    "generate_instances",
    "load_instance",
    "save_instance",
    "seed_sweep",
    "simulate_parallel",
    "solve_sequential",
]
