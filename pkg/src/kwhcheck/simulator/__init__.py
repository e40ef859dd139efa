"""Monte Carlo execution of protocols on a concrete deck.

The trial loop runs in a compiled kernel when the extension is built and
falls back to pure Python otherwise; see :data:`BACKEND`.
"""
from ._bytecode import MAX_CARDS, compile_protocol
from ._kernel import BACKEND, KERNELS
from ._rng import RNG_NAME, SplitMix64
from .core import (
    COUNTERS, DEFAULT_STEP_BUDGET, INPUTS, IndependenceVerdict, InputStats, SimulationError,
    SimulationStats, StepBudgetExceeded, Transcript, TurnSite, estimate, run_once,
    transcript_independence_test,
)

__all__ = [
    "BACKEND", "COUNTERS", "DEFAULT_STEP_BUDGET", "INPUTS", "IndependenceVerdict", "InputStats",
    "KERNELS", "MAX_CARDS", "RNG_NAME", "SimulationError", "SimulationStats", "SplitMix64",
    "StepBudgetExceeded", "Transcript", "TurnSite", "compile_protocol", "estimate", "run_once",
    "transcript_independence_test",
]
