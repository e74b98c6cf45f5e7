"""aircomp: a deterministic discrete-event simulator for task offloading
across ground edge servers, relocatable UAV servers and a remote cloud."""

from .policies import PolicyHook, StdioHookAdapter
from .reporting import read_csv, verify
from .runner import run_experiment
from .scenario import (RunConfig, ScenarioSpec, expand_sweep, load_scenario,
                       load_scenario_file)
from .sim_core import Engine, EventKind, EventRecord, derive_stream
from .simulation import RunResult, Simulation, run_single

__version__ = "0.1.0"

__all__ = [
    "Engine", "EventKind", "EventRecord", "derive_stream",
    "ScenarioSpec", "RunConfig", "load_scenario", "load_scenario_file",
    "expand_sweep", "Simulation", "RunResult", "run_single",
    "PolicyHook", "StdioHookAdapter", "run_experiment", "read_csv", "verify",
    "__version__",
]
