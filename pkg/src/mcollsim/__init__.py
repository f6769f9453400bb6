"""Multi-sender hierarchical allgather: schedules, execution, cost model.

The core idea: on fat nodes, let every process of a node drive the
inter-node exchange concurrently over a shared per-node buffer.  That
turns the classic radix-2 dissemination into a radix-(P+1) one and cuts
the round count to roughly log_{P+1}(N) plus one remainder round.

Layers, bottom up: `topology` (rank arithmetic), `schedule` (the phase
IR), `algorithms` (builders), `executor` (byte-exact runs against an
oracle), `costmodel` (alpha-beta-gap timing), `experiment` (drivers,
CSV/SVG), `service` (FastAPI app), `cli` (thin client).
"""

from mcollsim.algorithms import (
    ALGORITHMS,
    UnsupportedShapeError,
    build_schedule,
    mcoll_round_plan,
    remainder_plan,
    rotate_permutation,
)
from mcollsim.costmodel import (
    NetParams,
    RunReport,
    SimParams,
    TransportModel,
    crossover_bytes,
    preset_params,
    resolve_params,
    simulate,
)
from mcollsim.executor import (
    ExecutionFault,
    oracle_allgather,
    run_schedule,
    seeded_payloads,
    verify_schedule_output,
)
from mcollsim.experiment import ExperimentConfig, run_sweep, run_verify
from mcollsim.schedule import (
    BlockLayout,
    Schedule,
    ScheduleError,
    schedule_from_json,
    schedule_stats,
    schedule_to_json,
    validate_schedule,
)
from mcollsim.topology import Topology, TopologyError

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "BlockLayout",
    "ExecutionFault",
    "ExperimentConfig",
    "NetParams",
    "RunReport",
    "Schedule",
    "ScheduleError",
    "SimParams",
    "Topology",
    "TopologyError",
    "TransportModel",
    "UnsupportedShapeError",
    "build_schedule",
    "crossover_bytes",
    "mcoll_round_plan",
    "oracle_allgather",
    "preset_params",
    "remainder_plan",
    "resolve_params",
    "rotate_permutation",
    "run_schedule",
    "run_sweep",
    "run_verify",
    "schedule_from_json",
    "schedule_stats",
    "schedule_to_json",
    "seeded_payloads",
    "simulate",
    "validate_schedule",
    "verify_schedule_output",
]
