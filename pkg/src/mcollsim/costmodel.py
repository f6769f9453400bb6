"""Analytic time model: alpha-beta-gap network plus per-transport copies.

An inter round costs a fixed launch latency plus the slower of two
bottlenecks: the busiest process (message-rate gap plus its wire bytes)
or the busiest node link (all bytes the node injects).  Intra phases
charge shared-memory copy time, which is where the transports differ:

  pip          one copy, direct load/store, no mapping cost
  posix_shmem  two copies (through a staging segment)
  cma          one copy, kernel assist, fixed syscall cost per operation
  xpmem        one copy, page attach paid once then cached

All times are seconds; reports expose microseconds for humans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from mcollsim.schedule import (
    BlockLayout,
    InterRound,
    IntraBcast,
    IntraGather,
    Rotate,
    Schedule,
    schedule_stats,
)
from mcollsim.topology import Topology


@dataclass(frozen=True)
class NetParams:
    alpha_inter: float = 1.0e-6      # per-round launch latency, s
    beta_inter: float = 0.08e-9      # per-process wire cost, s/B (100 Gbps)
    beta_node: float = 0.08e-9       # per-node injection cost, s/B (100 Gbps)
    gap_proc: float = 1.0 / 97e6     # message-rate gap, s/msg (97 Mmsg/s)
    round_sync: float = 0.0          # extra per-round sync charge, s


@dataclass(frozen=True)
class TransportModel:
    name: str
    copy_beta: float = 0.1e-9        # s/B for one intra-node copy
    copies_per_transfer: int = 1
    per_op_overhead: float = 0.0     # s, interpretation set by overhead_mode
    overhead_mode: str = "none"      # "none" | "per_op" | "first_touch"
    sync_const: float = 200e-9       # intra-node barrier charge, s


def default_transports() -> dict[str, TransportModel]:
    return {
        "pip": TransportModel("pip"),
        "posix_shmem": TransportModel("posix_shmem", copies_per_transfer=2),
        "cma": TransportModel(
            "cma", per_op_overhead=400e-9, overhead_mode="per_op"
        ),
        "xpmem": TransportModel(
            "xpmem", per_op_overhead=600e-9, overhead_mode="first_touch"
        ),
    }


@dataclass(frozen=True)
class SimParams:
    net: NetParams
    transports: dict[str, TransportModel] = field(default_factory=default_transports)


PRESET_NAMES = ("opa-broadwell", "zero", "pip-mpich-baseline")


def preset_params(name: str) -> SimParams:
    if name == "opa-broadwell":
        return SimParams(NetParams())
    if name == "zero":
        zeroed = {
            key: replace(
                tm, copy_beta=0.0, per_op_overhead=0.0, sync_const=0.0
            )
            for key, tm in default_transports().items()
        }
        return SimParams(
            NetParams(alpha_inter=0.0, beta_inter=0.0, beta_node=0.0, gap_proc=0.0),
            zeroed,
        )
    if name == "pip-mpich-baseline":
        # same fabric, but the runtime barriers between rounds
        return SimParams(NetParams(round_sync=200e-9))
    raise ValueError(f"unknown preset {name!r}, expected one of {PRESET_NAMES}")


def params_from_dict(doc: dict) -> SimParams:
    """Partial override of a base preset, e.g. {"net": {"alpha_inter": 2e-6}}."""
    base = preset_params(doc.get("base", "opa-broadwell"))
    try:
        net = replace(base.net, **doc.get("net", {}))
        transports = dict(base.transports)
        for name, fields in doc.get("transports", {}).items():
            seed = transports.get(name, TransportModel(name=name))
            transports[name] = replace(seed, **fields)
    except TypeError as exc:
        raise ValueError(f"bad params override: {exc}") from exc
    return SimParams(net, transports)


def resolve_params(spec: str) -> SimParams:
    """Preset name, or a path to a JSON override file."""
    if spec in PRESET_NAMES:
        return preset_params(spec)
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        try:
            return params_from_dict(json.loads(path.read_text(encoding="utf-8")))
        except OSError as exc:
            raise ValueError(f"cannot read params file {spec!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"params file {spec!r} is not valid JSON: {exc}") from exc
    raise ValueError(
        f"unknown params {spec!r}: not a preset {PRESET_NAMES} and not a JSON file"
    )


def inter_round_time(
    phase: InterRound, topo: Topology, layout: BlockLayout, net: NetParams
) -> float:
    """alpha + max(busiest process, busiest node link) for one round."""
    cb = layout.block_bytes
    ppn = topo.procs_per_node
    rank_msgs: dict[int, int] = {}
    rank_bytes: dict[int, int] = {}
    node_bytes: dict[int, int] = {}
    for a in phase.actions:
        b = a.send_blocks[1] * cb
        rank_msgs[a.actor] = rank_msgs.get(a.actor, 0) + 1
        rank_bytes[a.actor] = rank_bytes.get(a.actor, 0) + b
        node = a.actor // ppn
        node_bytes[node] = node_bytes.get(node, 0) + b
    worst_rank = max(
        (
            rank_msgs[r] * net.gap_proc + rank_bytes[r] * net.beta_inter
            for r in rank_msgs
        ),
        default=0.0,
    )
    worst_node = max(
        (b * net.beta_node for b in node_bytes.values()), default=0.0
    )
    return net.alpha_inter + max(worst_rank, worst_node) + net.round_sync


def _intra_overhead(tm: TransportModel, state: dict) -> float:
    # callers invoke this only when a cross-address-space copy happens
    if tm.overhead_mode == "per_op":
        return tm.per_op_overhead
    if tm.overhead_mode == "first_touch" and not state.get("attached"):
        state["attached"] = True
        return tm.per_op_overhead
    return 0.0


def intra_gather_time(
    topo: Topology, layout: BlockLayout, tm: TransportModel, state: dict
) -> float:
    """Non-root processes copy their payload into the shared block, in parallel."""
    worst = 0.0
    if topo.procs_per_node > 1:
        worst = (
            tm.copies_per_transfer * layout.per_proc_bytes * tm.copy_beta
            + _intra_overhead(tm, state)
        )
    return worst + tm.sync_const


def intra_bcast_time(
    topo: Topology, layout: BlockLayout, tm: TransportModel, state: dict
) -> float:
    """Each process pulls the whole result out of the node buffer once."""
    total = layout.buffer_bytes
    ovh = _intra_overhead(tm, state) if topo.procs_per_node > 1 else 0.0
    return tm.copies_per_transfer * total * tm.copy_beta + ovh + tm.sync_const


def rotate_time(layout: BlockLayout, tm: TransportModel) -> float:
    """In-place layout fix-up, one pass over the node buffer."""
    return layout.buffer_bytes * tm.copy_beta


@dataclass(frozen=True)
class PhaseTime:
    phase: str
    seconds: float


@dataclass(frozen=True)
class RunReport:
    algo: str
    transport: str
    nodes: int
    ppn: int
    msg_bytes: int
    sim_time_s: float
    phase_times: tuple[PhaseTime, ...]
    inter_rounds: int
    msgs_per_rank_max: int
    bytes_on_wire_total: int

    @property
    def sim_time_us(self) -> float:
        return self.sim_time_s * 1e6


def simulate(sched: Schedule, params: SimParams, transport: str) -> RunReport:
    try:
        tm = params.transports[transport]
    except KeyError:
        raise ValueError(
            f"unknown transport {transport!r}, "
            f"expected one of {sorted(params.transports)}"
        ) from None
    topo = sched.topology
    layout = sched.layout
    state: dict = {}
    times: list[PhaseTime] = []
    for phase in sched.phases:
        if isinstance(phase, IntraGather):
            t = intra_gather_time(topo, layout, tm, state)
            times.append(PhaseTime("intra_gather", t))
        elif isinstance(phase, InterRound):
            t = inter_round_time(phase, topo, layout, params.net)
            times.append(PhaseTime("inter_round", t))
        elif isinstance(phase, Rotate):
            times.append(PhaseTime("rotate", rotate_time(layout, tm)))
        elif isinstance(phase, IntraBcast):
            t = intra_bcast_time(topo, layout, tm, state)
            times.append(PhaseTime("intra_bcast", t))
        else:
            raise ValueError(f"unknown phase kind {type(phase).__name__}")
    stats = schedule_stats(sched)
    return RunReport(
        algo=sched.algo,
        transport=transport,
        nodes=topo.num_nodes,
        ppn=topo.procs_per_node,
        msg_bytes=layout.per_proc_bytes,
        sim_time_s=sum(pt.seconds for pt in times),
        phase_times=tuple(times),
        inter_rounds=stats.inter_rounds,
        msgs_per_rank_max=stats.msgs_per_rank_max,
        bytes_on_wire_total=stats.bytes_on_wire_total,
    )


def transfer_cost(tm: TransportModel, nbytes: int, attach_pending: bool = True) -> float:
    """Cost of one intra-node message of `nbytes` under a transport."""
    ovh = 0.0
    if tm.overhead_mode == "per_op":
        ovh = tm.per_op_overhead
    elif tm.overhead_mode == "first_touch" and attach_pending:
        ovh = tm.per_op_overhead
    return tm.copies_per_transfer * nbytes * tm.copy_beta + ovh


def crossover_bytes(
    a: TransportModel, b: TransportModel, lo: int = 1, hi: int = 1 << 26
) -> int | None:
    """Smallest message size where the cheaper of a/b flips, by bisection.

    Returns None if the ordering never changes on [lo, hi].  No closed
    form is assumed; only that the cost difference is monotone in size.
    """
    def pricier_a(n: int) -> bool:
        return transfer_cost(a, n) > transfer_cost(b, n)

    first = pricier_a(lo)
    if pricier_a(hi) == first:
        return None
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if pricier_a(mid) == first:
            lo = mid
        else:
            hi = mid
    return hi
