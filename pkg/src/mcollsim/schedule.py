"""Executable schedule IR for node-level allgather algorithms.

A schedule is a flat list of phases acting on one shared buffer per node.
The buffer holds `num_blocks` blocks of `block_bytes` each (one block per
node's contribution).  Inter-node rounds are bulk-synchronous: every
action in a round reads peer buffers as of round entry, so action order
within a round carries no meaning.

Block ranges are (start, length) pairs in block units, serialized as
two-element JSON arrays.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from mcollsim.topology import Topology, decompose_rank


class ScheduleError(ValueError):
    """Raised for malformed layouts, actions, or serialized schedules."""


@dataclass(frozen=True)
class BlockLayout:
    num_blocks: int       # one block per node
    per_proc_bytes: int   # payload contributed by each process
    block_bytes: int      # per-node block: procs_per_node * per_proc_bytes

    def __post_init__(self) -> None:
        if self.num_blocks < 1 or self.per_proc_bytes < 1 or self.block_bytes < 1:
            raise ScheduleError(f"degenerate layout {self}")
        if self.block_bytes % self.per_proc_bytes != 0:
            raise ScheduleError(
                f"block_bytes {self.block_bytes} not a multiple of "
                f"per_proc_bytes {self.per_proc_bytes}"
            )

    @classmethod
    def for_topology(cls, topo: Topology, per_proc_bytes: int) -> "BlockLayout":
        if per_proc_bytes < 1:
            raise ScheduleError(f"per_proc_bytes must be >= 1, got {per_proc_bytes}")
        return cls(
            num_blocks=topo.num_nodes,
            per_proc_bytes=per_proc_bytes,
            block_bytes=topo.procs_per_node * per_proc_bytes,
        )

    @property
    def buffer_bytes(self) -> int:
        return self.num_blocks * self.block_bytes


@dataclass(frozen=True)
class SendRecv:
    """One process's combined send+receive within a round.

    The actor ships `send_blocks` out of its own node buffer to dst_rank
    and stores the blocks arriving from src_rank into `recv_blocks` of its
    own node buffer.  Both ranges are (start, length); the counts must
    match because paired peers always exchange equally sized windows.
    """

    actor: int
    dst_rank: int
    src_rank: int
    send_blocks: tuple[int, int]
    recv_blocks: tuple[int, int]

    def __post_init__(self) -> None:
        s_start, s_len = self.send_blocks
        r_start, r_len = self.recv_blocks
        if s_len < 1 or r_len < 1:
            raise ScheduleError(f"empty block range in {self}")
        if s_len != r_len:
            raise ScheduleError(f"send/recv counts differ in {self}")
        if s_start < 0 or r_start < 0:
            raise ScheduleError(f"negative block index in {self}")


@dataclass(frozen=True)
class IntraGather:
    """Every process copies its payload into the node buffer's own block."""


@dataclass(frozen=True)
class InterRound:
    actions: tuple[SendRecv, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ScheduleError("inter round with no actions")


@dataclass(frozen=True)
class Rotate:
    """Permute the node buffer from working (rotated) to absolute order."""


@dataclass(frozen=True)
class IntraBcast:
    """Every process reads the finished node buffer as its output."""


Phase = IntraGather | InterRound | Rotate | IntraBcast

_PHASE_TAGS: dict[type, str] = {
    IntraGather: "intra_gather",
    InterRound: "inter_round",
    Rotate: "rotate",
    IntraBcast: "intra_bcast",
}


@dataclass(frozen=True)
class Schedule:
    algo: str
    topology: Topology
    layout: BlockLayout
    phases: tuple[Phase, ...]


@dataclass(frozen=True)
class Violation:
    kind: str          # "unmatched send" | "overlapping recv" | "duplicate actor" | "self message" | "out of bounds"
    round_index: int   # index into schedule.phases
    detail: str


def _intervals_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[0] + b[1] and b[0] < a[0] + a[1]


def validate_schedule(sched: Schedule) -> list[Violation]:
    """Static checks on every inter round; empty list means well formed.

    Checked per round: every send has exactly one matching receive of the
    same length on the destination (and vice versa), no two receives land
    on overlapping ranges of the same node buffer, no process acts twice,
    no action stays on its own node, all ranges fit the buffer.
    """
    out: list[Violation] = []
    topo = sched.topology
    nblocks = sched.layout.num_blocks

    for pi, phase in enumerate(sched.phases):
        if not isinstance(phase, InterRound):
            continue

        by_actor: dict[int, SendRecv] = {}
        for a in phase.actions:
            if a.actor in by_actor:
                out.append(Violation("duplicate actor", pi, f"rank {a.actor} acts twice"))
            else:
                by_actor[a.actor] = a

        recv_by_node: dict[int, list[tuple[tuple[int, int], int]]] = {}
        for a in phase.actions:
            coord = decompose_rank(topo, a.actor)
            dst_node = decompose_rank(topo, a.dst_rank).node_id
            src_node = decompose_rank(topo, a.src_rank).node_id
            if coord.node_id == dst_node or coord.node_id == src_node:
                out.append(
                    Violation("self message", pi, f"rank {a.actor} pairs with its own node")
                )
            for rng, label in ((a.send_blocks, "send"), (a.recv_blocks, "recv")):
                if rng[0] + rng[1] > nblocks:
                    out.append(
                        Violation(
                            "out of bounds",
                            pi,
                            f"rank {a.actor} {label} range {rng} exceeds {nblocks} blocks",
                        )
                    )
            recv_by_node.setdefault(coord.node_id, []).append((a.recv_blocks, a.actor))

            # pairing: the destination must receive exactly this send, once
            peer = by_actor.get(a.dst_rank)
            if peer is None or peer.src_rank != a.actor:
                out.append(
                    Violation(
                        "unmatched send",
                        pi,
                        f"rank {a.actor} sends to {a.dst_rank} but no matching recv",
                    )
                )
            elif peer.recv_blocks[1] != a.send_blocks[1]:
                out.append(
                    Violation(
                        "unmatched send",
                        pi,
                        f"rank {a.actor} sends {a.send_blocks[1]} blocks, "
                        f"rank {a.dst_rank} expects {peer.recv_blocks[1]}",
                    )
                )
            feeder = by_actor.get(a.src_rank)
            if feeder is None or feeder.dst_rank != a.actor:
                out.append(
                    Violation(
                        "unmatched send",
                        pi,
                        f"rank {a.actor} expects data from {a.src_rank} "
                        "but no action sends it",
                    )
                )

        for node, ranges in recv_by_node.items():
            ranges.sort(key=lambda item: item[0][0])
            for (r1, rank1), (r2, rank2) in zip(ranges, ranges[1:]):
                if _intervals_overlap(r1, r2):
                    out.append(
                        Violation(
                            "overlapping recv",
                            pi,
                            f"ranks {rank1} and {rank2} both write node {node} "
                            f"ranges {r1} and {r2}",
                        )
                    )
    return out


@dataclass(frozen=True)
class ScheduleStats:
    inter_rounds: int
    msgs_per_rank_max: int
    bytes_on_wire_total: int


def schedule_stats(sched: Schedule) -> ScheduleStats:
    msgs: Counter[int] = Counter()
    wire = 0
    rounds = 0
    for phase in sched.phases:
        if not isinstance(phase, InterRound):
            continue
        rounds += 1
        for a in phase.actions:
            msgs[a.actor] += 1
            wire += a.send_blocks[1] * sched.layout.block_bytes
    return ScheduleStats(
        inter_rounds=rounds,
        msgs_per_rank_max=max(msgs.values(), default=0),
        bytes_on_wire_total=wire,
    )


def schedule_to_dict(sched: Schedule) -> dict:
    phases: list[dict] = []
    for phase in sched.phases:
        tag = _PHASE_TAGS[type(phase)]
        if isinstance(phase, InterRound):
            phases.append(
                {
                    "phase": tag,
                    "actions": [
                        {
                            "actor": a.actor,
                            "dst": a.dst_rank,
                            "src": a.src_rank,
                            "send": list(a.send_blocks),
                            "recv": list(a.recv_blocks),
                        }
                        for a in phase.actions
                    ],
                }
            )
        else:
            phases.append({"phase": tag})
    return {
        "algo": sched.algo,
        "nodes": sched.topology.num_nodes,
        "ppn": sched.topology.procs_per_node,
        "per_proc_bytes": sched.layout.per_proc_bytes,
        "phases": phases,
    }


def schedule_to_json(sched: Schedule) -> str:
    return json.dumps(schedule_to_dict(sched), indent=2) + "\n"


def schedule_from_dict(doc: dict) -> Schedule:
    try:
        topo = Topology(int(doc["nodes"]), int(doc["ppn"]))
        layout = BlockLayout.for_topology(topo, int(doc["per_proc_bytes"]))
        phases: list[Phase] = []
        for p in doc["phases"]:
            tag = p["phase"]
            if tag == "inter_round":
                actions = tuple(
                    SendRecv(
                        actor=int(a["actor"]),
                        dst_rank=int(a["dst"]),
                        src_rank=int(a["src"]),
                        send_blocks=(int(a["send"][0]), int(a["send"][1])),
                        recv_blocks=(int(a["recv"][0]), int(a["recv"][1])),
                    )
                    for a in p["actions"]
                )
                phases.append(InterRound(actions))
            elif tag == "intra_gather":
                phases.append(IntraGather())
            elif tag == "rotate":
                phases.append(Rotate())
            elif tag == "intra_bcast":
                phases.append(IntraBcast())
            else:
                raise ScheduleError(f"unknown phase tag {tag!r}")
    except (KeyError, IndexError, TypeError) as exc:
        raise ScheduleError(f"malformed schedule document: {exc!r}") from exc
    return Schedule(str(doc.get("algo", "")), topo, layout, tuple(phases))


def schedule_from_json(text: str) -> Schedule:
    return schedule_from_dict(json.loads(text))
