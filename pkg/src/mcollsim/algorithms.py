"""Schedule builders: the multi-sender hierarchical bruck and its baselines.

Every builder emits the same phase skeleton (gather, inter rounds, rotate,
bcast) over the rotated working layout: slot j on node i holds node
(i + j) mod N's block, so each node always sends a prefix of its buffer.
The multi-sender variant ("mcoll") drives all P processes of a node in
every round, which raises the dissemination radix from 2 to P + 1 and
cuts the round count to about log_{P+1}(N) plus one remainder round.

The recursive doubling builder is the one exception to the skeleton: it
rotates right after the gather and runs its rounds on absolute block
indices, because XOR-partner windows are not contiguous in the rotated
layout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from mcollsim.schedule import (
    BlockLayout,
    InterRound,
    IntraBcast,
    IntraGather,
    Phase,
    Rotate,
    Schedule,
    SendRecv,
)
from mcollsim.topology import Topology, compose_rank, paired_nodes

ALGORITHMS = ("mcoll", "bruck2", "recursive_doubling", "ring", "flat_bruck")


class UnsupportedShapeError(ValueError):
    """Raised when an algorithm cannot run on the requested topology."""


@dataclass(frozen=True)
class RoundPlan:
    radix: int                  # P + 1: every process sends, plus the node's own block
    full_steps: tuple[int, ...]  # step size per full round: 1, radix, radix^2, ...
    final_step: int             # step the remainder round works at (1 if no full rounds)


def mcoll_round_plan(num_nodes: int, procs_per_node: int) -> RoundPlan:
    if num_nodes < 1 or procs_per_node < 1:
        raise UnsupportedShapeError(
            f"need at least one node and one process, got {num_nodes}x{procs_per_node}"
        )
    radix = procs_per_node + 1
    steps: list[int] = []
    step = 1
    while step * radix <= num_nodes:
        steps.append(step)
        step *= radix
    return RoundPlan(radix=radix, full_steps=tuple(steps), final_step=step)


@dataclass(frozen=True)
class RemainderPlan:
    final_step: int
    counts: tuple[int, ...]         # blocks local rank r moves in the remainder round
    start_offsets: tuple[int, ...]  # first working slot local rank r fills

    @property
    def total(self) -> int:
        return sum(self.counts)


def remainder_plan(num_nodes: int, procs_per_node: int) -> RemainderPlan:
    """Split the N - final_step leftover blocks across the node's processes.

    Local rank r fetches up to final_step blocks starting at working slot
    final_step * (r + 1); whatever the first ranks cannot cover tapers off,
    so the counts always sum to exactly N - final_step.
    """
    sp = mcoll_round_plan(num_nodes, procs_per_node).final_step
    leftover = num_nodes - sp
    counts = tuple(
        max(min(sp, leftover - sp * r), 0) for r in range(procs_per_node)
    )
    offsets = tuple(sp * (r + 1) for r in range(procs_per_node))
    return RemainderPlan(final_step=sp, counts=counts, start_offsets=offsets)


def rotate_permutation(num_nodes: int, node_id: int) -> tuple[int, ...]:
    """perm[out] = working slot that holds absolute block `out` on node_id."""
    if not 0 <= node_id < num_nodes:
        raise UnsupportedShapeError(f"node_id {node_id} out of range [0, {num_nodes})")
    return tuple((out - node_id) % num_nodes for out in range(num_nodes))


def build_mcoll_allgather(topo: Topology, per_proc_bytes: int) -> Schedule:
    """All P processes of each node exchange concurrently every round.

    Full round at step S: local rank r trades a prefix of S blocks with the
    nodes at ring offset S * (r + 1), filling working slots
    [S*(r+1), S*(r+2)).  After the full rounds each node holds final_step
    blocks; the remainder round tops it up to N with tapered counts.
    """
    n = topo.num_nodes
    p = topo.procs_per_node
    layout = BlockLayout.for_topology(topo, per_proc_bytes)
    plan = mcoll_round_plan(n, p)
    rem = remainder_plan(n, p)

    phases: list[Phase] = [IntraGather()]
    for step in plan.full_steps:
        actions = []
        for node in range(n):
            for r in range(p):
                off = step * (r + 1)
                src_node, dst_node = paired_nodes(topo, node, off)
                actions.append(
                    SendRecv(
                        actor=compose_rank(topo, node, r),
                        dst_rank=compose_rank(topo, dst_node, r),
                        src_rank=compose_rank(topo, src_node, r),
                        send_blocks=(0, step),
                        recv_blocks=(off, step),
                    )
                )
        phases.append(InterRound(tuple(actions)))

    if rem.total > 0:
        actions = []
        for node in range(n):
            for r in range(p):
                cnt = rem.counts[r]
                if cnt == 0:
                    continue
                off = rem.start_offsets[r]
                src_node, dst_node = paired_nodes(topo, node, off)
                actions.append(
                    SendRecv(
                        actor=compose_rank(topo, node, r),
                        dst_rank=compose_rank(topo, dst_node, r),
                        src_rank=compose_rank(topo, src_node, r),
                        send_blocks=(0, cnt),
                        recv_blocks=(off, cnt),
                    )
                )
        phases.append(InterRound(tuple(actions)))

    phases.append(Rotate())
    phases.append(IntraBcast())
    return Schedule("mcoll", topo, layout, tuple(phases))


def build_bruck2(topo: Topology, per_proc_bytes: int) -> Schedule:
    """Classic radix-2 dissemination, one sender (local rank 0) per node."""
    n = topo.num_nodes
    layout = BlockLayout.for_topology(topo, per_proc_bytes)
    phases: list[Phase] = [IntraGather()]
    d = 1
    while d < n:
        cnt = min(d, n - d)  # last round may move a partial window
        actions = []
        for node in range(n):
            src_node, dst_node = paired_nodes(topo, node, d)
            actions.append(
                SendRecv(
                    actor=compose_rank(topo, node, 0),
                    dst_rank=compose_rank(topo, dst_node, 0),
                    src_rank=compose_rank(topo, src_node, 0),
                    send_blocks=(0, cnt),
                    recv_blocks=(d, cnt),
                )
            )
        phases.append(InterRound(tuple(actions)))
        d *= 2
    phases.append(Rotate())
    phases.append(IntraBcast())
    return Schedule("bruck2", topo, layout, tuple(phases))


def build_recursive_doubling(topo: Topology, per_proc_bytes: int) -> Schedule:
    """XOR-partner halving/doubling; needs a power-of-two node count."""
    n = topo.num_nodes
    if n & (n - 1) != 0:
        raise UnsupportedShapeError(
            f"unsupported-shape: recursive_doubling needs a power-of-two "
            f"node count, got {n}"
        )
    layout = BlockLayout.for_topology(topo, per_proc_bytes)
    # rotate first: own block moves to absolute slot node_id, rounds then
    # exchange aligned windows that double each time
    phases: list[Phase] = [IntraGather(), Rotate()]
    k = 0
    d = 1
    while d < n:
        actions = []
        for node in range(n):
            peer = node ^ d
            actions.append(
                SendRecv(
                    actor=compose_rank(topo, node, 0),
                    dst_rank=compose_rank(topo, peer, 0),
                    src_rank=compose_rank(topo, peer, 0),
                    send_blocks=((node >> k) << k, d),
                    recv_blocks=((peer >> k) << k, d),
                )
            )
        phases.append(InterRound(tuple(actions)))
        k += 1
        d *= 2
    phases.append(IntraBcast())
    return Schedule("recursive_doubling", topo, layout, tuple(phases))


def build_ring(topo: Topology, per_proc_bytes: int) -> Schedule:
    """N-1 rounds, each node forwards one block to its ring neighbor."""
    n = topo.num_nodes
    layout = BlockLayout.for_topology(topo, per_proc_bytes)
    phases: list[Phase] = [IntraGather()]
    for t in range(n - 1):
        actions = []
        for node in range(n):
            src_node, dst_node = paired_nodes(topo, node, 1)
            actions.append(
                SendRecv(
                    actor=compose_rank(topo, node, 0),
                    dst_rank=compose_rank(topo, dst_node, 0),
                    src_rank=compose_rank(topo, src_node, 0),
                    send_blocks=(t, 1),
                    recv_blocks=(t + 1, 1),
                )
            )
        phases.append(InterRound(tuple(actions)))
    phases.append(Rotate())
    phases.append(IntraBcast())
    return Schedule("ring", topo, layout, tuple(phases))


def build_flat_bruck(topo: Topology, per_proc_bytes: int) -> Schedule:
    """Radix-2 bruck over every process, ignoring the node boundary.

    Built on the flattened topology (N*P nodes, 1 proc each); global rank
    order coincides with the original topology, so the same oracle applies.
    """
    flat = Topology(topo.total_ranks, 1)
    inner = build_bruck2(flat, per_proc_bytes)
    return replace(inner, algo="flat_bruck")


_BUILDERS = {
    "mcoll": build_mcoll_allgather,
    "bruck2": build_bruck2,
    "recursive_doubling": build_recursive_doubling,
    "ring": build_ring,
    "flat_bruck": build_flat_bruck,
}


def build_schedule(algo: str, topo: Topology, per_proc_bytes: int) -> Schedule:
    try:
        builder = _BUILDERS[algo]
    except KeyError:
        raise UnsupportedShapeError(
            f"unknown algorithm {algo!r}, expected one of {', '.join(ALGORITHMS)}"
        ) from None
    return builder(topo, per_proc_bytes)
