"""Byte-level schedule execution against per-node shared buffers.

The reference answer for any allgather is payload concatenation in global
rank order; running a schedule must reproduce it byte for byte on every
rank.  Rounds are bulk-synchronous: payloads resolve against buffer state
at round entry (nodes whose reads and writes collide are snapshotted), so
action order within a round cannot change the outcome.

After the broadcast phase each process's output is simply a view of its
node buffer, so verification compares node buffers against the oracle
instead of materializing per-rank copies.
"""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Sequence

from mcollsim.schedule import (
    BlockLayout,
    InterRound,
    IntraBcast,
    IntraGather,
    Rotate,
    Schedule,
    SendRecv,
)
from mcollsim.topology import Topology


class ExecutionFault(RuntimeError):
    """A schedule did something physically impossible at run time."""


def oracle_allgather(topo: Topology, layout: BlockLayout, payloads: Sequence[bytes]) -> bytes:
    """Ground truth, independent of any schedule: concat in global rank order."""
    if len(payloads) != topo.total_ranks:
        raise ValueError(
            f"expected {topo.total_ranks} payloads, got {len(payloads)}"
        )
    for g, p in enumerate(payloads):
        if len(p) != layout.per_proc_bytes:
            raise ValueError(
                f"payload {g} has {len(p)} bytes, expected {layout.per_proc_bytes}"
            )
    return b"".join(payloads)


def seeded_payloads(topo: Topology, layout: BlockLayout, seed: int) -> list[bytes]:
    rng = random.Random(seed)
    return [rng.randbytes(layout.per_proc_bytes) for _ in range(topo.total_ranks)]


def shuffle_actions(sched: Schedule, seed: int) -> Schedule:
    """Same schedule, actions within each round in a random order."""
    rng = random.Random(seed)
    phases = tuple(
        InterRound(tuple(rng.sample(p.actions, len(p.actions))))
        if isinstance(p, InterRound)
        else p
        for p in sched.phases
    )
    return replace(sched, phases=phases)


class Execution:
    """One run of a schedule over concrete payload bytes.

    `track_origins` keeps a parallel per-node list of which node's block
    currently occupies each slot (None = garbage).  Useful for debugging
    coverage; costs O(N^2) ints, so it stays off for big shapes.
    """

    def __init__(
        self,
        schedule: Schedule,
        payloads: Sequence[bytes],
        track_origins: bool = False,
    ) -> None:
        topo = schedule.topology
        layout = schedule.layout
        if len(payloads) != topo.total_ranks:
            raise ValueError(
                f"expected {topo.total_ranks} payloads, got {len(payloads)}"
            )
        for g, p in enumerate(payloads):
            if len(p) != layout.per_proc_bytes:
                raise ValueError(
                    f"payload {g} has {len(p)} bytes, expected {layout.per_proc_bytes}"
                )
        self.schedule = schedule
        self.payloads = list(payloads)
        self.buffers: list[bytearray] = [
            bytearray(layout.buffer_bytes) for _ in range(topo.num_nodes)
        ]
        self.origins: list[list[int | None]] | None = (
            [[None] * layout.num_blocks for _ in range(topo.num_nodes)]
            if track_origins
            else None
        )
        self.delivered = False
        self._ran = False

    def run(self) -> "Execution":
        if self._ran:
            raise ExecutionFault("execution already ran")
        self._ran = True
        for pi, phase in enumerate(self.schedule.phases):
            if isinstance(phase, IntraGather):
                self._gather()
            elif isinstance(phase, InterRound):
                self._round(pi, phase)
            elif isinstance(phase, Rotate):
                self._rotate()
            elif isinstance(phase, IntraBcast):
                self.delivered = True
            else:
                raise ExecutionFault(f"phase {pi}: unknown kind {type(phase).__name__}")
        return self

    def _gather(self) -> None:
        topo = self.schedule.topology
        m = self.schedule.layout.per_proc_bytes
        ppn = topo.procs_per_node
        for node in range(topo.num_nodes):
            buf = self.buffers[node]
            for r in range(ppn):
                buf[r * m : (r + 1) * m] = self.payloads[node * ppn + r]
            if self.origins is not None:
                self.origins[node][0] = node

    def _round(self, pi: int, phase: InterRound) -> None:
        layout = self.schedule.layout
        ppn = self.schedule.topology.procs_per_node
        cb = layout.block_bytes
        nb = layout.num_blocks

        by_actor: dict[int, SendRecv] = {}
        for a in phase.actions:
            if a.actor in by_actor:
                raise ExecutionFault(f"round {pi}: rank {a.actor} acts twice")
            by_actor[a.actor] = a

        # resolve every receive to the action that feeds it, collect the
        # per-node read/write footprints
        resolved: list[tuple[SendRecv, int, SendRecv, int]] = []
        reads: dict[int, list[tuple[int, int]]] = {}
        writes: dict[int, list[tuple[tuple[int, int], int]]] = {}
        for a in phase.actions:
            feeder = by_actor.get(a.src_rank)
            if feeder is None or feeder.dst_rank != a.actor:
                raise ExecutionFault(
                    f"round {pi}: rank {a.actor} expects data from {a.src_rank} "
                    "but nothing is sent"
                )
            if feeder.send_blocks[1] != a.recv_blocks[1]:
                raise ExecutionFault(
                    f"round {pi}: rank {a.src_rank} sends {feeder.send_blocks[1]} "
                    f"blocks, rank {a.actor} receives {a.recv_blocks[1]}"
                )
            if a.recv_blocks[0] + a.recv_blocks[1] > nb:
                raise ExecutionFault(
                    f"round {pi}: rank {a.actor} writes {a.recv_blocks} "
                    f"past {nb} blocks"
                )
            if feeder.send_blocks[0] + feeder.send_blocks[1] > nb:
                raise ExecutionFault(
                    f"round {pi}: rank {feeder.actor} reads {feeder.send_blocks} "
                    f"past {nb} blocks"
                )
            my_node = a.actor // ppn
            feeder_node = feeder.actor // ppn
            resolved.append((a, my_node, feeder, feeder_node))
            reads.setdefault(feeder_node, []).append(feeder.send_blocks)
            writes.setdefault(my_node, []).append((a.recv_blocks, a.actor))

        for node, ranges in writes.items():
            ranges.sort(key=lambda item: item[0][0])
            for (r1, rank1), (r2, rank2) in zip(ranges, ranges[1:]):
                if r2[0] < r1[0] + r1[1]:
                    raise ExecutionFault(
                        f"round {pi}: ranks {rank1} and {rank2} write overlapping "
                        f"ranges {r1} and {r2} on node {node}"
                    )

        # bulk-synchronous reads: snapshot only nodes whose buffer is both
        # read and written this round
        snaps: dict[int, bytes] = {}
        snap_origins: dict[int, list[int | None]] = {}
        for node, rranges in reads.items():
            wranges = writes.get(node)
            if not wranges:
                continue
            if any(
                r[0] < w[0][0] + w[0][1] and w[0][0] < r[0] + r[1]
                for r in rranges
                for w in wranges
            ):
                snaps[node] = bytes(self.buffers[node])
                if self.origins is not None:
                    snap_origins[node] = list(self.origins[node])

        for a, my_node, feeder, feeder_node in resolved:
            fs, fl = feeder.send_blocks
            rs, rl = a.recv_blocks
            src_buf = snaps.get(feeder_node, self.buffers[feeder_node])
            self.buffers[my_node][rs * cb : (rs + rl) * cb] = src_buf[
                fs * cb : (fs + fl) * cb
            ]
            if self.origins is not None:
                src_orig = snap_origins.get(feeder_node, self.origins[feeder_node])
                self.origins[my_node][rs : rs + rl] = src_orig[fs : fs + fl]

    def _rotate(self) -> None:
        layout = self.schedule.layout
        nb = layout.num_blocks
        cb = layout.block_bytes
        for node in range(self.schedule.topology.num_nodes):
            cut = ((nb - node) % nb) * cb
            if cut:
                buf = self.buffers[node]
                self.buffers[node] = buf[cut:] + buf[:cut]
            if self.origins is not None:
                cutb = (nb - node) % nb
                if cutb:
                    lst = self.origins[node]
                    self.origins[node] = lst[cutb:] + lst[:cutb]

    def output(self, global_rank: int) -> bytes:
        """The allgather result as seen by one process (post-bcast)."""
        if not self.delivered:
            raise ExecutionFault("no broadcast phase ran, outputs not delivered")
        node = global_rank // self.schedule.topology.procs_per_node
        return bytes(self.buffers[node])

    def verify(self, expected: bytes) -> list[str]:
        """Mismatch descriptions against the oracle bytes; empty means exact."""
        problems: list[str] = []
        if not self.delivered:
            problems.append("no broadcast phase ran")
        for node, buf in enumerate(self.buffers):
            if bytes(buf) != expected:
                if len(buf) != len(expected):
                    problems.append(
                        f"node {node}: buffer is {len(buf)} bytes, "
                        f"oracle is {len(expected)}"
                    )
                    continue
                first = next(i for i, (x, y) in enumerate(zip(buf, expected)) if x != y)
                problems.append(f"node {node}: first mismatch at byte {first}")
        return problems

    def check_coverage(self) -> list[str]:
        """With origin tracking on: every slot must hold its own node's block."""
        if self.origins is None:
            raise ExecutionFault("origins were not tracked")
        problems = []
        for node, labels in enumerate(self.origins):
            bad = [i for i, lab in enumerate(labels) if lab != i]
            if bad:
                problems.append(f"node {node}: slots {bad[:8]} hold wrong blocks")
        return problems


def run_schedule(
    sched: Schedule, payloads: Sequence[bytes], track_origins: bool = False
) -> Execution:
    return Execution(sched, payloads, track_origins=track_origins).run()


def verify_schedule_output(sched: Schedule, payloads: Sequence[bytes]) -> list[str]:
    """Run and compare against the oracle; returns mismatch descriptions."""
    expected = oracle_allgather(sched.topology, sched.layout, payloads)
    return run_schedule(sched, payloads).verify(expected)
