"""Node/process layout and rank arithmetic for hierarchical collectives.

Ranks are laid out node-major: all processes of node 0, then node 1, and
so on.  Every module above this one talks in global ranks; the helpers
here are the only place the node/local split is computed.
"""

from __future__ import annotations

from dataclasses import dataclass


class TopologyError(ValueError):
    """Raised for out-of-range ranks, nodes, or degenerate offsets."""


@dataclass(frozen=True)
class Topology:
    num_nodes: int
    procs_per_node: int

    def __post_init__(self) -> None:
        if self.num_nodes < 1:
            raise TopologyError(f"num_nodes must be >= 1, got {self.num_nodes}")
        if self.procs_per_node < 1:
            raise TopologyError(
                f"procs_per_node must be >= 1, got {self.procs_per_node}"
            )

    @property
    def total_ranks(self) -> int:
        return self.num_nodes * self.procs_per_node


@dataclass(frozen=True)
class RankCoord:
    node_id: int
    local_rank: int
    global_rank: int


def compose_rank(topo: Topology, node_id: int, local_rank: int) -> int:
    """Global rank of process `local_rank` on `node_id` (node-major order)."""
    if not 0 <= node_id < topo.num_nodes:
        raise TopologyError(f"node_id {node_id} out of range [0, {topo.num_nodes})")
    if not 0 <= local_rank < topo.procs_per_node:
        raise TopologyError(
            f"local_rank {local_rank} out of range [0, {topo.procs_per_node})"
        )
    return node_id * topo.procs_per_node + local_rank


def decompose_rank(topo: Topology, global_rank: int) -> RankCoord:
    if not 0 <= global_rank < topo.total_ranks:
        raise TopologyError(
            f"global_rank {global_rank} out of range [0, {topo.total_ranks})"
        )
    node_id, local_rank = divmod(global_rank, topo.procs_per_node)
    return RankCoord(node_id, local_rank, global_rank)


def paired_nodes(topo: Topology, node_id: int, offset: int) -> tuple[int, int]:
    """Peers of `node_id` on the node ring at distance `offset`.

    Returns (src_node, dst_node): the node whose data arrives here, and the
    node this one sends to.  Offsets that alias the node itself (0 mod N)
    are rejected; a self-message is never a legal schedule action.
    """
    if not 0 <= node_id < topo.num_nodes:
        raise TopologyError(f"node_id {node_id} out of range [0, {topo.num_nodes})")
    if offset % topo.num_nodes == 0:
        raise TopologyError(f"offset {offset} aliases node {node_id} itself")
    src = (node_id + offset) % topo.num_nodes
    dst = (node_id - offset) % topo.num_nodes
    return src, dst
