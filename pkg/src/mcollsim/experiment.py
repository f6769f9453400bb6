"""Experiment drivers: correctness runs, cost sweeps, schedule export.

Everything here is deterministic for a fixed config: payloads come from
the seed, simulated times from the params preset, and the CSV renderer
uses fixed formatting with LF newlines, so identical configs produce
byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mcollsim.algorithms import ALGORITHMS, UnsupportedShapeError, build_schedule
from mcollsim.costmodel import PhaseTime, resolve_params, simulate
from mcollsim.executor import seeded_payloads, verify_schedule_output
from mcollsim.schedule import schedule_to_json, validate_schedule
from mcollsim.topology import Topology

CSV_HEADER = (
    "algo,transport,nodes,ppn,msg_bytes,sim_time_us,"
    "inter_rounds,max_msgs_per_rank,wire_bytes"
)

DEFAULT_SWEEP_SIZES = (16, 32, 64, 128, 256, 512)
DEFAULT_VERIFY_SIZES = (16,)

_CONFIG_KEYS = ("nodes", "ppn", "algos", "sizes", "transport", "params", "seed")


@dataclass(frozen=True)
class ExperimentConfig:
    nodes: int = 128
    ppn: int = 18
    algos: tuple[str, ...] = ALGORITHMS
    sizes: tuple[int, ...] = DEFAULT_SWEEP_SIZES
    transport: str = "pip"
    params: str = "opa-broadwell"
    seed: int = 0


def config_from_sources(
    flags: dict,
    file_cfg: dict | None = None,
    env_params: str | None = None,
    default_sizes: tuple[int, ...] = DEFAULT_SWEEP_SIZES,
) -> ExperimentConfig:
    """Merge config sources; flags beat the file, the file beats the env."""
    merged: dict = {}
    if env_params:
        merged["params"] = env_params
    if file_cfg is not None:
        unknown = sorted(set(file_cfg) - set(_CONFIG_KEYS))
        if unknown:
            raise ValueError(f"unknown config keys {unknown}, expected {_CONFIG_KEYS}")
        merged.update(file_cfg)
    merged.update({k: v for k, v in flags.items() if v is not None})

    algos = tuple(merged.get("algos", ALGORITHMS))
    for algo in algos:
        if algo not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {algo!r}, expected one of {', '.join(ALGORITHMS)}"
            )
    sizes = tuple(int(s) for s in merged.get("sizes", default_sizes))
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError(f"sizes must be positive byte counts, got {sizes}")
    return ExperimentConfig(
        nodes=int(merged.get("nodes", 128)),
        ppn=int(merged.get("ppn", 18)),
        algos=algos,
        sizes=sizes,
        transport=str(merged.get("transport", "pip")),
        params=str(merged.get("params", "opa-broadwell")),
        seed=int(merged.get("seed", 0)),
    )


@dataclass(frozen=True)
class VerifyResult:
    algo: str
    msg_bytes: int
    status: str  # "ok" | "fail" | "skip"
    detail: str = ""


@dataclass(frozen=True)
class VerifyOutcome:
    ok: bool
    nodes: int
    ppn: int
    results: tuple[VerifyResult, ...]


def run_verify(cfg: ExperimentConfig) -> VerifyOutcome:
    """Execute every algo/size combo and compare bytes against the oracle."""
    topo = Topology(cfg.nodes, cfg.ppn)
    results: list[VerifyResult] = []
    for algo in cfg.algos:
        for m in cfg.sizes:
            try:
                sched = build_schedule(algo, topo, m)
            except UnsupportedShapeError as exc:
                results.append(VerifyResult(algo, m, "skip", str(exc)))
                continue
            violations = validate_schedule(sched)
            if violations:
                v = violations[0]
                results.append(
                    VerifyResult(
                        algo, m, "fail",
                        f"{len(violations)} schedule violations, first: "
                        f"{v.kind} ({v.detail})",
                    )
                )
                continue
            payloads = seeded_payloads(sched.topology, sched.layout, cfg.seed)
            problems = verify_schedule_output(sched, payloads)
            if problems:
                results.append(VerifyResult(algo, m, "fail", "; ".join(problems[:3])))
            else:
                results.append(VerifyResult(algo, m, "ok"))
    ok = not any(r.status == "fail" for r in results)
    return VerifyOutcome(ok=ok, nodes=cfg.nodes, ppn=cfg.ppn, results=tuple(results))


@dataclass(frozen=True)
class SweepRow:
    algo: str
    transport: str
    nodes: int
    ppn: int
    msg_bytes: int
    sim_time_us: float
    inter_rounds: int
    max_msgs_per_rank: int
    wire_bytes: int

    def csv_line(self) -> str:
        return (
            f"{self.algo},{self.transport},{self.nodes},{self.ppn},"
            f"{self.msg_bytes},{self.sim_time_us:.6f},{self.inter_rounds},"
            f"{self.max_msgs_per_rank},{self.wire_bytes}"
        )


@dataclass(frozen=True)
class SweepOutcome:
    csv: str
    rows: tuple[SweepRow, ...]
    skipped: tuple[str, ...]


def rows_to_csv(rows: tuple[SweepRow, ...] | list[SweepRow]) -> str:
    return "\n".join([CSV_HEADER, *(r.csv_line() for r in rows)]) + "\n"


def run_sweep(cfg: ExperimentConfig) -> SweepOutcome:
    """Simulated time per algo/size on one transport; shapes an algo cannot
    run are skipped, not failed, so mixed algo lists work on any topology."""
    params = resolve_params(cfg.params)
    topo = Topology(cfg.nodes, cfg.ppn)
    rows: list[SweepRow] = []
    skipped: list[str] = []
    for algo in cfg.algos:
        for m in cfg.sizes:
            try:
                sched = build_schedule(algo, topo, m)
            except UnsupportedShapeError as exc:
                skipped.append(f"{algo} at {m} B: {exc}")
                continue
            rep = simulate(sched, params, cfg.transport)
            rows.append(
                SweepRow(
                    algo=algo,
                    transport=cfg.transport,
                    nodes=cfg.nodes,  # requested shape, not the flattened one
                    ppn=cfg.ppn,
                    msg_bytes=m,
                    sim_time_us=rep.sim_time_us,
                    inter_rounds=rep.inter_rounds,
                    max_msgs_per_rank=rep.msgs_per_rank_max,
                    wire_bytes=rep.bytes_on_wire_total,
                )
            )
    return SweepOutcome(csv=rows_to_csv(rows), rows=tuple(rows), skipped=tuple(skipped))


def run_simulate(
    cfg: ExperimentConfig, algo: str, msg_bytes: int
) -> tuple[SweepRow, tuple[PhaseTime, ...]]:
    """One combo with the per-phase breakdown kept."""
    params = resolve_params(cfg.params)
    topo = Topology(cfg.nodes, cfg.ppn)
    sched = build_schedule(algo, topo, msg_bytes)
    rep = simulate(sched, params, cfg.transport)
    row = SweepRow(
        algo=algo,
        transport=cfg.transport,
        nodes=cfg.nodes,
        ppn=cfg.ppn,
        msg_bytes=msg_bytes,
        sim_time_us=rep.sim_time_us,
        inter_rounds=rep.inter_rounds,
        max_msgs_per_rank=rep.msgs_per_rank_max,
        wire_bytes=rep.bytes_on_wire_total,
    )
    return row, rep.phase_times


def run_dump(cfg: ExperimentConfig, algo: str, msg_bytes: int) -> str:
    topo = Topology(cfg.nodes, cfg.ppn)
    return schedule_to_json(build_schedule(algo, topo, msg_bytes))


def write_text(path: str, text: str) -> None:
    # newline="" keeps the LF endings byte-exact on every platform
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def sweep_svg(rows: list[SweepRow] | tuple[SweepRow, ...]) -> str:
    """Dependency-free chart: simulated time per message size, log-x axis."""
    if not rows:
        raise ValueError("nothing to plot")
    width, height = 720, 440
    ml, mr, mt, mb = 64, 170, 28, 52
    pw, ph = width - ml - mr, height - mt - mb

    sizes = sorted({r.msg_bytes for r in rows})
    algos = list(dict.fromkeys(r.algo for r in rows))
    tmax = max(r.sim_time_us for r in rows) or 1.0
    lo, hi = math.log(sizes[0]), math.log(sizes[-1])

    def x(size: int) -> float:
        if hi == lo:
            return ml + pw / 2
        return ml + pw * (math.log(size) - lo) / (hi - lo)

    def y(t: float) -> float:
        return mt + ph * (1.0 - t / tmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="#444"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="#444"/>',
    ]
    for s in sizes:
        xs = x(s)
        parts.append(
            f'<line x1="{xs:.1f}" y1="{mt + ph}" x2="{xs:.1f}" y2="{mt + ph + 4}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{xs:.1f}" y="{mt + ph + 18}" text-anchor="middle">{s}</text>'
        )
    for i in range(5):
        t = tmax * i / 4
        ys = y(t)
        parts.append(f'<line x1="{ml - 4}" y1="{ys:.1f}" x2="{ml}" y2="{ys:.1f}" stroke="#444"/>')
        parts.append(
            f'<text x="{ml - 8}" y="{ys + 4:.1f}" text-anchor="end">{t:.1f}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">'
        "message size (B, log scale)</text>"
    )
    parts.append(
        f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {mt + ph / 2:.1f})">simulated time (us)</text>'
    )
    for idx, algo in enumerate(algos):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = sorted(
            ((r.msg_bytes, r.sim_time_us) for r in rows if r.algo == algo)
        )
        coords = " ".join(f"{x(s):.1f},{y(t):.1f}" for s, t in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        ly = mt + 16 + idx * 18
        lx = ml + pw + 14
        parts.append(
            f'<rect x="{lx}" y="{ly - 9}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(f'<text x="{lx + 18}" y="{ly + 2}">{algo}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_sweep_svg(rows, path: str) -> None:
    write_text(path, sweep_svg(rows))
