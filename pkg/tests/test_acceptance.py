"""End-to-end behavioral checks for the whole stack.

Each test covers one headline property: byte-exactness against the
oracle over a large shape grid, the round-count and remainder algebra,
the single-process degeneracy, the simulated-time orderings, executor
order-invariance, and sweep determinism.  Every test prints one
[PASS]/[FAIL] line so a teed pytest run doubles as a checklist.
"""

import csv
import io
import random
import time

from mcollsim.algorithms import (
    ALGORITHMS,
    build_schedule,
    remainder_plan,
)
from mcollsim.costmodel import (
    crossover_bytes,
    default_transports,
    preset_params,
    simulate,
)
from mcollsim.executor import run_schedule, seeded_payloads, shuffle_actions, verify_schedule_output
from mcollsim.experiment import (
    DEFAULT_SWEEP_SIZES,
    ExperimentConfig,
    run_sweep,
    write_text,
)
from mcollsim.schedule import InterRound
from mcollsim.topology import Topology


def _report(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def _rounds(sched) -> int:
    return sum(isinstance(ph, InterRound) for ph in sched.phases)


def _is_pow2(n: int) -> bool:
    return n & (n - 1) == 0


def test_every_builder_is_byte_exact_against_the_oracle():
    n_grid = (*range(1, 21), 31, 32, 33, 64, 128)
    p_grid = (1, 2, 3, 4, 18)
    sizes = (1, 16, 256)
    combos = 0
    failures: list[str] = []
    start = time.monotonic()
    for n in n_grid:
        for p in p_grid:
            topo = Topology(n, p)
            for algo in ALGORITHMS:
                if algo == "recursive_doubling" and not _is_pow2(n):
                    continue
                for m in sizes:
                    sched = build_schedule(algo, topo, m)
                    payloads = seeded_payloads(sched.topology, sched.layout, 0)
                    problems = verify_schedule_output(sched, payloads)
                    combos += 1
                    if problems:
                        failures.append(f"{algo} N={n} P={p} m={m}: {problems[0]}")
    elapsed = time.monotonic() - start
    detail = failures[0] if failures else (
        f"{combos} algo/shape/size combos byte-identical in {elapsed:.1f}s"
    )
    if not failures and elapsed >= 60:
        failures.append(f"too slow: {elapsed:.1f}s for {combos} combos")
        detail = failures[-1]
    _report("executed schedules match the brute-force oracle", not failures, detail)


def test_round_counts_match_the_construction():
    checks = {
        "mcoll at 128 nodes, 18 per node": (
            _rounds(build_schedule("mcoll", Topology(128, 18), 16)), 2
        ),
        "mcoll at 64 nodes, 3 per node": (
            _rounds(build_schedule("mcoll", Topology(64, 3), 16)), 3
        ),
        "mcoll(64,3) remainder blocks": (remainder_plan(64, 3).total, 0),
        "bruck2 at 128 nodes": (
            _rounds(build_schedule("bruck2", Topology(128, 1), 16)), 7
        ),
    }
    for n in (2, 5, 16, 33):
        checks[f"ring at {n} nodes"] = (
            _rounds(build_schedule("ring", Topology(n, 1), 16)), n - 1
        )
    bad = {k: v for k, v in checks.items() if v[0] != v[1]}
    detail = ", ".join(f"{k}: got {g}, want {w}" for k, (g, w) in bad.items()) or (
        "mcoll 2 @ (128,18) and 3 @ (64,3), bruck2 7 @ 128, ring N-1"
    )
    _report("round counts match the dissemination construction", not bad, detail)


def test_remainder_blocks_are_conserved():
    rng = random.Random(1729)
    bad: list[str] = []
    for _ in range(1000):
        n = rng.randint(1, 4096)
        p = rng.randint(1, 64)
        plan = remainder_plan(n, p)
        if plan.total != n - plan.final_step:
            bad.append(f"N={n} P={p}: {plan.total} != {n - plan.final_step}")
    frozen = remainder_plan(128, 18).counts
    want = (19, 19, 19, 19, 19, 14) + (0,) * 12
    if frozen != want:
        bad.append(f"counts at (128,18): {frozen}")
    _report(
        "remainder split always covers exactly the outstanding blocks",
        not bad,
        bad[0] if bad else "1000 random (N,P) pairs plus the (128,18) table",
    )


def test_single_process_shape_degenerates_to_bruck2():
    bad = [
        n
        for n in range(2, 34)
        if build_schedule("mcoll", Topology(n, 1), 16).phases
        != build_schedule("bruck2", Topology(n, 1), 16).phases
    ]
    _report(
        "mcoll with one process per node emits bruck2's schedule",
        not bad,
        f"differs at N={bad}" if bad else "phases identical for N in 2..33",
    )


def test_mcoll_is_fastest_at_scale():
    cfg = ExperimentConfig(
        nodes=128,
        ppn=18,
        algos=("mcoll", "bruck2", "ring", "flat_bruck"),
        sizes=DEFAULT_SWEEP_SIZES,
        transport="pip",
        params="opa-broadwell",
    )
    out = run_sweep(cfg)
    times: dict[int, dict[str, float]] = {}
    for row in csv.DictReader(io.StringIO(out.csv)):
        times.setdefault(int(row["msg_bytes"]), {})[row["algo"]] = float(
            row["sim_time_us"]
        )
    bad: list[str] = []
    ratios: list[str] = []
    for m in DEFAULT_SWEEP_SIZES:
        per_algo = times[m]
        rivals = {a: t for a, t in per_algo.items() if a != "mcoll"}
        best_rival = min(rivals.values())
        if not per_algo["mcoll"] < best_rival:
            slower = min(rivals, key=rivals.get)
            bad.append(f"{m} B: mcoll {per_algo['mcoll']:.3f} us >= {slower}")
        ratios.append(f"{m}B x{best_rival / per_algo['mcoll']:.3f}")
    _report(
        "mcoll simulates strictly fastest at 128 nodes x 18 ppn",
        not bad,
        bad[0] if bad else "best-rival/mcoll: " + ", ".join(ratios),
    )


def test_transport_ordering_and_crossover():
    params = preset_params("opa-broadwell")
    topo = Topology(128, 18)
    bad: list[str] = []
    for m in DEFAULT_SWEEP_SIZES:
        sched = build_schedule("mcoll", topo, m)
        pip = simulate(sched, params, "pip").phase_times
        for rival in ("cma", "posix_shmem"):
            other = simulate(sched, params, rival).phase_times
            for a, b in zip(pip, other):
                if a.seconds > b.seconds:
                    bad.append(f"{m} B {rival} {a.phase}: pip slower")
    t = default_transports()
    cross = crossover_bytes(t["cma"], t["posix_shmem"])
    analytic = t["cma"].per_op_overhead / t["cma"].copy_beta
    if cross is None or abs(cross - analytic) > 1:
        bad.append(f"cma/posix crossover {cross}, analytic {analytic:.1f}")
    _report(
        "pip bounds cma and posix_shmem; crossover matches the closed form",
        not bad,
        bad[0] if bad else f"crossover at {cross} B (analytic {analytic:.0f})",
    )


def test_action_order_cannot_change_any_byte():
    sched = build_schedule("mcoll", Topology(10, 2), 16)
    payloads = seeded_payloads(sched.topology, sched.layout, 7)
    base = run_schedule(sched, payloads).buffers
    bad = [
        seed
        for seed in range(100)
        if run_schedule(shuffle_actions(sched, seed), payloads).buffers != base
    ]
    _report(
        "shuffling in-round action order changes no output byte",
        not bad,
        f"diverged at seeds {bad[:5]}" if bad else "100 shuffle seeds identical",
    )


def test_sweep_output_is_byte_deterministic(tmp_path):
    cfg = ExperimentConfig()
    first = run_sweep(cfg)
    second = run_sweep(cfg)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_text(str(a), first.csv)
    write_text(str(b), second.csv)
    same = first.csv == second.csv and a.read_bytes() == b.read_bytes()
    _report(
        "identical sweep configs produce byte-identical CSV",
        same,
        f"{len(first.csv.splitlines()) - 1} rows, {len(a.read_bytes())} bytes",
    )
