"""Thin command-line client for the service.

By default the app runs in-process (httpx ASGI transport, no sockets);
`--server URL` talks to a live instance instead.  Exit codes: 0 success,
1 verification mismatch, 2 bad usage or config, 3 internal/transport
error.
"""

from __future__ import annotations

import argparse
import asyncio
import csv
import io
import json
import os
import sys

import httpx

from mcollsim.experiment import (
    DEFAULT_VERIFY_SIZES,
    ExperimentConfig,
    SweepRow,
    config_from_sources,
    write_sweep_svg,
    write_text,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


def _request(server: str | None, method: str, path: str, body: dict | None):
    """One HTTP exchange, in-process unless a server URL is given."""

    async def go():
        if server:
            client = httpx.AsyncClient(base_url=server, timeout=600.0)
        else:
            from mcollsim.service import create_app

            client = httpx.AsyncClient(
                transport=httpx.ASGITransport(app=create_app()),
                base_url="http://mcollsim.internal",
                timeout=600.0,
            )
        async with client:
            resp = await client.request(method, path, json=body)
            try:
                doc = resp.json()
            except ValueError:
                doc = {"detail": resp.text}
            return resp.status_code, doc

    return asyncio.run(go())


def _fail_http(status: int, doc: dict) -> int:
    detail = doc.get("detail", doc)
    print(f"error: HTTP {status}: {detail}", file=sys.stderr)
    return EXIT_CONFIG if status in (400, 422) else EXIT_INTERNAL


def _emit(text: str, out: str | None) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)


def _comma_list(raw: str | None) -> list[str] | None:
    if raw is None:
        return None
    items = [part.strip() for part in raw.split(",") if part.strip()]
    if not items:
        raise ValueError(f"empty list {raw!r}")
    return items


def _load_config(args) -> ExperimentConfig:
    flags = {
        "nodes": args.nodes,
        "ppn": args.ppn,
        "algos": _comma_list(args.algos),
        "transport": args.transport,
        "params": args.params,
        "seed": args.seed,
    }
    raw_sizes = _comma_list(args.sizes)
    flags["sizes"] = [int(s) for s in raw_sizes] if raw_sizes is not None else None
    file_cfg = None
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
    default_sizes = (
        DEFAULT_VERIFY_SIZES if args.command == "verify" else None
    )
    kwargs = {"default_sizes": default_sizes} if default_sizes else {}
    return config_from_sources(
        flags, file_cfg, os.environ.get("MCOLL_PRESET"), **kwargs
    )


def _cmd_verify(args, cfg: ExperimentConfig) -> int:
    body = {
        "nodes": cfg.nodes,
        "ppn": cfg.ppn,
        "algos": list(cfg.algos),
        "sizes": list(cfg.sizes),
        "seed": cfg.seed,
    }
    status, doc = _request(args.server, "POST", "/verify", body)
    if status != 200:
        return _fail_http(status, doc)
    lines = []
    for r in doc["results"]:
        line = (
            f"{r['status']:<4} {r['algo']:<18} nodes={doc['nodes']} "
            f"ppn={doc['ppn']} msg_bytes={r['msg_bytes']}"
        )
        if r.get("detail"):
            line += f"  ({r['detail']})"
        lines.append(line)
    counts = {"ok": 0, "fail": 0, "skip": 0}
    for r in doc["results"]:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    lines.append(
        f"verified {counts['ok']} combos, {counts['fail']} failed, "
        f"{counts['skip']} skipped"
    )
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if doc["ok"] else EXIT_MISMATCH


def _cmd_simulate(args, cfg: ExperimentConfig) -> int:
    body = {
        "nodes": cfg.nodes,
        "ppn": cfg.ppn,
        "algo": cfg.algos[0],
        "msg_bytes": cfg.sizes[0],
        "transport": cfg.transport,
        "params": cfg.params,
    }
    status, doc = _request(args.server, "POST", "/simulate", body)
    if status != 200:
        return _fail_http(status, doc)
    lines = [
        f"algo={doc['algo']} transport={doc['transport']} nodes={doc['nodes']} "
        f"ppn={doc['ppn']} msg_bytes={doc['msg_bytes']}",
        f"sim_time_us={doc['sim_time_us']:.6f} inter_rounds={doc['inter_rounds']} "
        f"max_msgs_per_rank={doc['max_msgs_per_rank']} wire_bytes={doc['wire_bytes']}",
    ]
    for pt in doc["phases"]:
        lines.append(f"  {pt['phase']:<14} {pt['time_us']:.6f} us")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_sweep(args, cfg: ExperimentConfig) -> int:
    body = {
        "nodes": cfg.nodes,
        "ppn": cfg.ppn,
        "algos": list(cfg.algos),
        "sizes": list(cfg.sizes),
        "transport": cfg.transport,
        "params": cfg.params,
        "seed": cfg.seed,
    }
    status, doc = _request(args.server, "POST", "/sweep", body)
    if status != 200:
        return _fail_http(status, doc)
    for note in doc.get("skipped", []):
        print(f"skipped: {note}", file=sys.stderr)
    _emit(doc["csv"], args.out)
    if args.svg:
        rows = _rows_from_csv(doc["csv"])
        write_sweep_svg(rows, args.svg)
    return EXIT_OK


def _rows_from_csv(text: str) -> list[SweepRow]:
    reader = csv.DictReader(io.StringIO(text))
    return [
        SweepRow(
            algo=r["algo"],
            transport=r["transport"],
            nodes=int(r["nodes"]),
            ppn=int(r["ppn"]),
            msg_bytes=int(r["msg_bytes"]),
            sim_time_us=float(r["sim_time_us"]),
            inter_rounds=int(r["inter_rounds"]),
            max_msgs_per_rank=int(r["max_msgs_per_rank"]),
            wire_bytes=int(r["wire_bytes"]),
        )
        for r in reader
    ]


def _cmd_dump(args, cfg: ExperimentConfig) -> int:
    body = {
        "nodes": cfg.nodes,
        "ppn": cfg.ppn,
        "algo": cfg.algos[0],
        "msg_bytes": cfg.sizes[0],
    }
    status, doc = _request(args.server, "POST", "/dump", body)
    if status != 200:
        return _fail_http(status, doc)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


_COMMANDS = {
    "verify": _cmd_verify,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "dump": _cmd_dump,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcollsim",
        description="Build, check, and price node-level allgather schedules.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nodes", type=int, help="number of nodes (default 128)")
    common.add_argument("--ppn", type=int, help="processes per node (default 18)")
    common.add_argument("--algos", help="comma-separated algorithm list")
    common.add_argument("--sizes", help="comma-separated message sizes in bytes")
    common.add_argument("--transport", help="pip | posix_shmem | cma | xpmem")
    common.add_argument(
        "--params",
        help="cost preset (opa-broadwell, zero, pip-mpich-baseline) or a JSON file; "
        "MCOLL_PRESET env var supplies the fallback",
    )
    common.add_argument("--seed", type=int, help="payload seed (default 0)")
    common.add_argument("--config", help="JSON config file; explicit flags win")
    common.add_argument("--server", help="base URL of a running service instance")
    common.add_argument("--out", help="write output to this file instead of stdout")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "verify", parents=[common], help="run schedules and compare bytes to the oracle"
    )
    sub.add_parser(
        "simulate", parents=[common], help="price one algo/size combo with phase breakdown"
    )
    p_sweep = sub.add_parser(
        "sweep", parents=[common], help="CSV of simulated times over a size grid"
    )
    p_sweep.add_argument("--svg", help="also render the sweep as an SVG chart")
    sub.add_parser("dump", parents=[common], help="print one schedule as JSON")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, cfg)
    except httpx.HTTPError as exc:
        print(f"error: transport failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
