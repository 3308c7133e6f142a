#!/usr/bin/env python3
# SPDX-FileCopyrightText: Copyright (c) 2024-2025 NVIDIA CORPORATION & AFFILIATES. All rights reserved.
# SPDX-License-Identifier: BSD 2-Clause License

"""Risk-averse planning with next-best-view selection.

Usage:
    python pipeline_risk_nbv.py run --config riskview/mock_data/corridor_with_pocket_config.json --out out/
    python pipeline_risk_nbv.py riskfield --scene riskview/mock_data/corridor_with_pocket_gt.json --out alpha.csv
    python pipeline_risk_nbv.py sweep-yaw --config <config.json> --waypoint 4,8,4

Exit codes: 0 success, 2 blocked plan, 1 any other error.
"""

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from loguru import logger

from riskview.errors import PlanBlockedError, RiskViewError
from riskview.pipeline import (
    ENV_LOG_LEVEL,
    ENV_OUTPUT_DIR,
    lattice_for_scene,
    load_config,
    run_episode,
    sweep_yaw_at,
)
from riskview.risk import DEFAULT_EPSILON, build_risk_field, write_risk_csv
from riskview.scene import load_scene

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BLOCKED = 2


def _configure_logging(verbose: int) -> None:
    logger.remove()
    if verbose >= 2:
        level = "TRACE"
    elif verbose >= 1:
        level = "DEBUG"
    else:
        level = os.getenv(ENV_LOG_LEVEL, "INFO").upper()
    logger.add(sys.stderr, level=level)


def _parse_ijk(text: str) -> Tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected i,j,k but got {text!r}")
    try:
        i, j, k = (int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"lattice indices must be integers: {text!r}") from exc
    return i, j, k


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Risk-averse planning with next-best-view selection")
    parser.add_argument("--verbose", "-v", action="count", default=0, help="Increase logging verbosity")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Execute one episode and write its report")
    run.add_argument("--config", required=True, type=Path, help="Episode config (JSON)")
    run.add_argument("--out", type=Path, default=None, help=f"Output directory (default: ${ENV_OUTPUT_DIR} or config)")

    field = sub.add_parser("riskfield", help="Dump the risk field of a scene as CSV")
    field.add_argument("--scene", required=True, type=Path, help="Scene file (JSON)")
    field.add_argument("--out", required=True, type=Path, help="CSV destination")
    field.add_argument("--spacing", type=float, default=0.25, help="Lattice spacing in meters (default: 0.25)")
    field.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="Risk level (default: 0.05)")

    sweep = sub.add_parser("sweep-yaw", help="Dense EIG-vs-yaw CSV at one lattice vertex")
    sweep.add_argument("--config", required=True, type=Path, help="Episode config (JSON)")
    sweep.add_argument("--waypoint", required=True, type=_parse_ijk, help="Lattice vertex as i,j,k")
    sweep.add_argument("--samples", type=int, default=360, help="Number of yaw samples (default: 360)")
    sweep.add_argument("--out", type=Path, default=None, help="CSV destination (default: stdout)")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    out = args.out or config.output_dir or Path(os.getenv(ENV_OUTPUT_DIR, "out"))
    report = run_episode(config, out_dir=out)
    return EXIT_BLOCKED if report.status == "blocked" else EXIT_OK


def _cmd_riskfield(args: argparse.Namespace) -> int:
    scene = load_scene(args.scene)
    lattice = lattice_for_scene(scene, args.spacing)
    field = build_risk_field(scene, lattice, args.epsilon)
    write_risk_csv(field, args.out)
    logger.info(f"Risk field over {lattice.vertex_count} vertices written to {args.out}")
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    yaws, eigs = sweep_yaw_at(config, args.waypoint, args.samples)
    handle = args.out.open("w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(["yaw", "eig"])
        for y, e in zip(yaws, eigs):
            writer.writerow([repr(float(y)), repr(float(e))])
    finally:
        if args.out:
            handle.close()
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(override=False)
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    handlers = {"run": _cmd_run, "riskfield": _cmd_riskfield, "sweep-yaw": _cmd_sweep}
    try:
        return handlers[args.command](args)
    except PlanBlockedError as exc:
        logger.error(f"Plan blocked: {exc.diagnostic}")
        return EXIT_BLOCKED
    except (RiskViewError, OSError, ValueError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
