"""Parallel multi-case runner.

Each case is an isolated process with its own seed-derived RNG streams
and its own output directory, so results are bit-identical to running
the same spec serially.  A failing case is reported without aborting its
siblings.
"""
from __future__ import annotations

import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import CaseSpec
from .engine import run_case


@dataclass
class CaseResult:
    spec: CaseSpec
    ok: bool
    out_dir: str = ""
    error: str = ""


def _run_one(spec: CaseSpec) -> CaseResult:
    try:
        record = run_case(spec)
        return CaseResult(spec=spec, ok=True, out_dir=str(record.out_dir))
    except Exception:
        return CaseResult(spec=spec, ok=False, error=traceback.format_exc())


def run_parallel(specs: list[CaseSpec], workers: int = 1) -> list[CaseResult]:
    """Run cases across `workers` processes; results follow spec order."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    outs = {Path(s.out).resolve() for s in specs}
    if len(outs) != len(specs):
        raise ValueError("case output directories must be disjoint")
    if workers == 1:
        return [_run_one(s) for s in specs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_one, s) for s in specs]
        return [f.result() for f in futures]


def load_manifest(path) -> list[CaseSpec]:
    with open(path) as f:
        obj = json.load(f)
    if not isinstance(obj, list):
        raise ValueError("case manifest must be a JSON list")
    return [CaseSpec(**entry) for entry in obj]
