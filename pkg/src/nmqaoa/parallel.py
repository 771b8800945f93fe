"""Process-pool plumbing with order-preserving result assembly.

Work units (trajectory chunks, sweep points, gradient probes) are pure
functions of an immutable shared payload plus a small task descriptor, so the
same task list gives the same results for any worker count.
"""
from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

_PAYLOAD = None


def resolve_workers(cli_value=None) -> int:
    """CLI flag wins, then NMQAOA_WORKERS, then 1."""
    if cli_value:
        return max(1, int(cli_value))
    env = os.environ.get("NMQAOA_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def get_payload():
    return _PAYLOAD


def _set_payload(payload):
    global _PAYLOAD
    _PAYLOAD = payload


def run_indexed(fn, payload, tasks, workers: int = 1):
    """Run fn over tasks with the payload installed; results in task order."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        _set_payload(payload)
        try:
            return [fn(t) for t in tasks]
        finally:
            _set_payload(None)
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx,
                             initializer=_set_payload,
                             initargs=(payload,)) as pool:
        return list(pool.map(fn, tasks))
