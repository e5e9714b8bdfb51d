"""Execution engines: serial, synchronous waves, and asynchronous k-threshold.

The asynchronous protocol mirrors a master/worker channel design with
in-memory bounded queues: the coordinator publishes immutable versioned
decisions, workers pull (version, item) work and push result envelopes back,
and the coordinator publishes version v+1 as soon as ceil(kappa * n) results
for version v have arrived.  Every published version's full item set is
still processed (late results are incorporated), and convergence is only
checked on versions whose n results are all in.  Workers are handed items of
the newest version only; intermediate versions a stale worker never saw are
not revisited.
"""

from __future__ import annotations

import math
import os
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ConfigError, DeadlockError, StochLPError, WorkerPanic

ENV_WORKERS = "STOCHLP_WORKERS"


@dataclass
class ExecConfig:
    mode: str = "serial"           # serial | sync | async
    workers: int = 1
    kappa: float = 0.5
    queue_capacity: int = None     # default 2 * n items
    watchdog: float = 60.0

    def __post_init__(self):
        if self.mode not in ("serial", "sync", "async"):
            raise ConfigError(f"execution mode must be serial, sync or async, got {self.mode!r}")
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError("kappa must lie in (0, 1]")

    @classmethod
    def parse(cls, text, workers=None):
        """Parse a --exec flag value: serial, sync, or async:KAPPA."""
        text = text.strip()
        if text == "serial":
            cfg = cls(mode="serial")
        elif text == "sync":
            cfg = cls(mode="sync")
        elif text.startswith("async"):
            kappa = 0.5
            if ":" in text:
                kappa = float(text.split(":", 1)[1])
            cfg = cls(mode="async", kappa=kappa)
        else:
            raise ConfigError(f"unknown execution mode {text!r}")
        if workers is None:
            workers = int(os.environ.get(ENV_WORKERS, "1") or 1)
        cfg.workers = max(1, workers)
        return cfg


@dataclass(frozen=True)
class WorkItem:
    version: int
    index: int


@dataclass(frozen=True)
class VersionedDecision:
    version: int
    payload: object     # immutable decision data (e.g. the candidate x)
    iteration: int = 0


@dataclass
class ResultEnvelope:
    worker: object
    version: int
    index: int
    payload: object
    wall: float = 0.0
    error: BaseException = None


def run_wave(items, worker_fn, workers=1, pool: ThreadPoolExecutor = None):
    """Process every item once and return envelopes sorted by (version, index).

    ``worker_fn(item)`` must be pure given the item and the published
    decision it references.  With one worker the wave runs inline.
    """
    def call(item):
        t0 = time.perf_counter()
        try:
            payload = worker_fn(item)
            return ResultEnvelope(worker=threading.get_ident(), version=item.version,
                                  index=item.index, payload=payload,
                                  wall=time.perf_counter() - t0)
        except StochLPError:
            raise
        except BaseException as exc:  # noqa: BLE001 - reported with item identity
            return ResultEnvelope(worker=threading.get_ident(), version=item.version,
                                  index=item.index, payload=None,
                                  wall=time.perf_counter() - t0, error=exc)

    if workers <= 1 and pool is None:
        envs = [call(it) for it in items]
    else:
        own_pool = None
        if pool is None:
            own_pool = ThreadPoolExecutor(max_workers=workers)
            pool = own_pool
        try:
            envs = list(pool.map(call, items))
        finally:
            if own_pool is not None:
                own_pool.shutdown(wait=True)
    envs.sort(key=lambda e: (e.version, e.index))
    for e in envs:
        if e.error is not None:
            raise WorkerPanic((e.version, e.index), e.error)
    return envs


class AsyncStats:
    """Protocol accounting, checked by tests for exactly-once semantics."""

    def __init__(self):
        self.issued = 0
        self.received = 0
        self.versions_published = 0
        self.pair_counts = {}
        self.version_log = []   # (version, awaited, received_at_publish, wall)

    @property
    def max_pair_multiplicity(self):
        return max(self.pair_counts.values(), default=0)


def run_async(coordinator, worker_fn, cfg: ExecConfig):
    """Drive the k-threshold asynchronous protocol until the coordinator is done.

    The coordinator must provide:

    - ``n_items``: number of work items per published decision
    - ``initial_decision() -> VersionedDecision``
    - ``incorporate(envelope) -> None``: fold one result into master state
    - ``advance() -> VersionedDecision | None``: re-solve and publish the next
      decision, or None when no further decision should be issued
    - ``complete(version, decision) -> bool``: called when all results of one
      version are in; True means converged
    - ``finished`` property: stop flag

    Returns AsyncStats; all issued items are drained before returning so no
    result is ever lost.
    """
    n = coordinator.n_items
    kappa_count = max(1, math.ceil(cfg.kappa * n))
    capacity = cfg.queue_capacity or max(2 * n, 2)
    work_q = queue.Queue(maxsize=capacity + cfg.workers)
    result_q = queue.Queue()
    decisions = {}
    stats = AsyncStats()
    _SENTINEL = object()

    def worker_loop(wid):
        while True:
            item = work_q.get()
            if item is _SENTINEL:
                return
            t0 = time.perf_counter()
            try:
                payload = worker_fn(decisions[item.version], item.index)
                env = ResultEnvelope(worker=wid, version=item.version, index=item.index,
                                     payload=payload, wall=time.perf_counter() - t0)
            except BaseException as exc:  # noqa: BLE001
                env = ResultEnvelope(worker=wid, version=item.version, index=item.index,
                                     payload=None, wall=time.perf_counter() - t0, error=exc)
            result_q.put(env)

    threads = [threading.Thread(target=worker_loop, args=(w,), daemon=True)
               for w in range(cfg.workers)]
    for t in threads:
        t.start()

    def publish(decision):
        decisions[decision.version] = decision
        stats.versions_published += 1
        for idx in range(n):
            work_q.put(WorkItem(decision.version, idx))
        stats.issued += n

    counts = {}
    newest = None
    converged = False
    failure = None
    t_start = time.perf_counter()
    try:
        dec = coordinator.initial_decision()
        newest = dec.version
        publish(dec)
        while stats.received < stats.issued:
            try:
                env = result_q.get(timeout=cfg.watchdog)
            except queue.Empty:
                raise DeadlockError({
                    "issued": stats.issued, "received": stats.received,
                    "outstanding": stats.issued - stats.received,
                    "newest_version": newest, "work_queue": work_q.qsize(),
                }) from None
            stats.received += 1
            pair = (env.version, env.index)
            stats.pair_counts[pair] = stats.pair_counts.get(pair, 0) + 1
            if env.error is not None:
                failure = WorkerPanic(pair, env.error)
                break
            if env.version > newest:
                raise StochLPError("protocol violation: envelope for an unpublished version")
            coordinator.incorporate(env)
            counts[env.version] = counts.get(env.version, 0) + 1
            if counts[env.version] == n:
                if coordinator.complete(env.version, decisions[env.version]):
                    converged = True
            if (not converged and not coordinator.finished
                    and counts.get(newest, 0) >= kappa_count):
                nxt = coordinator.advance()
                if nxt is not None:
                    stats.version_log.append(
                        (newest, kappa_count, counts.get(newest, 0),
                         time.perf_counter() - t_start))
                    newest = nxt.version
                    publish(nxt)
    finally:
        for _ in threads:
            work_q.put(_SENTINEL)
        for t in threads:
            t.join(timeout=cfg.watchdog)
    if failure is not None:
        raise failure
    return stats


def resolve_workers(flag_value=None):
    """Worker count: --workers flag wins over the STOCHLP_WORKERS env var."""
    if flag_value is not None:
        return max(1, int(flag_value))
    env = os.environ.get(ENV_WORKERS)
    if env:
        return max(1, int(env))
    return 1
