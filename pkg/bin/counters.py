"""Operation counters and the phase runners that drive decoder iterations.

A decoder iteration is a list of phases. Each phase knows how to process one slice of
its work (part p of P); the serial runner calls every phase once with P = 1, the
barrier runner calls it from P threads and waits on a barrier after each phase.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable

logger = logging.getLogger(__name__)

OP_FIELDS = ('additions', 'multiplications', 'divisions', 'comparisons', 'memory_transactions')
LOOP_FIELDS = ('loop_additions', 'loop_comparisons')


@dataclass
class BlockCount:
    additions: int = 0
    multiplications: int = 0
    divisions: int = 0
    comparisons: int = 0
    memory_transactions: int = 0
    # indexing and loop-control arithmetic, reported apart from the block's own work
    loop_additions: int = 0
    loop_comparisons: int = 0

    def add(self, other):
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def scaled(self, k):
        return BlockCount(**{f.name: getattr(self, f.name) * k for f in fields(self)})

    @property
    def operations(self):
        """Arithmetic operations of the block proper."""
        return self.additions + self.multiplications + self.divisions + self.comparisons

    @property
    def loop_operations(self):
        return self.loop_additions + self.loop_comparisons

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


class OpCounters:
    """Per-iteration tallies keyed by block name, plus barrier and fallback counts."""

    def __init__(self):
        self.per_iteration = []
        self.barriers_per_iteration = []
        self.zero_sum_fallbacks = 0

    def start_iteration(self):
        self.per_iteration.append({})
        self.barriers_per_iteration.append(0)

    def _current(self):
        if not self.per_iteration:
            self.start_iteration()
        return self.per_iteration[-1]

    def count(self, block, nodes=0, edges=0, elements=0, **ops):
        """Adds `ops` to `block`. nodes/edges/elements are loop trip counts: each trip costs
        one loop addition (increment) and one loop comparison (bound check).
        """
        current = self._current()
        entry = current.get(block)
        if entry is None:
            entry = current[block] = BlockCount()
        for name, value in ops.items():
            setattr(entry, name, getattr(entry, name) + int(value))
        trips = int(nodes + edges + elements)
        if trips:
            entry.loop_additions += trips
            entry.loop_comparisons += trips

    def count_barriers(self, n):
        self._current()
        self.barriers_per_iteration[-1] += n

    def merge_iteration(self, other):
        """Folds the latest iteration of `other` (a worker's counters) into ours."""
        current = self._current()
        if other.per_iteration:
            for block, entry in other.per_iteration[-1].items():
                current.setdefault(block, BlockCount()).add(entry)
        self.zero_sum_fallbacks += other.zero_sum_fallbacks
        other.zero_sum_fallbacks = 0

    @property
    def iterations(self):
        return len(self.per_iteration)

    @property
    def blocks(self):
        totals = {}
        for iteration in self.per_iteration:
            for block, entry in iteration.items():
                totals.setdefault(block, BlockCount()).add(entry)
        return totals

    def iteration_total(self, i):
        total = BlockCount()
        for entry in self.per_iteration[i].values():
            total.add(entry)
        return total

    @property
    def total(self):
        total = BlockCount()
        for entry in self.blocks.values():
            total.add(entry)
        return total

    @property
    def additions(self):
        return self.total.additions

    @property
    def multiplications(self):
        return self.total.multiplications

    @property
    def divisions(self):
        return self.total.divisions

    @property
    def comparisons(self):
        return self.total.comparisons

    @property
    def memory_transactions(self):
        return self.total.memory_transactions

    @property
    def barriers(self):
        return sum(self.barriers_per_iteration)


@dataclass(frozen=True)
class Phase:
    block: str
    # run(part, parts, counters); counters may be None
    run: Callable


def part_range(n, part, parts):
    return n * part // parts, n * (part + 1) // parts


def group_parts(groups, part, parts):
    """Splits every (degree, nodes, edges) group and yields this part's share."""
    for degree, nodes, edges in groups:
        lo, hi = part_range(len(nodes), part, parts)
        if hi > lo:
            yield degree, nodes[lo:hi], edges[lo:hi]


class SerialRunner:
    threads = 1
    staged = False

    def run(self, phases, counters):
        for phase in phases:
            phase.run(0, 1, counters)


class BarrierRunner:
    """Runs each phase on `threads` workers with a barrier after every phase."""
    staged = True

    def __init__(self, threads):
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads
        # barriers waited per run() call
        self.barrier_log = []
        self._pool = ThreadPoolExecutor(max_workers=threads, thread_name_prefix="stage")

    def close(self):
        self._pool.shutdown(wait=True)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def run(self, phases, counters):
        barrier = threading.Barrier(self.threads)
        locals_ = [OpCounters() if counters is not None else None for _ in range(self.threads)]
        for c in locals_:
            if c is not None:
                c.start_iteration()

        def worker(part):
            try:
                for phase in phases:
                    phase.run(part, self.threads, locals_[part])
                    barrier.wait()
            except threading.BrokenBarrierError:
                raise
            except BaseException:
                barrier.abort()
                raise

        futures = [self._pool.submit(worker, part) for part in range(self.threads)]
        errors = []
        for f in futures:
            exc = f.exception()
            if exc is not None and not isinstance(exc, threading.BrokenBarrierError):
                errors.append(exc)
        if errors:
            raise errors[0]

        self.barrier_log.append(len(phases))
        if counters is not None:
            for c in locals_:
                counters.merge_iteration(c)
            counters.count_barriers(len(phases))
