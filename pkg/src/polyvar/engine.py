"""Thread-pool fan-out of sampling chunks.

Chunk ``b`` draws from the stream ``(seed, *stream_keys, b)`` and lands in batch
slot ``b``, so the merged accumulator does not depend on the number of worker
threads or on completion order.
"""

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from tqdm import tqdm

from polyvar.config import settings
from polyvar.errors import PolyvarError
from polyvar.geomcore import make_stream
from polyvar.metrics import MomentAccumulator
from polyvar.samplers import BodySampler

logger = logging.getLogger(__name__)

CHUNK_ROWS = 65_536


@dataclass(frozen=True)
class ChunkTask:
    """One batch slot's share of the samples."""

    index: int
    size: int


class SamplingTasksFailedError(RuntimeError):
    """Raised after the pool drains when some chunks raised."""

    def __init__(self, dead_letters: list[tuple[ChunkTask, BaseException]]):
        """Store the failed chunks with their errors and build a concise message."""
        self.dead_letters = list(dead_letters)
        shown = ", ".join(f"#{task.index} ({error})" for task, error in self.dead_letters[:5])
        suffix = " ..." if len(self.dead_letters) > 5 else ""
        super().__init__(f"{len(self.dead_letters)} sampling chunk(s) failed: {shown}{suffix}")


def _bounded_ordered_map(executor, fn, items, max_inflight: int):
    """Map work in input order while retaining at most ``max_inflight`` futures."""
    if max_inflight < 1:
        raise ValueError("max_inflight must be positive")

    item_iterator = iter(items)
    pending = deque()
    for _ in range(max_inflight):
        try:
            pending.append(executor.submit(fn, next(item_iterator)))
        except StopIteration:
            break

    try:
        while pending:
            future = pending.popleft()
            yield future.result()
            try:
                pending.append(executor.submit(fn, next(item_iterator)))
            except StopIteration:
                continue
    finally:
        for future in pending:
            future.cancel()


def split_samples(samples: int, batches: int) -> list[ChunkTask]:
    """Nearly equal chunk sizes, larger chunks first."""
    base, extra = divmod(samples, batches)
    return [ChunkTask(index=b, size=base + (1 if b < extra else 0)) for b in range(batches)]


class SamplingEngine:
    """Runs a :class:`BodySampler` over chunked, independently seeded streams."""

    def __init__(self, worker_count: int | None = None, max_inflight: int | None = None):
        """Configure the pool size and the number of chunks kept in flight."""
        self.worker_count = worker_count or settings.MAX_WORKERS
        self.max_inflight = max_inflight or 2 * self.worker_count

    def run(
        self,
        sampler: BodySampler,
        samples: int,
        seed: int,
        *,
        stream_keys: tuple[int, ...] = (),
        bases=None,
        batches: int | None = None,
        pbar_desc: str = "Sampling",
        show_progress: bool = True,
    ) -> MomentAccumulator:
        """Draw ``samples`` points and return the filled accumulator.

        Raises:
            SamplingTasksFailedError: one or more chunks raised; the remaining
                chunks are still drained first.
        """
        batches = batches or settings.BATCHES
        if samples < 2:
            raise PolyvarError(f"need at least 2 samples, got {samples}")
        acc = MomentAccumulator(sampler.dim, bases=bases, batches=batches)
        tasks = split_samples(samples, batches)

        def work(task: ChunkTask):
            try:
                rng = make_stream(seed, *stream_keys, task.index)
                part = MomentAccumulator(sampler.dim, bases=acc.bases, batches=1)
                remaining = task.size
                while remaining > 0:
                    rows = min(CHUNK_ROWS, remaining)
                    points, weights = sampler.draw(rng, rows)
                    part.accumulate(points, weights, slot=0)
                    remaining -= rows
                return task, part, None
            except Exception as e:
                return task, None, e

        dead_letters: list[tuple[ChunkTask, BaseException]] = []
        with (
            ThreadPoolExecutor(max_workers=self.worker_count) as pool,
            tqdm(
                total=samples,
                desc=pbar_desc,
                unit="pt",
                unit_scale=True,
                leave=False,
                disable=not show_progress,
            ) as pbar,
        ):
            for task, part, error in _bounded_ordered_map(pool, work, tasks, self.max_inflight):
                if error is not None:
                    logger.error(f"Sampling chunk {task.index} failed: {error}")
                    dead_letters.append((task, error))
                    continue
                acc.absorb(part, task.index)
                pbar.update(task.size)

        if dead_letters:
            raise SamplingTasksFailedError(dead_letters)
        logger.debug(
            f"{sampler.body} n={sampler.n}: {samples} samples in {batches} chunks "
            f"on {self.worker_count} thread(s)"
        )
        return acc

