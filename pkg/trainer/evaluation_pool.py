import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from metrics.confusion import ConfusionMatrix, confusion
from numeric.errors import ContractError
from numeric.parameters import ParameterSet
from tep.windows import WindowedDataset
from twin.config import TwinModelConfig
from twin.model import predict_batch
from twin.params import TwinModelParams

logger = logging.getLogger(__name__)


class EvaluationPool:
    """
    Async pool that scores windows on worker threads.

    Shards are queued in order, consumed by ``workers`` background tasks that
    each run the forward pass in a thread, and reduced in shard order, so the
    result does not depend on which worker finished first.

    Usage:
        async with EvaluationPool(params, config, workers=4) as pool:
            preds = await pool.predict(ds.windows)
            cm = await pool.confusion(ds)

    Args:
        params: Model parameters; only read.
        config: Model configuration.
        workers: Number of worker threads.
        batch_size: Windows per shard.
    """

    def __init__(self, params: ParameterSet, config: TwinModelConfig, workers: int = 2, batch_size: int = 256):
        if workers < 1 or batch_size < 1:
            raise ContractError(f"workers and batch_size must be >= 1, got {workers} and {batch_size}")
        self._structured = TwinModelParams.from_parameters(params, config)
        self._config = config
        self._workers = workers
        self._batch_size = batch_size
        self._queue: asyncio.Queue[tuple[int, np.ndarray]] = asyncio.Queue()
        self._results: dict[int, np.ndarray] = {}
        self._executor: Optional[ThreadPoolExecutor] = None
        self._tasks: list[asyncio.Task] = []
        self._failure: Optional[BaseException] = None

    async def __aenter__(self):
        await self.start()
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        await self.stop()
        return False

    async def start(self):
        """Create the thread pool and the worker tasks."""
        self._executor = ThreadPoolExecutor(max_workers=self._workers, thread_name_prefix='gdl-eval')
        self._tasks = [asyncio.create_task(self._worker_loop()) for _ in range(self._workers)]

    async def stop(self):
        """Cancel the worker tasks and shut the thread pool down."""
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except asyncio.CancelledError:
                pass
        self._tasks = []
        if self._executor:
            self._executor.shutdown(wait=True)
            self._executor = None

    async def _worker_loop(self):
        """Take shards off the queue and run them on the executor."""
        loop = asyncio.get_running_loop()
        while True:
            index, windows = await self._queue.get()
            try:
                self._results[index] = await loop.run_in_executor(
                    self._executor, predict_batch, windows, self._structured, self._config)
            except Exception as exc:
                self._failure = self._failure or exc
            finally:
                self._queue.task_done()

    async def predict(self, windows: np.ndarray) -> np.ndarray:
        """Predicted class per window, in input order."""
        if self._executor is None:
            raise ContractError("EvaluationPool used outside 'async with' or before start()")
        if len(windows) == 0:
            return np.zeros(0, dtype=np.int64)
        self._results.clear()
        self._failure = None
        starts = range(0, len(windows), self._batch_size)
        for index, start in enumerate(starts):
            await self._queue.put((index, windows[start:start + self._batch_size]))
        await self._queue.join()
        if self._failure is not None:
            raise self._failure
        logger.debug("scored %d windows in %d shards", len(windows), len(starts))
        return np.concatenate([self._results[i] for i in range(len(starts))])

    async def confusion(self, ds: WindowedDataset) -> ConfusionMatrix:
        return confusion(await self.predict(ds.windows), ds.labels, self._config.n_classes)
