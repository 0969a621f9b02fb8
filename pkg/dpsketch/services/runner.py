import asyncio
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, Iterable, List, Optional

logger = logging.getLogger(__name__)


class RepeatFailedError(RuntimeError):
    """Takrorlash vazifasi bajarilmadi."""


@dataclass
class RepeatTask:
    """Bitta takrorlash (repeat) vazifasi."""
    key: Hashable
    fn: Callable[[], Any]


class RepeatRunner:
    """Takrorlashlar navbati: worker'lar vazifalarni thread'larda bajaradi."""

    def __init__(self, max_concurrent: int = 4, max_queue_size: int = 1000):
        if max_concurrent < 1:
            raise ValueError(f"max_concurrent must be >= 1, got {max_concurrent}")
        self.max_concurrent = max_concurrent
        self.max_queue_size = max_queue_size

        self._queue: asyncio.Queue[RepeatTask] = asyncio.Queue(maxsize=max_queue_size)
        self._results: Dict[Hashable, Any] = {}
        self._errors: Dict[Hashable, BaseException] = {}
        self._keys: set = set()

        self._worker_tasks: List[asyncio.Task] = []
        self._shutdown = False

    async def start(self) -> None:
        """Worker'larni ishga tushirish."""
        logger.info(f"Starting repeat runner with {self.max_concurrent} workers")

        for i in range(self.max_concurrent):
            worker_task = asyncio.create_task(self._worker(f"worker-{i}"))
            self._worker_tasks.append(worker_task)

    async def stop(self) -> None:
        """Runner'ni to'xtatish."""
        logger.debug("Stopping repeat runner...")
        self._shutdown = True

        for task in self._worker_tasks:
            task.cancel()

        await asyncio.gather(*self._worker_tasks, return_exceptions=True)
        self._worker_tasks.clear()

    async def add_task(self, task: RepeatTask) -> None:
        """Navbatga vazifa qo'shish (navbat to'lsa kutadi)."""
        if task.key in self._keys:
            raise ValueError(f"duplicate task key: {task.key}")
        self._keys.add(task.key)
        if self._queue.full():
            logger.debug("Queue is full, waiting for a free slot")
        await self._queue.put(task)

    async def join(self) -> None:
        await self._queue.join()

    async def _worker(self, worker_name: str) -> None:
        logger.debug(f"Started worker: {worker_name}")

        while not self._shutdown:
            task = await self._queue.get()
            try:
                logger.debug(f"[{worker_name}] Processing task: {task.key}")
                self._results[task.key] = await asyncio.to_thread(task.fn)
                logger.debug(f"[{worker_name}] Completed task: {task.key}")

            except Exception as exc:
                logger.error(f"[{worker_name}] Task failed: {task.key}, error: {str(exc)}")
                self._errors[task.key] = exc

            finally:
                self._queue.task_done()

    @property
    def results(self) -> Dict[Hashable, Any]:
        return dict(self._results)

    @property
    def errors(self) -> Dict[Hashable, BaseException]:
        return dict(self._errors)

    def get_stats(self) -> Dict[str, int]:
        """Navbat statistikasi."""
        return {
            "queue_size": self._queue.qsize(),
            "max_queue_size": self.max_queue_size,
            "max_concurrent": self.max_concurrent,
            "completed": len(self._results),
            "failed": len(self._errors),
        }


async def run_tasks(
    tasks: Iterable[RepeatTask],
    max_concurrent: int = 4,
    max_queue_size: Optional[int] = None,
) -> Dict[Hashable, Any]:
    """Barcha vazifalarni bajarib, natijalarni kalit bo'yicha qaytarish.

    Raises RepeatFailedError after the queue drains if any task failed, so a
    sweep never reports partial results.
    """
    tasks = list(tasks)
    runner = RepeatRunner(
        max_concurrent=max_concurrent,
        max_queue_size=max_queue_size or max(1, len(tasks)),
    )
    await runner.start()
    try:
        for task in tasks:
            await runner.add_task(task)
        await runner.join()
    finally:
        await runner.stop()

    logger.debug(f"Runner finished: {runner.get_stats()}")
    errors = runner.errors
    if errors:
        key = sorted(errors, key=repr)[0]
        raise RepeatFailedError(f"{len(errors)} task(s) failed, first {key}: {errors[key]}") from errors[key]
    return runner.results
