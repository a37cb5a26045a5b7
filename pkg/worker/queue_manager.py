import asyncio
from typing import Any, NamedTuple


class CheckJob(NamedTuple):
    job_id: int
    check: str
    context: Any  # worker.systems.SystemContext


class QueueManager:
    """In-memory async queue of (check, system) jobs with sequential ids."""

    def __init__(self, maxsize: int = 0) -> None:
        self._queue: asyncio.Queue[CheckJob] = asyncio.Queue(maxsize=maxsize)
        self._submitted = 0

    async def submit(self, check: str, context: Any) -> CheckJob:
        job = CheckJob(job_id=self._submitted, check=check, context=context)
        self._submitted += 1
        await self._queue.put(job)
        return job

    async def next_job(self) -> CheckJob:
        """Remove and return the oldest job. Waits if the queue is empty."""
        return await self._queue.get()

    def done(self) -> None:
        self._queue.task_done()

    async def drained(self) -> None:
        """Wait until every submitted job has been marked done."""
        await self._queue.join()

    @property
    def submitted(self) -> int:
        return self._submitted

    @property
    def pending(self) -> int:
        return self._queue.qsize()
