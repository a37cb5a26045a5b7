import asyncio
from typing import Iterable

from core.config import TAIL_TOL, TERM_TOL, VERIFY_WORKERS
from core.logger import logger
from worker.checks import CHECK_REGISTRY, CheckResult, run_check
from worker.queue_manager import CheckJob, QueueManager
from worker.systems import SystemContext, VerifySystem, prepare_system


def _log_result(result: CheckResult) -> None:
    """Log one verification outcome as a structured record."""

    logger.info({
        "check":  result.check,
        "system": result.system,
        "status": result.status,
        "detail": result.detail,
    })


def _errored(check: str, system: str, exc: BaseException) -> CheckResult:
    return CheckResult(check=check, system=system, status="ERROR", detail=f"{type(exc).__name__}: {exc}")


async def _process_job(job: CheckJob) -> CheckResult:
    """Run a single (check, system) job off the event loop."""

    check: str          = job.check
    ctx: SystemContext  = job.context

    if check not in CHECK_REGISTRY:
        logger.warning(f"[verify] no check registered as '{check}', skipping {ctx.system.name}")
        return CheckResult(check=check, system=ctx.system.name, status="SKIP", detail="unknown check")
    return await asyncio.to_thread(run_check, check, ctx)


async def _worker(name: str, queue: QueueManager, results: list[CheckResult]) -> None:
    """Worker loop: drains jobs until cancelled."""

    logger.debug(f"[verify] {name} started")

    while True:
        job = await queue.next_job()

        try:
            result = await _process_job(job)
        except Exception as exc:
            # A broken check is reported as ERROR; the pool keeps draining.
            logger.exception(
                f"[verify] unhandled error in job {job.job_id} ('{job.check}') "
                f"on '{job.context.system.name}': {exc}"
            )
            result = _errored(job.check, job.context.system.name, exc)
        finally:
            queue.done()

        _log_result(result)
        results.append(result)


async def run_checks(
    systems: Iterable[VerifySystem],
    checks: Iterable[str],
    samples: int,
    term_tol: float = TERM_TOL,
    tail_tol: float = TAIL_TOL,
    inject_bug: str | None = None,
    workers: int = VERIFY_WORKERS,
) -> list[CheckResult]:
    """Prepare every system, then fan (check, system) jobs out to a pool of workers."""

    systems = list(systems)
    checks = list(checks)
    contexts = await asyncio.gather(
        *(asyncio.to_thread(prepare_system, s, samples, term_tol, tail_tol, inject_bug) for s in systems),
        return_exceptions=True,
    )

    results: list[CheckResult] = []
    queue = QueueManager()
    for system, ctx in zip(systems, contexts):
        if isinstance(ctx, BaseException):
            logger.error(f"[verify] could not prepare {system.name}: {ctx}")
            for check in checks:
                result = _errored(check, system.name, ctx)
                _log_result(result)
                results.append(result)
            continue
        for check in checks:
            await queue.submit(check, ctx)

    logger.info(f"[verify] {queue.submitted} jobs across {len(systems)} systems, {workers} workers")
    pool = [asyncio.create_task(_worker(f"worker-{i}", queue, results)) for i in range(max(1, workers))]
    await queue.drained()
    for task in pool:
        task.cancel()
    await asyncio.gather(*pool, return_exceptions=True)

    order = {name: i for i, name in enumerate(s.name for s in systems)}
    results.sort(key=lambda r: (order.get(r.system, len(order)), checks.index(r.check) if r.check in checks else 0))
    return results


def exit_code_for(results: list[CheckResult]) -> int:
    """1 if anything errored, 3 if an invariant failed, 0 otherwise."""
    statuses = {r.status for r in results}
    if "ERROR" in statuses:
        return 1
    if "FAIL" in statuses:
        return 3
    return 0


def summarize(results: list[CheckResult]) -> dict[str, int]:
    counts = {"PASS": 0, "FAIL": 0, "ERROR": 0, "SKIP": 0}
    for result in results:
        counts[result.status] += 1
    return counts
