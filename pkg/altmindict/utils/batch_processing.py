import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Sequence, TypeVar
import time

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

# Threshold for threaded processing - use the pool only for batches >= this size.
# Trials below it run faster in a plain loop.
ASYNC_THRESHOLD = 4

# Seconds between progress log lines
PROGRESS_INTERVAL = 2.0


@dataclass
class BatchSummary:
    """Outcome of a batch: ordered results plus failure bookkeeping."""
    results: List[Any]
    total: int
    success_count: int = 0
    failure_count: int = 0
    failures: List[Dict[str, Any]] = field(default_factory=list)
    mode: str = 'synchronous'


def _track_batch_result(summary: BatchSummary, index: int, result: Any = None,
                        error: BaseException = None) -> None:
    """Store one task result in its slot and update the counters."""
    if error is None:
        summary.results[index] = result
        summary.success_count += 1
        return
    summary.failure_count += 1
    summary.failures.append({
        'index': index,
        'error': f"{error.__class__.__name__}: {error}",
    })


def _log_progress(processed: int, total: int, last_update: float) -> float:
    now = time.time()
    if now - last_update > PROGRESS_INTERVAL:
        logger.info(f"Processed {processed}/{total} tasks")
        return now
    return last_update


def _run_batch_sync(fn: Callable[[T], R], items: Sequence[T], summary: BatchSummary,
                    catch: tuple) -> None:
    last_update = time.time()
    for index, item in enumerate(items):
        try:
            _track_batch_result(summary, index, result=fn(item))
        except catch as e:
            logger.warning(f"Task {index} failed: {e.__class__.__name__}: {e}")
            _track_batch_result(summary, index, error=e)
        last_update = _log_progress(index + 1, summary.total, last_update)


def _run_batch_async(fn: Callable[[T], R], items: Sequence[T], summary: BatchSummary,
                     catch: tuple, threads: int) -> None:
    last_update = time.time()
    processed = 0
    with ThreadPoolExecutor(max_workers=threads) as executor:
        future_to_index = {executor.submit(fn, item): index for index, item in enumerate(items)}

        for future in as_completed(future_to_index):
            index = future_to_index[future]
            try:
                _track_batch_result(summary, index, result=future.result())
            except catch as e:
                logger.warning(f"Task {index} failed: {e.__class__.__name__}: {e}")
                _track_batch_result(summary, index, error=e)
            processed += 1
            last_update = _log_progress(processed, summary.total, last_update)


def run_batch(fn: Callable[[T], R], items: Sequence[T], threads: int = 1,
              catch: tuple = ()) -> BatchSummary:
    """
    Apply fn to every item and return results in input order.

    Smart execution: a plain loop for small batches or threads == 1, a
    ThreadPoolExecutor otherwise. Completion order never affects the result
    order, so output is identical for any thread count.

    Args:
        fn: Task function; must not share mutable state between items
        items: Task inputs
        threads: Worker count
        catch: Exception types recorded as failures (slot left as None);
            anything else propagates

    Returns:
        BatchSummary with results[i] = fn(items[i])
    """
    total = len(items)
    use_async = threads > 1 and total >= ASYNC_THRESHOLD
    summary = BatchSummary(results=[None] * total, total=total,
                           mode='asynchronous' if use_async else 'synchronous')

    if use_async:
        logger.info(f"Processing {total} tasks ASYNC with {threads} threads")
        _run_batch_async(fn, items, summary, catch, threads)
    else:
        logger.debug(f"Processing {total} tasks SYNC")
        _run_batch_sync(fn, items, summary, catch)

    logger.info(f"Batch complete ({summary.mode}). Success: {summary.success_count}, "
                f"Failed: {summary.failure_count}")
    if summary.failures:
        logger.warning(f"Failed tasks: {', '.join(str(f['index']) for f in summary.failures)}")
    return summary
