"""
批量处理器：把独立任务分发到线程池或进程池。

结果按输入顺序返回，与工作线程数无关。
"""

import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "PERMOD_THREADS"


def resolve_workers(requested: Optional[int] = None) -> int:
    """确定工作线程数：请求值、环境变量 PERMOD_THREADS 与 CPU 数取最小"""
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            limit = min(limit, max(1, int(env)))
        except ValueError:
            logger.warning(f"忽略无效的 {THREADS_ENV}={env!r}")
    if requested:
        limit = min(limit, max(1, int(requested)))
    return limit


class BatchProcessor:
    """用于执行批处理任务的帮助类。"""

    def __init__(self, max_workers: Optional[int] = None, use_processes: bool = False):
        self.max_workers = resolve_workers(max_workers)
        self.use_processes = use_processes
        self._running = False

    def _executor(self) -> Executor:
        if self.use_processes:
            return ProcessPoolExecutor(max_workers=self.max_workers)
        return ThreadPoolExecutor(max_workers=self.max_workers)

    def map(self, worker: Callable[[T], R], items: Iterable[T],
            progress_callback: Optional[Callable[[int, int], None]] = None) -> List[R]:
        """对 items 逐项调用 worker(item)，按输入顺序返回结果。

        progress_callback(current_index, total) 可选。worker 抛出的异常会原样传出。
        """
        items = list(items)
        total = len(items)
        self._running = True
        results: List[R] = []
        try:
            if self.max_workers == 1 or total <= 1:
                for idx, item in enumerate(items, start=1):
                    if not self._running:
                        break
                    results.append(worker(item))
                    self._report(progress_callback, idx, total)
                return results

            logger.debug(f"并行处理 {total} 个任务，工作数 {self.max_workers}")
            with self._executor() as executor:
                futures = [executor.submit(worker, item) for item in items]
                for idx, future in enumerate(futures, start=1):
                    if not self._running:
                        for pending in futures[idx - 1:]:
                            pending.cancel()
                        break
                    results.append(future.result())
                    self._report(progress_callback, idx, total)
            return results
        finally:
            self._running = False

    @staticmethod
    def _report(progress_callback, idx: int, total: int):
        if progress_callback:
            try:
                progress_callback(idx, total)
            except Exception as e:
                logger.warning(f"进度回调失败: {e}")

    def stop(self):
        """请求停止当前批处理（非立即中断）。"""
        self._running = False


__all__ = ["BatchProcessor", "resolve_workers", "THREADS_ENV"]
