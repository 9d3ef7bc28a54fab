"""Task manager."""
import logging
import threading
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

from ..errors import ConfigError
from .task import Task

logger = logging.getLogger(__name__)

Handler = Callable[[Task], Any]


@dataclass
class KindStats:
    """Track outcomes per task kind."""
    successes: int = 0
    failures: int = 0
    total_time: float = 0.0

    @property
    def success_rate(self) -> float:
        total = self.successes + self.failures
        return self.successes / total if total > 0 else 0.0


class TaskManager:
    """Holds the agenda and dispatches each task to the handler of its kind.

    The agenda runs sequentially or on a thread pool; ``run`` returns the
    results in agenda order whatever order the tasks finish in.
    """

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ConfigError(f"workers must be >= 1, got {workers}", key='workers')
        self.workers = workers
        self.agenda: List[Task] = []
        self.handlers: Dict[str, Handler] = {}
        self.task_num: int = 0
        self.total_stats = defaultdict(int)
        self.kind_stats: Dict[str, KindStats] = defaultdict(KindStats)
        self._lock = threading.Lock()

    def register(self, kind: str, handler: Handler) -> None:
        self.handlers[kind] = handler

    def task_count(self) -> int:
        return len(self.agenda)

    def add_task(self, task: Task) -> None:
        """Add a task to the agenda, keeping insertion order among equal priorities."""
        if task.kind not in self.handlers:
            raise ConfigError(f"No handler registered for task kind '{task.kind}'", key=task.kind)
        self.agenda.append(task)
        self.agenda.sort()

    def add_tasks(self, tasks: List[Task]) -> None:
        logger.debug(f"Adding {len(tasks)} tasks to agenda")
        for task in tasks:
            self.add_task(task)

    def next_task(self) -> Optional[Task]:
        return self.agenda.pop(0) if self.agenda else None

    def has_tasks(self) -> bool:
        return bool(self.agenda)

    def work_on_task(self, task: Task) -> Dict[str, Any]:
        """Execute one task with its handler and record the outcome on it."""
        handler = self.handlers[task.kind]
        start = time.perf_counter()
        logger.info(f"Working on task {task.name} ({task.kind}, priority {task.priority})")
        try:
            value = handler(task)
            task.results = {'status': 'ok', 'value': value}
        except Exception as e:
            logger.error(f"Task {task.name} failed: {e}")
            task.results = {'status': 'failed', 'reason': str(e), 'error': e}
        elapsed = time.perf_counter() - start
        self._record(task, elapsed)
        return task.results

    def _record(self, task: Task, elapsed: float) -> None:
        with self._lock:
            stats = self.kind_stats[task.kind]
            stats.total_time += elapsed
            if task.results.get('status') == 'ok':
                stats.successes += 1
            else:
                stats.failures += 1
                self.total_stats['tasks_failed'] += 1
            self.total_stats['tasks_executed'] += 1

    def run(self, strict: bool = True) -> List[Any]:
        """Drain the agenda and return handler values in agenda order.

        With ``strict`` the first failure (in agenda order) is re-raised once
        every task has finished; otherwise failed tasks yield None.
        """
        tasks = []
        while self.has_tasks():
            tasks.append(self.next_task())
        self.task_num += len(tasks)
        if self.workers == 1 or len(tasks) <= 1:
            for task in tasks:
                self.work_on_task(task)
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                list(pool.map(self.work_on_task, tasks))
        values = []
        for task in tasks:
            if task.results['status'] != 'ok':
                if strict:
                    raise task.results['error']
                values.append(None)
            else:
                values.append(task.results['value'])
        return values

    def print_stats(self):
        """Print agenda statistics."""
        print("\nTask Statistics:")
        print(f"Total tasks executed: {self.total_stats['tasks_executed']}")
        print(f"Total tasks failed: {self.total_stats['tasks_failed']}")

        print("\nTask Kind Distribution:")
        for kind, stats in sorted(self.kind_stats.items()):
            print(f"{kind}: {stats.successes + stats.failures} tasks, "
                  f"{stats.success_rate * 100:.0f}% success, {stats.total_time:.1f}s")
