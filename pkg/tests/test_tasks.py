"""Test the task agenda and its dispatch."""
import time

import pytest

from disco.errors import ConfigError
from disco.tasks import Task, TaskManager


@pytest.fixture
def manager():
    manager = TaskManager()
    manager.register('square', lambda task: task['x'] ** 2)
    manager.register('fail', lambda task: 1 / 0)
    return manager


def test_task_ordering_and_access():
    low = Task(1, 'low', 'square', {'x': 2})
    high = Task(5, 'high', 'square', {'x': 3}, seed=9)
    assert high < low
    assert sorted([low, high])[0] is high
    assert high['seed'] == 9
    assert high['x'] == 3
    assert high.get('missing', 'default') == 'default'
    with pytest.raises(KeyError):
        high['missing']


def test_unknown_kind_is_rejected(manager):
    with pytest.raises(ConfigError):
        manager.add_task(Task(1, 'mystery', 'unregistered'))
    assert manager.task_count() == 0


def test_workers_must_be_positive():
    with pytest.raises(ConfigError) as excinfo:
        TaskManager(workers=0)
    assert excinfo.value.key == 'workers'


def test_agenda_is_priority_then_insertion_order(manager):
    manager.add_tasks([Task(1, 'a', 'square', {'x': 1}), Task(3, 'b', 'square', {'x': 2}),
                       Task(1, 'c', 'square', {'x': 3}), Task(3, 'd', 'square', {'x': 4})])
    assert [t.name for t in manager.agenda] == ['b', 'd', 'a', 'c']
    assert manager.run() == [4, 16, 1, 9]
    assert not manager.has_tasks()
    assert manager.task_num == 4


def test_pool_returns_results_in_agenda_order():
    manager = TaskManager(workers=3)

    def slow_square(task):
        time.sleep(0.01 * (5 - task['x']))
        return task['x'] ** 2

    manager.register('square', slow_square)
    manager.add_tasks([Task(0, f"t{x}", 'square', {'x': x}) for x in range(5)])
    assert manager.run() == [0, 1, 4, 9, 16]
    assert manager.kind_stats['square'].successes == 5


def test_strict_run_reraises_the_first_failure(manager):
    manager.add_tasks([Task(2, 'ok', 'square', {'x': 2}), Task(1, 'boom', 'fail')])
    with pytest.raises(ZeroDivisionError):
        manager.run()
    assert manager.total_stats['tasks_executed'] == 2
    assert manager.total_stats['tasks_failed'] == 1


def test_lenient_run_yields_none_for_failures(manager):
    manager.add_tasks([Task(1, 'boom', 'fail'), Task(1, 'ok', 'square', {'x': 4})])
    assert manager.run(strict=False) == [None, 16]
    assert manager.kind_stats['fail'].success_rate == 0.0
    assert manager.kind_stats['square'].success_rate == 1.0


def test_work_on_task_records_results(manager):
    task = Task(1, 'one', 'square', {'x': 5})
    assert manager.work_on_task(task) == {'status': 'ok', 'value': 25}
    failed = Task(1, 'two', 'fail')
    results = manager.work_on_task(failed)
    assert results['status'] == 'failed'
    assert 'division' in results['reason']


def test_print_stats(manager, capsys):
    manager.add_tasks([Task(1, 'ok', 'square', {'x': 1}), Task(1, 'boom', 'fail')])
    manager.run(strict=False)
    manager.print_stats()
    out = capsys.readouterr().out
    assert "Total tasks executed: 2" in out
    assert "Total tasks failed: 1" in out
    assert "fail: 1 tasks, 0% success" in out
    assert "square: 1 tasks, 100% success" in out
