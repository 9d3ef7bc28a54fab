"""Experiment agenda for sweeps and multi-seed studies."""

from .task import Task
from .task_manager import KindStats, TaskManager

__all__ = ['Task', 'TaskManager', 'KindStats']
