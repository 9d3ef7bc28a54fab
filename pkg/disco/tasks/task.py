import logging
from dataclasses import dataclass, field
from typing import Any, Dict

logger = logging.getLogger(__name__)


@dataclass
class Task:
    """One unit of experiment work: a sweep point, a seed of a study, an attack."""
    priority: int
    name: str
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    results: Dict[str, Any] = field(default_factory=dict)

    def __lt__(self, other: 'Task') -> bool:
        """Tasks are ordered by priority, higher priority first."""
        return self.priority > other.priority  # Reversed for the agenda sort

    def __getitem__(self, key: str) -> Any:
        """Support dictionary-style access to task properties and params."""
        if key in ('priority', 'name', 'kind', 'params', 'seed', 'results'):
            return getattr(self, key)
        try:
            return self.params[key]
        except KeyError:
            raise KeyError(f"Task has no item '{key}'")

    def get(self, key: str, default: Any = None) -> Any:
        try:
            return self[key]
        except KeyError:
            return default
