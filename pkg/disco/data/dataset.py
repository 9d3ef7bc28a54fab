"""In-memory labelled image sets."""

import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

Batch = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass
class LabeledImage:
    """One 3 x H x W image in [0, 1] with its task label y and sensitive label y_hat."""
    image: np.ndarray
    task_label: int
    sensitive_label: int


@dataclass
class Dataset:
    """Images with a task attribute and a sensitive attribute per sample."""
    images: np.ndarray
    task_labels: np.ndarray
    sensitive_labels: np.ndarray
    task_classes: int
    sensitive_classes: int
    dataset_id: str = 'synthetic'

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        self.task_labels = np.asarray(self.task_labels, dtype=np.int64).reshape(-1)
        self.sensitive_labels = np.asarray(self.sensitive_labels, dtype=np.int64).reshape(-1)
        n = len(self.task_labels)
        if self.images.ndim != 4 or self.images.shape[1] != 3 or len(self.images) != n:
            raise DimensionError(f"Expected {n} x 3 x H x W images, got shape {self.images.shape}")
        if len(self.sensitive_labels) != n:
            raise DimensionError(f"{len(self.sensitive_labels)} sensitive labels for {n} images")
        for name, labels, classes in (('task', self.task_labels, self.task_classes),
                                      ('sensitive', self.sensitive_labels, self.sensitive_classes)):
            if n and (labels.min() < 0 or labels.max() >= classes):
                raise ParameterError(f"{name} labels must lie in [0, {classes})")

    def __len__(self) -> int:
        return len(self.task_labels)

    def __getitem__(self, index: int) -> LabeledImage:
        return LabeledImage(self.images[index], int(self.task_labels[index]), int(self.sensitive_labels[index]))

    @property
    def image_size(self) -> int:
        return self.images.shape[2] if self.images.ndim == 4 else 0

    def labels(self, attribute: str) -> np.ndarray:
        """Labels of the 'task' or 'sensitive' attribute."""
        if attribute == 'task':
            return self.task_labels
        if attribute == 'sensitive':
            return self.sensitive_labels
        raise ParameterError(f"Unknown attribute '{attribute}'")

    def classes(self, attribute: str) -> int:
        return self.task_classes if attribute == 'task' else self.sensitive_classes

    def subset(self, indices: Sequence[int]) -> 'Dataset':
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.images[indices], self.task_labels[indices], self.sensitive_labels[indices],
                       self.task_classes, self.sensitive_classes, self.dataset_id)

    def split(self, first: int) -> Tuple['Dataset', 'Dataset']:
        """The first ``first`` samples and the rest."""
        if not 0 <= first <= len(self):
            raise DimensionError(f"Cannot split {len(self)} samples at {first}")
        return self.subset(range(first)), self.subset(range(first, len(self)))

    def batches(self, batch_size: int, rng: Optional[np.random.Generator] = None) -> Iterator[Batch]:
        """(images, y, y_hat) mini-batches; shuffled when ``rng`` is given."""
        if batch_size < 1:
            raise ParameterError(f"Batch size must be >= 1, got {batch_size}")
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(self), batch_size):
            idx = order[start:start + batch_size]
            yield self.images[idx], self.task_labels[idx], self.sensitive_labels[idx]
