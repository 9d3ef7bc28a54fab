"""CIFAR-10 binary-format loader and the living/non-living sensitive attribute."""

import logging
from typing import Iterable, Optional, Union

import numpy as np

from ..errors import FormatError, ParameterError
from .dataset import Dataset

logger = logging.getLogger(__name__)

CIFAR_CLASSES = ('airplane', 'automobile', 'bird', 'cat', 'deer',
                 'dog', 'frog', 'horse', 'ship', 'truck')
# Assignment inferred from the class names.
LIVING_CLASSES = frozenset({'bird', 'cat', 'deer', 'dog', 'frog', 'horse'})
RECORD_BYTES = 1 + 3 * 32 * 32


def living_nonliving(label: Union[int, str]) -> int:
    """1 for a living class, 0 for a non-living one."""
    if isinstance(label, str):
        if label not in CIFAR_CLASSES:
            raise ParameterError(f"Unknown CIFAR-10 class '{label}'")
        name = label
    else:
        if not 0 <= int(label) < len(CIFAR_CLASSES):
            raise ParameterError(f"CIFAR-10 label {label} out of range")
        name = CIFAR_CLASSES[int(label)]
    return int(name in LIVING_CLASSES)


def parse_cifar_bytes(raw: bytes, base_offset: int = 0):
    """Labels (n,) and uint8 images (n, 3, 32, 32) from concatenated records."""
    if len(raw) % RECORD_BYTES:
        whole = len(raw) - len(raw) % RECORD_BYTES
        raise FormatError(f"Length {len(raw)} is not a multiple of {RECORD_BYTES}-byte records",
                          offset=base_offset + whole)
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels >= len(CIFAR_CLASSES))
    if bad.size:
        raise FormatError(f"Label {labels[bad[0]]} out of range", offset=base_offset + int(bad[0]) * RECORD_BYTES)
    pixels = records[:, 1:].reshape(-1, 3, 32, 32)
    return labels, pixels


def load_cifar_binary(paths: Union[str, Iterable[str]], limit: Optional[int] = None) -> Dataset:
    """Read one or more CIFAR-10 binary batch files in order.

    Each record is one label byte followed by 1024 red, 1024 green and
    1024 blue bytes, rows in order. Pixels are scaled to [0, 1].
    """
    paths = [paths] if isinstance(paths, str) else list(paths)
    labels, images = [], []
    for path in paths:
        with open(path, 'rb') as f:
            raw = f.read()
        try:
            file_labels, file_pixels = parse_cifar_bytes(raw)
        except FormatError as exc:
            error = FormatError(f"{path}: {exc}")
            error.offset = exc.offset
            raise error from exc
        labels.append(file_labels)
        images.append(file_pixels)
        logger.info(f"Loaded {len(file_labels)} CIFAR-10 records from {path}")
    y = np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64)
    x = np.concatenate(images) if images else np.zeros((0, 3, 32, 32), dtype=np.uint8)
    if limit is not None:
        y, x = y[:limit], x[:limit]
    sensitive = np.array([living_nonliving(int(label)) for label in y], dtype=np.int64)
    return Dataset(x.astype(np.float32) / 255.0, y, sensitive, task_classes=len(CIFAR_CLASSES),
                   sensitive_classes=2, dataset_id='cifar10')
