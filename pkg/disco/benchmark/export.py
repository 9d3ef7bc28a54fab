"""Export a pipeline's transmitted activations as benchmark records."""

import logging
from collections import OrderedDict
from typing import TYPE_CHECKING, Dict, Iterator

import numpy as np

from ..errors import DimensionError, FormatError
from .container import BenchmarkRecord, write_benchmark

if TYPE_CHECKING:
    from ..data import Dataset
    from ..pipeline import SplitPipeline

logger = logging.getLogger(__name__)

WEIGHT_PREFIX = 'client/'


def _records(pipeline: 'SplitPipeline', dataset: 'Dataset', n: int,
             include_inputs: bool) -> Iterator[BenchmarkRecord]:
    pipeline.reseed_defense(pipeline.seed)
    z = pipeline.collect_activations(dataset.images[:n])
    for i in range(n):
        tensors = OrderedDict(z=z[i])
        if include_inputs:
            tensors['x'] = dataset.images[i]
        if i == 0:
            for name, value in pipeline.client_state().items():
                tensors[WEIGHT_PREFIX + name] = value
        yield BenchmarkRecord(i, pipeline.defense_mode, dataset.dataset_id,
                              int(dataset.task_labels[i]), int(dataset.sensitive_labels[i]), tensors)


def export_run(pipeline: 'SplitPipeline', dataset: 'Dataset', n: int, path: str,
               include_inputs: bool = True) -> int:
    """Write the first ``n`` samples as (z, x, y, y_hat) records; returns the file size.

    Record 0 also carries the pre-processor and client weights as
    ``client/<name>`` tensors.
    """
    if not 0 <= n <= len(dataset):
        raise DimensionError(f"Cannot export {n} records from a dataset of {len(dataset)}")
    size = write_benchmark(list(_records(pipeline, dataset, n, include_inputs)), path)
    logger.info(f"Exported {n} records of '{pipeline.defense_mode}' activations to {path}")
    return size


def client_state_from_record(record: BenchmarkRecord) -> Dict[str, np.ndarray]:
    state = {name[len(WEIGHT_PREFIX):]: value for name, value in record.tensors.items()
             if name.startswith(WEIGHT_PREFIX)}
    if not state:
        raise FormatError(f"Record {record.record_id} carries no client weights")
    return state


def restore_client(pipeline: 'SplitPipeline', record: BenchmarkRecord) -> None:
    """Load exported client weights into a pipeline of the same architecture."""
    state = client_state_from_record(record)
    for prefix, module in (('preprocess.', pipeline.preprocess), ('client.', pipeline.client)):
        module.load_state_dict({k[len(prefix):]: v for k, v in state.items() if k.startswith(prefix)})
