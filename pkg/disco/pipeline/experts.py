"""Per-attribute filter generators that can be swapped into a trained pipeline."""

import logging
from collections import OrderedDict
from typing import Dict, List

import numpy as np

from ..benchmark.container import BenchmarkReader, BenchmarkRecord, write_benchmark
from ..errors import ConfigError, FormatError
from .pipeline import SplitPipeline

logger = logging.getLogger(__name__)


class ExpertFilterBank:
    """Trained filter-generator states keyed by the sensitive attribute they hide.

    The client and task networks are shared; only the filter generator changes when switching experts.
    """

    def __init__(self):
        self._experts: Dict[str, Dict[str, np.ndarray]] = OrderedDict()

    def __contains__(self, attribute: str) -> bool:
        return attribute in self._experts

    def __len__(self) -> int:
        return len(self._experts)

    def attributes(self) -> List[str]:
        return list(self._experts)

    def add(self, attribute: str, pipeline: SplitPipeline) -> None:
        if attribute in self._experts:
            logger.info(f"Replacing expert filter for '{attribute}'")
        self._experts[attribute] = pipeline.filter_gen.state_dict()

    def install(self, attribute: str, pipeline: SplitPipeline) -> None:
        """Load the expert for ``attribute`` into ``pipeline.filter_gen``."""
        if attribute not in self._experts:
            raise ConfigError(f"No expert filter for attribute '{attribute}'", key=attribute)
        pipeline.filter_gen.load_state_dict(self._experts[attribute])
        logger.debug(f"Installed expert filter for '{attribute}'")

    def save(self, path: str) -> int:
        records = [BenchmarkRecord(i, 'expert-filter', attribute, tensors=OrderedDict(state))
                   for i, (attribute, state) in enumerate(self._experts.items())]
        return write_benchmark(records, path)

    @classmethod
    def load(cls, path: str) -> 'ExpertFilterBank':
        bank = cls()
        with BenchmarkReader(path) as reader:
            for record in reader:
                if record.defense_id != 'expert-filter':
                    raise FormatError(f"Record {record.record_id} is not an expert filter")
                bank._experts[record.dataset_id] = dict(record.tensors)
        return bank
