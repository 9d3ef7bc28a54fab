"""Inference-time sweep of the pruning ratio R."""

import copy
import logging
from typing import Any, Dict, List, Optional, Sequence

from ..attacks import AttackConfig, AttackReport, evaluate_attack_suite
from ..data import Dataset
from ..errors import ConfigError
from ..pipeline import SplitPipeline, active_channel_count
from ..pipeline.masking import check_ratio
from ..tasks import Task, TaskManager
from .config import TrainConfig
from .protocol import evaluate_utility, finetune_server

logger = logging.getLogger(__name__)


def report_columns(report: AttackReport, prefix: str) -> Dict[str, Any]:
    """Flatten an attack report into result-table columns."""
    row: Dict[str, Any] = {f"{prefix}_status": report.status}
    for key, value in report.summary().items():
        row[f"{prefix}_{key}"] = value
    return row


def attack_prefix(cfg: AttackConfig, index: int) -> str:
    return f"attack{index}_{cfg.kind}_{cfg.mode}"


def evaluate_point(pipeline: SplitPipeline, train: Dataset, evaluation: Dataset, ratio: float,
                   retrain_server: bool, cfg: TrainConfig,
                   attack_configs: Sequence[AttackConfig]) -> Dict[str, Any]:
    """Utility and attack metrics of a private copy of ``pipeline`` at ratio R."""
    point = copy.deepcopy(pipeline)
    point.set_pruning_ratio(ratio)
    if retrain_server:
        finetune_server(point, train, cfg)
    row: Dict[str, Any] = {
        'R': ratio,
        'active_channels': active_channel_count(ratio, point.client.out_channels),
        'utility_acc': evaluate_utility(point, evaluation),
    }
    for i, report in enumerate(evaluate_attack_suite(point, evaluation, attack_configs)):
        row.update(report_columns(report, attack_prefix(attack_configs[i], i)))
    logger.info(f"R={ratio}: utility {row['utility_acc']:.3f}")
    return row


def sweep_pruning_ratio(pipeline: SplitPipeline, train: Dataset, evaluation: Dataset,
                        r_grid: Sequence[float], retrain_server: bool = False,
                        cfg: Optional[TrainConfig] = None,
                        attack_configs: Sequence[AttackConfig] = (),
                        workers: int = 1, manager: Optional[TaskManager] = None) -> List[Dict[str, Any]]:
    """One trade-off row per R, in grid order.

    Every point works on its own copy of the pipeline; with
    ``retrain_server`` the task network is fine-tuned on hard-masked activations at
    that R with a per-point seed.
    """
    if not r_grid:
        raise ConfigError("The pruning-ratio grid is empty", key='r_grid')
    for ratio in r_grid:
        check_ratio(ratio)
    cfg = cfg or TrainConfig()
    manager = manager or TaskManager(workers)
    manager.register('sweep_point', lambda task: evaluate_point(
        pipeline, train, evaluation, task['ratio'], retrain_server,
        cfg.replace(seed=task.seed), attack_configs))
    manager.add_tasks([Task(priority=0, name=f"R={ratio}", kind='sweep_point',
                            params={'ratio': float(ratio)}, seed=cfg.seed + i)
                       for i, ratio in enumerate(r_grid)])
    return manager.run()
