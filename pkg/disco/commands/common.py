"""Helpers shared by the commands."""

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..attacks import AttackReport, save_reconstructions, write_reports
from ..benchmark import load_state, save_state
from ..data import Dataset
from ..pipeline import ExpertFilterBank, SplitPipeline
from ..training import LossRecord, TrainingResult, train_pipeline, write_json, write_loss_csv, write_rows_csv

logger = logging.getLogger(__name__)

CHECKPOINT = 'pipeline.dibm'
EXPERTS = 'experts.dibm'


def write_rows(system, name: str, rows: Sequence[Dict[str, Any]]) -> str:
    path = system.path(name)
    write_rows_csv(rows, path)
    system.record(path)
    return path


def write_summary(system, name: str, payload: Any) -> str:
    path = system.path(name)
    write_json(payload, path)
    system.record(path)
    return path


def write_losses(system, name: str, records: List[LossRecord]) -> str:
    path = system.path(name)
    write_loss_csv(records, path)
    system.record(path)
    return path


def write_attack_reports(system, name: str, reports: List[AttackReport], images: bool = True) -> str:
    """JSON-lines reports plus PPM reconstructions of input attacks."""
    path = system.path(name)
    write_reports(reports, path)
    system.record(path)
    if images:
        for i, report in enumerate(reports):
            if report.ok and report.reconstructions is not None:
                for image in save_reconstructions(system.path(f"images/attack{i}"), report.reconstructions,
                                                  prefix=f"{report.kind}_{report.defense}"):
                    system.record(image)
    return path


def save_pipeline(system, pipeline: SplitPipeline) -> str:
    path = system.path(CHECKPOINT)
    save_state(pipeline.state_dict(), path, defense_id=pipeline.defense_mode, dataset_id='checkpoint')
    system.record(path)
    return path


def prepare_pipeline(config, system, train: Dataset,
                     defense_mode: Optional[str] = None) -> Tuple[SplitPipeline, TrainingResult]:
    """The configured pipeline, loaded from ``checkpoint`` or trained on ``train``."""
    pipeline = config.build_pipeline(defense_mode)
    if config.checkpoint:
        pipeline.load_state_dict(load_state(config.checkpoint))
        pipeline.eval()
        logger.info(f"Loaded pipeline weights from {config.checkpoint}")
        if config.expert_bank:
            ExpertFilterBank.load(config.expert_bank).install(config.expert_attribute, pipeline)
            logger.info(f"Installed the '{config.expert_attribute}' expert filter from {config.expert_bank}")
        return pipeline, TrainingResult()
    result = train_pipeline(pipeline, train, config.train_config(), out_dir=system.out_dir)
    write_losses(system, system.new_name('losses') + '.csv', result.history)
    return pipeline, result


def seeds(config) -> List[int]:
    return [config.seed + i for i in range(config.eval_seeds)]


def save_expert(config, system, pipeline: SplitPipeline) -> List[str]:
    """Add the trained filter generator to the expert bank under ``expert_attribute``."""
    bank = ExpertFilterBank.load(config.expert_bank) if config.expert_bank else ExpertFilterBank()
    bank.add(config.expert_attribute, pipeline)
    path = system.path(EXPERTS)
    bank.save(path)
    system.record(path)
    return bank.attributes()
