"""Min-max training protocol, pruning-ratio sweeps and multi-run studies."""

from .config import PRIVACY_MODES, TrainConfig
from .generalization import GapReport, joint_loss, measure_generalization_gap
from .logs import CSV_FIELDS, LossRecord, read_loss_csv, write_json, write_loss_csv, write_rows_csv
from .protocol import (Trainer, TrainingResult, adversary_loss, evaluate_utility, finetune_server,
                       joint_objective, make_adversary, phase1_train_utility, phase2_train_filter,
                       train_pipeline)
from .studies import (CorrelationResult, NoiseSweepResult, correlation_study, defense_comparison,
                      noise_sweep)
from .sweep import evaluate_point, sweep_pruning_ratio

__all__ = [
    'PRIVACY_MODES', 'TrainConfig', 'GapReport', 'joint_loss', 'measure_generalization_gap',
    'CSV_FIELDS', 'LossRecord', 'read_loss_csv', 'write_json', 'write_loss_csv', 'write_rows_csv',
    'Trainer', 'TrainingResult', 'adversary_loss', 'evaluate_utility', 'finetune_server',
    'joint_objective', 'make_adversary', 'phase1_train_utility', 'phase2_train_filter', 'train_pipeline',
    'CorrelationResult', 'NoiseSweepResult', 'correlation_study', 'defense_comparison', 'noise_sweep',
    'evaluate_point', 'sweep_pruning_ratio',
]
