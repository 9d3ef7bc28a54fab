"""Supervised-decoder and likelihood-maximisation attacks on transmitted activations."""

from .config import (ATTACK_KINDS, ATTACK_MODES, PARAMETRIZATIONS, AttackConfig, AttackReport, read_reports,
                     write_reports)
from .decoder import AttackFit, apply_model, train_leakage_classifier, train_supervised_decoder
from .images import read_pnm, save_reconstructions, write_pnm
from .likelihood import PixelImage, likelihood_maximization_attack, make_generator
from .suite import evaluate_attack_suite, run_attack_on_arrays, run_attack_on_records, split_indices

__all__ = [
    'ATTACK_KINDS', 'ATTACK_MODES', 'PARAMETRIZATIONS', 'AttackConfig', 'AttackReport', 'read_reports',
    'write_reports', 'AttackFit', 'apply_model', 'train_leakage_classifier', 'train_supervised_decoder',
    'read_pnm', 'save_reconstructions', 'write_pnm', 'PixelImage', 'likelihood_maximization_attack',
    'make_generator', 'evaluate_attack_suite', 'run_attack_on_arrays', 'run_attack_on_records',
    'split_indices',
]
