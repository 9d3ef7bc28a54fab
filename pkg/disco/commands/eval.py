"""End-to-end evaluation: defense comparison, pruning sweep, noise baseline, overlap study."""

import logging

import numpy as np

from ..training import (correlation_study, defense_comparison, noise_sweep, sweep_pruning_ratio,
                        train_pipeline)
from ..training.sweep import attack_prefix
from .command_factory import command
from .common import seeds, write_rows, write_summary

logger = logging.getLogger(__name__)


@command
def cmd_eval(config, system):
    train, test = config.load_data()
    train_cfg = config.train_config()
    leakage = config.attack_config('decoder', 'SA')
    reconstruction = config.attack_config(mode='SI')
    attacks = [leakage, reconstruction]
    ssim_column = attack_prefix(reconstruction, 1) + '_ssim_mean'
    manager = system.task_manager

    rows = defense_comparison(train, test, config.eval_defenses, seeds(config), config.build_pipeline,
                              train_cfg, attacks, config.workers, manager=manager)
    write_rows(system, 'eval_defenses.csv', rows)
    summary = {'defenses': _means(rows, 'defense', ['utility_acc', attack_prefix(leakage, 0) + '_accuracy_mean',
                                                     ssim_column])}

    if config.r_grid:
        pipeline = config.build_pipeline('disco')
        train_pipeline(pipeline, train, train_cfg)
        sweep = sweep_pruning_ratio(pipeline, train, test, config.r_grid, config.retrain_server, train_cfg,
                                    [reconstruction], config.workers, manager=manager)
        write_rows(system, 'eval_sweep.csv', sweep)
        summary['sweep_points'] = len(sweep)

    if config.sigma_grid:
        target = config.target_ssim
        if target is None:
            disco_ssim = [row[ssim_column] for row in rows if row['defense'] == 'disco' and ssim_column in row]
            target = float(np.mean(disco_ssim)) if disco_ssim else None
        baseline = config.build_pipeline('none')
        train_pipeline(baseline, train, train_cfg)
        noise = noise_sweep(baseline, train, test, config.sigma_grid, train_cfg, reconstruction, target)
        write_rows(system, 'eval_noise.csv', noise.rows)
        summary['noise'] = {'target_ssim': noise.target_ssim, 'matched_sigma': noise.matched_sigma}

    if config.dataset == 'synthetic' and config.eval_overlaps:
        study = correlation_study(config.synth_config(), config.eval_overlaps, seeds(config), config.n_train,
                                  config.n_test, config.build_pipeline, train_cfg, leakage, config.workers,
                                  manager=manager)
        write_rows(system, 'eval_overlap.csv', study.rows)
        summary['overlap'] = study.summary()

    write_summary(system, 'eval.json', summary)
    return summary


def _means(rows, group: str, columns):
    out = {}
    for name in dict.fromkeys(row[group] for row in rows):
        members = [row for row in rows if row[group] == name]
        out[name] = {column: float(np.mean([row[column] for row in members]))
                     for column in columns if all(column in row for row in members)}
    return out
