"""Multi-run experiments: defense comparison, noise baseline and attribute-overlap study."""

import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from ..attacks import AttackConfig, evaluate_attack_suite
from ..data import Dataset, SynthConfig, generate_synthetic
from ..errors import ConfigError
from ..pipeline import SplitPipeline
from ..tasks import Task, TaskManager
from .config import TrainConfig
from .protocol import evaluate_utility, finetune_server, train_pipeline
from .sweep import attack_prefix, report_columns

logger = logging.getLogger(__name__)

PipelineFactory = Callable[[str, int], SplitPipeline]


def defense_comparison(train: Dataset, evaluation: Dataset, defenses: Sequence[str], seeds: Sequence[int],
                       build_pipeline: PipelineFactory, cfg: TrainConfig,
                       attack_configs: Sequence[AttackConfig], workers: int = 1,
                       manager: Optional[TaskManager] = None) -> List[Dict[str, Any]]:
    """Train one pipeline per (defense, seed) and attack it; rows in (defense, seed) order."""
    def run(task: Task) -> Dict[str, Any]:
        pipeline = build_pipeline(task['defense'], task.seed)
        train_pipeline(pipeline, train, cfg.replace(seed=task.seed))
        row: Dict[str, Any] = {'defense': task['defense'], 'seed': task.seed,
                               'utility_acc': evaluate_utility(pipeline, evaluation)}
        for i, report in enumerate(evaluate_attack_suite(pipeline, evaluation, attack_configs)):
            row.update(report_columns(report, attack_prefix(attack_configs[i], i)))
        return row

    manager = manager or TaskManager(workers)
    manager.register('defense_run', run)
    manager.add_tasks([Task(0, f"{defense}/seed{seed}", 'defense_run', {'defense': defense}, seed)
                       for defense in defenses for seed in seeds])
    return manager.run()


@dataclass
class NoiseSweepResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    target_ssim: Optional[float] = None
    matched_sigma: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'rows': self.rows, 'target_ssim': self.target_ssim, 'matched_sigma': self.matched_sigma}


def noise_sweep(pipeline: SplitPipeline, train: Dataset, evaluation: Dataset, sigma_grid: Sequence[float],
                cfg: TrainConfig, attack_cfg: AttackConfig,
                target_ssim: Optional[float] = None) -> NoiseSweepResult:
    """Gaussian activation noise of increasing sigma on a trained pipeline.

    At each sigma the server is fitted to the noisy activations, then task
    utility and reconstruction SSIM are measured. With ``target_ssim`` the
    sweep stops at the first sigma whose SSIM falls to the target.
    """
    if attack_cfg.mode != 'SI':
        raise ConfigError("The noise sweep scores input reconstruction; the attack needs mode SI",
                          key='attack_mode')
    if not sigma_grid:
        raise ConfigError("The sigma grid is empty", key='sigma_grid')
    result = NoiseSweepResult(target_ssim=target_ssim)
    chance = 1.0 / pipeline.task_classes
    for sigma in sigma_grid:
        point = copy.deepcopy(pipeline)
        point.set_defense('gaussian_noise')
        point.noise = point.noise.replace(sigma=float(sigma))
        finetune_server(point, train, cfg)
        report = evaluate_attack_suite(point, evaluation, [attack_cfg])[0]
        row = {'sigma': float(sigma), 'utility_acc': evaluate_utility(point, evaluation), 'chance': chance,
               'attack_status': report.status}
        row.update({f"attack_{k}": v for k, v in report.summary().items()})
        result.rows.append(row)
        logger.info(f"sigma={sigma}: utility {row['utility_acc']:.3f}, ssim {row.get('attack_ssim_mean')}")
        if target_ssim is not None and report.ok and row['attack_ssim_mean'] <= target_ssim:
            result.matched_sigma = float(sigma)
            break
    if target_ssim is not None and result.matched_sigma is None:
        logger.warning(f"No sigma in the grid reached SSIM {target_ssim}")
    return result


@dataclass
class CorrelationResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def summary(self) -> Dict[str, Dict[str, float]]:
        """Mean utility and leakage per overlap."""
        out: Dict[str, Dict[str, float]] = {}
        for overlap in sorted({row['overlap'] for row in self.rows}):
            rows = [row for row in self.rows if row['overlap'] == overlap]
            out[f"{overlap:g}"] = {
                'utility_mean': float(np.mean([row['utility_acc'] for row in rows])),
                'leakage_mean': float(np.mean([row['leakage'] for row in rows])),
            }
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {'rows': self.rows, 'summary': self.summary()}


def correlation_study(synth: SynthConfig, overlaps: Sequence[float], seeds: Sequence[int], n_train: int,
                      n_test: int, build_pipeline: PipelineFactory, cfg: TrainConfig,
                      attack_cfg: AttackConfig, workers: int = 1,
                      manager: Optional[TaskManager] = None) -> CorrelationResult:
    """Privacy and utility of the disco defense as task and sensitive cues overlap more or less.

    Leakage is the attribute attack's accuracy in SA mode and the mean
    reconstruction SSIM in SI mode.
    """
    def run(task: Task) -> Dict[str, Any]:
        data = generate_synthetic(synth.replace(overlap=task['overlap'], seed=task.seed), n_train + n_test)
        train, test = data.split(n_train)
        pipeline = build_pipeline('disco', task.seed)
        train_pipeline(pipeline, train, cfg.replace(seed=task.seed))
        report = evaluate_attack_suite(pipeline, test, [attack_cfg])[0]
        summary = report.summary()
        leakage = summary.get('accuracy_mean', summary.get('ssim_mean', float('nan')))
        return {'overlap': task['overlap'], 'seed': task.seed,
                'utility_acc': evaluate_utility(pipeline, test), 'leakage': leakage}

    manager = manager or TaskManager(workers)
    manager.register('overlap_run', run)
    manager.add_tasks([Task(0, f"overlap={overlap}/seed{seed}", 'overlap_run', {'overlap': float(overlap)}, seed)
                       for overlap in overlaps for seed in seeds])
    result = CorrelationResult(manager.run())
    logger.info(f"Overlap study: {result.summary()}")
    return result
