"""Run configured attacks against a pipeline or against exported records."""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, DimensionError, NumericalError
from ..metrics import l1_distance, psnr, ssim
from ..tensor import Module
from .config import AttackConfig, AttackReport
from .decoder import apply_model, train_leakage_classifier, train_supervised_decoder
from .likelihood import likelihood_maximization_attack

logger = logging.getLogger(__name__)


def split_indices(n: int, cfg: AttackConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Training pairs are the first ``budget`` samples, targets the last ``targets``."""
    if cfg.targets > n:
        raise ConfigError(f"Cannot attack {cfg.targets} targets out of {n} samples", key='targets')
    eval_idx = np.arange(n - cfg.targets, n)
    if cfg.kind != 'decoder':
        return np.arange(0), eval_idx
    if cfg.budget > n - cfg.targets:
        raise ConfigError(f"A budget of {cfg.budget} pairs overlaps the {cfg.targets} targets "
                          f"of {n} samples", key='budget')
    return np.arange(cfg.budget), eval_idx


def _score_images(report: AttackReport, reconstructions: np.ndarray, originals: np.ndarray) -> None:
    for x_hat, x in zip(reconstructions, originals):
        report.ssim.append(ssim(x, x_hat))
        report.psnr.append(psnr(x, x_hat))
        report.l1.append(l1_distance(x, x_hat))


def run_attack_on_arrays(z: np.ndarray, x: Optional[np.ndarray], sensitive: Optional[np.ndarray],
                         cfg: AttackConfig, client: Optional[Module] = None,
                         defense: str = '') -> AttackReport:
    """One attack over intercepted activations ``z``.

    Decoder attacks only see the (z, target) pairs of their budget; the
    likelihood attack only sees the client weights (``client``) and the target z.
    Inputs and labels of the targets are used for scoring alone.
    """
    cfg.validate()
    z = np.asarray(z, dtype=np.float32)
    if cfg.mode == 'SI' and x is None:
        raise DimensionError("Input reconstruction attacks need the true inputs for scoring")
    if cfg.mode == 'SA' and sensitive is None:
        raise DimensionError("Attribute attacks need the sensitive labels")
    train_idx, eval_idx = split_indices(len(z), cfg)
    try:
        if cfg.kind == 'likelihood_max':
            return _likelihood_suite(z, x, eval_idx, cfg, client, defense)
        if cfg.mode == 'SI':
            fit = train_supervised_decoder(z[train_idx], x[train_idx], cfg)
            report = AttackReport(kind=cfg.kind, mode=cfg.mode, defense=defense, config=cfg.to_dict(),
                                  final_loss=fit.losses[-1], loss_history=fit.losses, model=fit.model)
            report.reconstructions = apply_model(fit.model, z[eval_idx])
            _score_images(report, report.reconstructions, x[eval_idx])
        else:
            labels = np.asarray(sensitive, dtype=np.int64)
            fit = train_leakage_classifier(z[train_idx], labels[train_idx], cfg)
            report = AttackReport(kind=cfg.kind, mode=cfg.mode, defense=defense, config=cfg.to_dict(),
                                  final_loss=fit.losses[-1], loss_history=fit.losses, model=fit.model)
            logits = apply_model(fit.model, z[eval_idx])
            report.correct = [int(v) for v in np.argmax(logits, axis=1) == labels[eval_idx]]
    except NumericalError as exc:
        return AttackReport.failed(cfg, f"non-finite loss: {exc}", defense)
    logger.info(f"{cfg.kind} attack ({cfg.mode}) on '{defense}': {report.summary()}")
    return report


def _likelihood_suite(z, x, eval_idx, cfg, client, defense) -> AttackReport:
    if client is None:
        raise ConfigError("Likelihood maximisation needs the client weights", key='client')
    report = AttackReport(kind=cfg.kind, mode=cfg.mode, defense=defense, config=cfg.to_dict())
    images = []
    for i in eval_idx:
        x_hat, single = likelihood_maximization_attack(z[i], client, cfg, x[i], image_size=x.shape[-1],
                                                       defense=defense)
        if not single.ok:
            return single
        images.append(x_hat)
        report.ssim.extend(single.ssim)
        report.psnr.extend(single.psnr)
        report.l1.extend(single.l1)
        report.loss_history.append(single.final_loss)
    report.final_loss = float(np.mean(report.loss_history))
    report.reconstructions = np.stack(images)
    logger.info(f"likelihood_max attack on '{defense}': {report.summary()}")
    return report


def run_attack_on_records(records: Sequence, cfg: AttackConfig, client: Optional[Module] = None) -> AttackReport:
    """Attack benchmark records holding ``z`` (and ``x`` for input reconstruction)."""
    if not records:
        raise ConfigError("No benchmark records to attack", key='records')
    z = np.stack([r.tensors['z'] for r in records])
    x = np.stack([r.tensors['x'] for r in records]) if 'x' in records[0].tensors else None
    sensitive = np.array([r.sensitive_label for r in records], dtype=np.int64)
    return run_attack_on_arrays(z, x, sensitive, cfg, client, defense=records[0].defense_id)


def evaluate_attack_suite(pipeline, dataset, configs: Sequence[AttackConfig]) -> List[AttackReport]:
    """Every configured attack against the activations the pipeline transmits for ``dataset``.

    The defense randomness is reseeded from the pipeline seed first, so the
    intercepted activations (and the reports) depend on the seeds only.
    """
    if not configs:
        return []
    pipeline.reseed_defense(pipeline.seed)
    z = pipeline.collect_activations(dataset.images)
    reports = []
    for cfg in configs:
        client = pipeline.client_view(cfg.bn_visible) if cfg.kind == 'likelihood_max' else None
        reports.append(run_attack_on_arrays(z, dataset.images, dataset.sensitive_labels, cfg, client,
                                            defense=pipeline.defense_mode))
    return reports
