"""Two-phase min-max training of the split pipeline.

Phase 1 trains the pre-processor, client network and task network
for utility with the defense bypassed. Phase 2 alternates, per batch,

  (a) adversary steps minimising its attack loss on detached activations,
  (b) task steps minimising L_util over the task network (and the client unless frozen),
  (c) filter steps minimising L_J = rho * L_util - L_priv over the filter generator only.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..data import Dataset
from ..errors import ConfigError, DimensionError, NumericalError, TrainingError
from ..metrics import top1_accuracy
from ..pipeline import LeakageClassifier, ReconstructionDecoder, SplitPipeline
from ..tensor import SGD, Module, Tensor, no_grad, ops
from .config import TrainConfig
from .logs import LossRecord, write_json

logger = logging.getLogger(__name__)


def make_adversary(pipeline: SplitPipeline, mode: str, sensitive_classes: int = 2,
                   seed: int = 0) -> Module:
    """Proxy adversary for the privacy mode.

    SI reconstructs the input with a transpose-conv decoder; SA predicts the
    sensitive attribute from the flattened activations.
    """
    rng = np.random.default_rng((seed, 3))
    channels, size, _ = pipeline.activation_shape
    if mode == 'SI':
        return ReconstructionDecoder(channels, size, pipeline.cfg.input_size, rng=rng)
    if mode == 'SA':
        return LeakageClassifier(channels * size * size, sensitive_classes, rng=rng)
    raise DimensionError(f"Unknown privacy mode '{mode}'")


def adversary_loss(adversary: Module, z: Tensor, images: np.ndarray, sensitive: np.ndarray,
                   mode: str) -> Tuple[Tensor, float]:
    """Attack loss on one batch and the adversary's metric (l1 or accuracy)."""
    output = adversary(z)
    if mode == 'SI':
        loss = ops.l1_loss(output, Tensor.constant(images.astype(output.data.dtype)))
        return loss, loss.item()
    loss = ops.softmax_cross_entropy(output, sensitive)
    return loss, top1_accuracy(output.data, sensitive)


def _parameter_norms(*modules: Module) -> Dict[str, float]:
    norms = {}
    for module in modules:
        for name, p in module.named_parameters(f"{type(module).__name__}."):
            norms[name] = float(np.linalg.norm(p.data)) if np.all(np.isfinite(p.data)) else float('nan')
    return norms


class _EpochStats:
    """Running sample-weighted means over one epoch."""

    def __init__(self):
        self.totals: Dict[str, float] = {}
        self.count = 0

    def add(self, n: int, **values: float) -> None:
        self.count += n
        for key, value in values.items():
            self.totals[key] = self.totals.get(key, 0.0) + value * n

    def mean(self, key: str) -> float:
        return self.totals.get(key, 0.0) / self.count if self.count else 0.0


@dataclass
class TrainingResult:
    history: List[LossRecord] = field(default_factory=list)
    adversary: Optional[Module] = None


class Trainer:
    """Runs the training phases on one pipeline and keeps the loss history."""

    def __init__(self, pipeline: SplitPipeline, cfg: TrainConfig, out_dir: Optional[str] = None):
        cfg.validate()
        self.pipeline = pipeline
        self.cfg = cfg
        self.out_dir = out_dir
        self.rng = np.random.default_rng(cfg.seed)
        self.step = 0
        self.history: List[LossRecord] = []
        pipeline.set_temperature(cfg.temperature)
        pipeline.set_pruning_ratio(cfg.pruning_ratio)

    def _diverged(self, exc: Exception, phase: int, epoch: int, *modules: Module) -> TrainingError:
        last = next((r for r in reversed(self.history) if r.is_finite()), None)
        diagnostics = {
            'step': self.step,
            'phase': phase,
            'epoch': epoch,
            'error': str(exc),
            'last_record': last.__dict__ if last else None,
            'parameter_norms': _parameter_norms(self.pipeline, *modules),
        }
        if self.out_dir:
            os.makedirs(self.out_dir, exist_ok=True)
            write_json(diagnostics, os.path.join(self.out_dir, 'diagnostics.json'))
        logger.error(f"Training diverged in phase {phase}, epoch {epoch}, step {self.step}: {exc}")
        return TrainingError(f"Training diverged in phase {phase}: {exc}", self.step, diagnostics)

    def _record(self, phase: int, epoch: int, stats: _EpochStats) -> LossRecord:
        record = LossRecord(step=self.step, phase=phase, epoch=epoch,
                            l_util=stats.mean('l_util'), l_priv=stats.mean('l_priv'),
                            l_joint=stats.mean('l_joint'), util_acc=stats.mean('util_acc'),
                            adv_metric=stats.mean('adv_metric'))
        self.history.append(record)
        logger.info(f"phase {phase} epoch {epoch}: L_util={record.l_util:.4f} L_priv={record.l_priv:.4f} "
                    f"L_J={record.l_joint:.4f} util_acc={record.util_acc:.3f}")
        return record

    # ------------------------------------------------------------------

    def phase1(self, data: Dataset) -> List[LossRecord]:
        """Utility-only training of the client and task networks with the defense bypassed."""
        if len(data) == 0:
            raise DimensionError("Phase 1 needs a non-empty training set")
        pipe, cfg = self.pipeline, self.cfg
        pipe.train()
        opt = SGD(pipe.client_parameters() + pipe.task_parameters(), cfg.lr, cfg.momentum)
        records = []
        for epoch in range(cfg.phase1_epochs):
            stats = _EpochStats()
            try:
                for images, y, _ in data.batches(cfg.batch_size, self.rng):
                    self.step += 1
                    pipe.zero_grad()
                    logits = pipe(Tensor(images), defend_output=False)
                    loss = ops.softmax_cross_entropy(logits, y)
                    loss.backward()
                    opt.step()
                    acc = top1_accuracy(logits.data, y)
                    stats.add(len(y), l_util=loss.item(), l_joint=cfg.rho * loss.item(), util_acc=acc)
                    logger.debug(f"step {self.step}: L_util={loss.item():.4f}")
            except NumericalError as exc:
                raise self._diverged(exc, 1, epoch) from exc
            records.append(self._record(1, epoch, stats))
        return records

    def phase2(self, data: Dataset, adversary: Module, mode: Optional[str] = None) -> List[LossRecord]:
        """Alternating adversary / task / filter updates."""
        if self.pipeline.defense_mode != 'disco':
            raise ConfigError(f"Phase 2 trains the filter generator of a disco pipeline; "
                              f"this one defends with '{self.pipeline.defense_mode}'", key='defense_mode')
        if len(data) == 0:
            raise DimensionError("Phase 2 needs a non-empty training set")
        pipe, cfg = self.pipeline, self.cfg
        mode = mode or cfg.privacy_mode
        pipe.train()
        adversary.train()
        frozen = [pipe.preprocess, pipe.client] if cfg.freeze_client else []
        for module in frozen:
            module.eval()
            module.requires_grad_(False)
        task_params = pipe.task_parameters() + ([] if cfg.freeze_client else pipe.client_parameters())
        opt_adv = SGD(adversary.parameters(), cfg.lr, cfg.momentum)
        opt_task = SGD(task_params, cfg.lr, cfg.momentum)
        opt_filter = SGD(pipe.filter_parameters(), cfg.lr, cfg.momentum)
        records = []
        try:
            for epoch in range(cfg.phase2_epochs):
                stats = _EpochStats()
                try:
                    for images, y, y_hat in data.batches(cfg.batch_size, self.rng):
                        self.step += 1
                        x = Tensor(images)
                        l_priv, adv_metric = self._adversary_steps(x, images, y_hat, adversary, opt_adv, mode)
                        l_util, acc = self._task_steps(x, y, adversary, opt_task)
                        l_joint = self._filter_steps(x, images, y, y_hat, adversary, opt_filter, mode)
                        stats.add(len(y), l_util=l_util, l_priv=l_priv, l_joint=l_joint,
                                  util_acc=acc, adv_metric=adv_metric)
                except NumericalError as exc:
                    raise self._diverged(exc, 2, epoch, adversary) from exc
                records.append(self._record(2, epoch, stats))
        finally:
            for module in frozen:
                module.requires_grad_(True)
        return records

    def _adversary_steps(self, x, images, y_hat, adversary, opt, mode) -> Tuple[float, float]:
        with no_grad():
            z = self.pipeline.activations(x, hard=False).detach()
        loss_value, metric = 0.0, 0.0
        for _ in range(self.cfg.adversary_steps):
            adversary.zero_grad()
            loss, metric = adversary_loss(adversary, z, images, y_hat, mode)
            loss.backward()
            opt.step()
            loss_value = loss.item()
        logger.debug(f"step {self.step}: adversary loss {loss_value:.4f}")
        return loss_value, metric

    def _task_steps(self, x, y, adversary, opt) -> Tuple[float, float]:
        loss_value, acc = 0.0, 0.0
        for _ in range(self.cfg.task_steps):
            self.pipeline.zero_grad()
            logits = self.pipeline(x, hard=False)
            loss = ops.softmax_cross_entropy(logits, y)
            loss.backward()
            opt.step()
            loss_value, acc = loss.item(), top1_accuracy(logits.data, y)
        return loss_value, acc

    def _filter_steps(self, x, images, y, y_hat, adversary, opt, mode) -> float:
        value = 0.0
        for _ in range(self.cfg.filter_steps):
            self.pipeline.zero_grad()
            adversary.zero_grad()
            joint = joint_objective(self.pipeline, adversary, x, images, y, y_hat, self.cfg.rho, mode)
            joint.backward()
            opt.step()
            value = joint.item()
        adversary.zero_grad()
        return value

    def finetune_server(self, data: Dataset, epochs: Optional[int] = None) -> List[LossRecord]:
        """Retrain the task network on hard-masked activations at the current pruning ratio."""
        return finetune_server(self.pipeline, data, self.cfg, epochs, trainer=self)


def joint_objective(pipeline: SplitPipeline, adversary: Module, x: Tensor, images: np.ndarray,
                    y: np.ndarray, y_hat: np.ndarray, rho: float, mode: str) -> Tensor:
    """L_J = rho * L_util - L_priv on one batch, soft-masked."""
    z = pipeline.activations(x, hard=False)
    l_util = ops.softmax_cross_entropy(pipeline.task(z), y)
    l_priv, _ = adversary_loss(adversary, z, images, y_hat, mode)
    return ops.sub(ops.scale(l_util, rho), l_priv)


def finetune_server(pipeline: SplitPipeline, data: Dataset, cfg: TrainConfig,
                    epochs: Optional[int] = None, trainer: Optional[Trainer] = None) -> List[LossRecord]:
    """Train only the task network against what the deployed client transmits.

    The client side runs in eval mode with the hard mask (or the baseline
    defense), so the server adapts to the current pruning ratio.
    """
    epochs = cfg.server_epochs if epochs is None else epochs
    rng = trainer.rng if trainer else np.random.default_rng((cfg.seed, 2))
    pipeline.preprocess.eval()
    pipeline.client.eval()
    pipeline.filter_gen.eval()
    pipeline.task.train()
    opt = SGD(pipeline.task_parameters(), cfg.lr, cfg.momentum)
    records = []
    step = trainer.step if trainer else 0
    for epoch in range(epochs):
        stats = _EpochStats()
        try:
            for images, y, _ in data.batches(cfg.batch_size, rng):
                step += 1
                with no_grad():
                    z = pipeline.activations(Tensor(images), hard=True).detach()
                pipeline.task.zero_grad()
                logits = pipeline.task(z)
                loss = ops.softmax_cross_entropy(logits, y)
                loss.backward()
                opt.step()
                stats.add(len(y), l_util=loss.item(), l_joint=cfg.rho * loss.item(),
                          util_acc=top1_accuracy(logits.data, y))
        except NumericalError as exc:
            if trainer:
                trainer.step = step
                raise trainer._diverged(exc, 3, epoch) from exc
            raise TrainingError(f"Server fine-tuning diverged: {exc}", step) from exc
        record = LossRecord(step, 3, epoch, stats.mean('l_util'), 0.0, stats.mean('l_joint'),
                            stats.mean('util_acc'), 0.0)
        records.append(record)
        logger.info(f"server epoch {epoch}: L_util={record.l_util:.4f} util_acc={record.util_acc:.3f}")
    if trainer:
        trainer.step = step
        trainer.history.extend(records)
    return records


def evaluate_utility(pipeline: SplitPipeline, data: Dataset, batch_size: int = 64) -> float:
    """Top-1 task accuracy of the deployed (eval-mode, hard-masked) pipeline."""
    if len(data) == 0:
        raise DimensionError("Cannot evaluate utility on an empty set")
    return top1_accuracy(pipeline.predict(data.images, batch_size), data.task_labels)


def phase1_train_utility(pipeline: SplitPipeline, data: Dataset, cfg: TrainConfig,
                         out_dir: Optional[str] = None) -> List[LossRecord]:
    return Trainer(pipeline, cfg, out_dir).phase1(data)


def phase2_train_filter(pipeline: SplitPipeline, data: Dataset, cfg: TrainConfig,
                        mode: Optional[str] = None, adversary: Optional[Module] = None,
                        out_dir: Optional[str] = None) -> TrainingResult:
    mode = mode or cfg.privacy_mode
    adversary = adversary or make_adversary(pipeline, mode, data.sensitive_classes, cfg.seed)
    trainer = Trainer(pipeline, cfg, out_dir)
    return TrainingResult(trainer.phase2(data, adversary, mode), adversary)


def train_pipeline(pipeline: SplitPipeline, data: Dataset, cfg: TrainConfig,
                   out_dir: Optional[str] = None) -> TrainingResult:
    """Full schedule for the pipeline's defense mode.

    disco runs both phases and then fits the server to the hard mask;
    the baselines skip phase 2 and fit the server to their perturbation.
    """
    trainer = Trainer(pipeline, cfg, out_dir)
    trainer.phase1(data)
    adversary = None
    if pipeline.defense_mode == 'disco':
        adversary = make_adversary(pipeline, cfg.privacy_mode, data.sensitive_classes, cfg.seed)
        trainer.phase2(data, adversary)
    if pipeline.defense_mode != 'none' and cfg.server_epochs:
        trainer.finetune_server(data)
    pipeline.eval()
    return TrainingResult(trainer.history, adversary)
