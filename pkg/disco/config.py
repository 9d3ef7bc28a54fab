"""Flat key-value experiment configuration shared by all commands."""

import logging
from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

from .attacks import AttackConfig
from .data import Dataset, SynthConfig, generate_synthetic, load_cifar_binary
from .errors import ConfigError
from .interfaces import BaseConfig
from .info import DROPOUT_MODES
from .pipeline import DEFENSE_MODES, NoiseConfig, PreprocessConfig, SplitPipeline
from .pipeline.networks import MAX_SPLIT
from .training import TrainConfig

logger = logging.getLogger(__name__)

DATASETS = ('synthetic', 'cifar')

LIST_KEYS = {
    'r_grid': float, 'sigma_grid': float, 'eval_overlaps': float, 'eval_defenses': str, 'cifar_path': str,
}

DATA_COMMANDS = ('train', 'attack', 'sweep', 'export', 'eval')
REQUIRED_KEYS = {
    'sweep': ('r_grid',),
    'export': ('export_count',),
    'mi': ('mi_systems',),
}


@dataclass
class ExperimentConfig(BaseConfig):
    """Every key a command may read. Unset optional keys are None."""
    seed: int = 0
    out_dir: str = 'results'
    dataset: Optional[str] = None
    cifar_path: Optional[List[str]] = None
    n_train: int = 512
    n_test: int = 128
    image_size: int = 32
    task_classes: int = 4
    sensitive_classes: int = 2
    correlation: float = 0.0
    overlap: float = 0.0
    noise: float = 0.05
    d: int = 4
    filters: int = 16
    preprocess: bool = True
    split_index: int = 3
    defense_mode: str = 'disco'
    noise_mu: float = -1.0
    noise_sigma: float = 400.0
    prune_probability: float = 0.6
    per_sample_prune: bool = True
    rho: float = 1.0
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 32
    phase1_epochs: int = 5
    phase2_epochs: int = 5
    temperature: float = 0.03
    pruning_ratio: float = 0.6
    adversary_steps: int = 1
    task_steps: int = 1
    filter_steps: int = 1
    freeze_client: bool = True
    privacy_mode: str = 'SA'
    attack_kind: str = 'decoder'
    attack_mode: str = 'SI'
    attack_budget: int = 256
    attack_iterations: int = 500
    attack_epochs: int = 20
    attack_lr: float = 0.01
    attack_targets: int = 8
    attack_parametrization: str = 'prior'
    bn_visible: bool = True
    stop_patience: int = 0
    r_grid: Optional[List[float]] = None
    retrain_server: bool = False
    server_epochs: int = 1
    workers: int = 1
    mi_systems: Optional[int] = None
    mi_max_alphabet: int = 16
    mi_max_layers: int = 3
    mi_keep_probability: Optional[float] = None
    mi_dropout: str = 'layer'
    export_count: Optional[int] = None
    export_path: str = 'benchmark.dibm'
    checkpoint: Optional[str] = None
    expert_attribute: Optional[str] = None
    expert_bank: Optional[str] = None
    sigma_grid: Optional[List[float]] = None
    target_ssim: Optional[float] = None
    eval_defenses: List[str] = field(default_factory=lambda: ['none', 'disco'])
    eval_overlaps: Optional[List[float]] = None
    eval_seeds: int = 1

    def validate(self) -> None:
        if self.dataset is not None and self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got '{self.dataset}'", key='dataset')
        if self.mi_max_alphabet < 2 or self.mi_max_layers < 1:
            raise ConfigError("mi_max_alphabet must be >= 2 and mi_max_layers >= 1", key='mi_max_alphabet')
        for key in ('n_train', 'n_test', 'workers', 'eval_seeds'):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}", key=key)
        if self.mi_systems is not None and self.mi_systems < 1:
            raise ConfigError(f"mi_systems must be >= 1, got {self.mi_systems}", key='mi_systems')
        if self.export_count is not None and self.export_count < 0:
            raise ConfigError(f"export_count must be >= 0, got {self.export_count}", key='export_count')
        for key, modes in (('defense_mode', [self.defense_mode]), ('eval_defenses', self.eval_defenses)):
            for mode in modes:
                if mode not in DEFENSE_MODES:
                    raise ConfigError(f"{key}: unknown defense '{mode}', expected one of {DEFENSE_MODES}", key=key)
        if self.mi_dropout not in DROPOUT_MODES:
            raise ConfigError(f"mi_dropout must be one of {DROPOUT_MODES}, got '{self.mi_dropout}'", key='mi_dropout')
        if self.mi_keep_probability is not None and not 0.0 <= self.mi_keep_probability <= 1.0:
            raise ConfigError(f"mi_keep_probability must lie in [0, 1], got {self.mi_keep_probability}",
                              key='mi_keep_probability')
        for key in ('r_grid', 'eval_overlaps'):
            for value in getattr(self, key) or []:
                if not 0.0 <= value <= 1.0:
                    raise ConfigError(f"{key} values must lie in [0, 1], got {value}", key=key)
        if self.dataset == 'cifar' and self.eval_overlaps:
            raise ConfigError("eval_overlaps sets up the synthetic overlap study; it needs dataset = synthetic",
                              key='eval_overlaps')
        if self.expert_bank and not self.expert_attribute:
            raise ConfigError("expert_bank needs expert_attribute to name the expert", key='expert_attribute')
        if self.expert_attribute and self.defense_mode != 'disco':
            raise ConfigError(f"Expert filters need defense_mode = disco, got '{self.defense_mode}'",
                              key='expert_attribute')
        if not 1 <= self.split_index <= MAX_SPLIT:
            raise ConfigError(f"split_index must lie in [1, {MAX_SPLIT}], got {self.split_index}", key='split_index')
        # Building every typed block validates it; errors name the experiment key.
        for prefix, build in (('', self.preprocess_config), ('noise_', self.noise_config),
                              ('', self.train_config), ('', self.synth_config),
                              ('attack_', self.attack_config)):
            try:
                build()
            except ConfigError as exc:
                raise ConfigError(str(exc), key=_experiment_key(prefix, exc.key)) from exc

    def require(self, command: str) -> None:
        """Check the keys ``command`` cannot run without."""
        required = list(REQUIRED_KEYS.get(command, ()))
        if command in DATA_COMMANDS:
            required.append('dataset')
            if self.dataset == 'cifar':
                required.append('cifar_path')
        for key in required:
            if getattr(self, key) in (None, []):
                raise ConfigError(f"Command '{command}' needs the key '{key}'", key=key)

    # ------------------------------------------------------------------
    # Typed blocks

    def preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig.from_mapping(dict(d=self.d, filters=self.filters, toggle=self.preprocess,
                                                  input_size=self.image_size))

    def noise_config(self) -> NoiseConfig:
        return NoiseConfig.from_mapping(dict(mu=self.noise_mu, sigma=self.noise_sigma,
                                             prune_probability=self.prune_probability,
                                             per_sample=self.per_sample_prune))

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_mapping({key: getattr(self, key) for key in TrainConfig.keys()})

    def synth_config(self) -> SynthConfig:
        return SynthConfig.from_mapping(dict(image_size=self.image_size, task_classes=self.task_classes,
                                             sensitive_classes=self.sensitive_classes,
                                             correlation=self.correlation, overlap=self.overlap,
                                             noise=self.noise, seed=self.seed))

    def attack_config(self, kind: Optional[str] = None, mode: Optional[str] = None) -> AttackConfig:
        return AttackConfig.from_mapping(dict(
            mode=mode or self.attack_mode, kind=kind or self.attack_kind, budget=self.attack_budget,
            iterations=self.attack_iterations, lr=self.attack_lr, momentum=self.momentum,
            epochs=self.attack_epochs, batch_size=self.batch_size, seed=self.seed,
            parametrization=self.attack_parametrization, bn_visible=self.bn_visible,
            stop_patience=self.stop_patience, targets=self.attack_targets,
            sensitive_classes=self.sensitive_classes))

    def build_pipeline(self, defense_mode: Optional[str] = None, seed: Optional[int] = None) -> SplitPipeline:
        return SplitPipeline(self.preprocess_config(), self.split_index, self.task_classes,
                             defense_mode or self.defense_mode, self.temperature, self.pruning_ratio,
                             self.noise_config(), self.seed if seed is None else seed)

    def load_data(self) -> Tuple[Dataset, Dataset]:
        """(train, test) split of the configured dataset."""
        total = self.n_train + self.n_test
        if self.dataset == 'cifar':
            data = load_cifar_binary(self.cifar_path, limit=total)
            if data.image_size != self.image_size:
                raise ConfigError(f"CIFAR images are {data.image_size}x{data.image_size}; "
                                  f"set image_size accordingly", key='image_size')
            if (data.task_classes, data.sensitive_classes) != (self.task_classes, self.sensitive_classes):
                raise ConfigError(f"CIFAR has {data.task_classes} task and {data.sensitive_classes} sensitive "
                                  f"classes; set task_classes and sensitive_classes accordingly",
                                  key='task_classes')
        else:
            data = generate_synthetic(self.synth_config(), total)
        if len(data) < total:
            raise ConfigError(f"Dataset holds {len(data)} samples, n_train + n_test = {total}", key='n_train')
        return data.split(self.n_train)


def _experiment_key(prefix: str, key: Optional[str]) -> Optional[str]:
    if key is None:
        return None
    renamed = {'toggle': 'preprocess', 'input_size': 'image_size', 'per_sample': 'per_sample_prune',
               'mode': 'attack_mode', 'kind': 'attack_kind', 'budget': 'attack_budget',
               'iterations': 'attack_iterations', 'epochs': 'attack_epochs', 'targets': 'attack_targets',
               'parametrization': 'attack_parametrization'}
    if key in renamed:
        return renamed[key]
    return key if key in ExperimentConfig.keys() else f"{prefix}{key}"


def parse_value(text: str) -> Any:
    """int, float, bool (true/false), comma-separated list, or string."""
    text = text.strip()
    if ',' in text:
        return [parse_value(part) for part in text.split(',') if part.strip()]
    lowered = text.lower()
    if lowered in ('true', 'false'):
        return lowered == 'true'
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str) -> Dict[str, Any]:
    """One ``key = value`` per line; ``#`` starts a comment."""
    mapping: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"Line {number}: expected 'key = value', got '{line}'")
        key, value = (part.strip() for part in line.split('=', 1))
        if not key:
            raise ConfigError(f"Line {number}: missing key")
        if key in mapping:
            raise ConfigError(f"Line {number}: key '{key}' set twice", key=key)
        mapping[key] = parse_value(value)
    return mapping


def coerce(mapping: Dict[str, Any]) -> Dict[str, Any]:
    """Match parsed values to the declared key types."""
    defaults = {f.name: f for f in fields(ExperimentConfig)}
    out = {}
    for key, value in mapping.items():
        if key not in defaults:
            raise ConfigError(f"Unknown configuration key '{key}'", key=key)
        if key in LIST_KEYS:
            items = value if isinstance(value, list) else [value]
            try:
                value = [LIST_KEYS[key](item) if LIST_KEYS[key] is not str else str(item) for item in items]
            except (TypeError, ValueError):
                raise ConfigError(f"Key '{key}' expects a list of {LIST_KEYS[key].__name__}", key=key)
        else:
            value = _coerce_scalar(key, value, defaults[key].default)
        out[key] = value
    return out


def _coerce_scalar(key: str, value: Any, default: Any) -> Any:
    if isinstance(value, list):
        raise ConfigError(f"Key '{key}' takes a single value", key=key)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"Key '{key}' expects true or false, got '{value}'", key=key)
        return value
    if isinstance(default, float) or key in ('mi_keep_probability', 'target_ssim'):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"Key '{key}' expects a number, got '{value}'", key=key)
        return float(value)
    if isinstance(default, int) or key in ('mi_systems', 'export_count'):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"Key '{key}' expects an integer, got '{value}'", key=key)
        return value
    return str(value)


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """Read, type and validate a configuration file; ``overrides`` win over file values."""
    mapping: Dict[str, Any] = {}
    if path:
        try:
            with open(path) as f:
                mapping = parse_config_text(f.read())
        except OSError as exc:
            raise ConfigError(f"Cannot read configuration file {path}: {exc}", key='config') from exc
    mapping.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = ExperimentConfig.from_mapping(coerce(mapping))
    logger.debug(f"Resolved configuration: {config.to_dict()}")
    return config


__all__ = ['ExperimentConfig', 'load_config', 'parse_config_text', 'parse_value', 'coerce']
