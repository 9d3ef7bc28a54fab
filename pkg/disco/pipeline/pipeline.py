"""The composed split-inference pipeline."""

import copy
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..errors import DimensionError, ParameterError
from ..tensor import Module, Parameter, Tensor, no_grad
from .config import DEFENSE_MODES, NoiseConfig, PreprocessConfig
from .masking import DefenseOutput, check_ratio, defend
from .networks import ClientNetwork, FilterGenerator, TaskNetwork, split_shape
from .preprocess import Preprocessor

logger = logging.getLogger(__name__)


class SplitPipeline(Module):
    """Client stack (pre-processor, client network, filter generator, mask) plus the server task network.

    ``hard`` arguments select the mask regime of the disco defense: the
    sigmoid soft mask while training the filter generator, top-k selection
    at inference. When left as None it follows the pipeline's train/eval
    mode.
    """

    def __init__(self, preprocess: Optional[PreprocessConfig] = None, split_index: int = 3,
                 task_classes: int = 4, defense_mode: str = 'disco', temperature: float = 0.03,
                 pruning_ratio: float = 0.6, noise: Optional[NoiseConfig] = None, seed: int = 0):
        super().__init__()
        self.cfg = preprocess or PreprocessConfig()
        self.cfg.validate()
        self.noise = noise or NoiseConfig()
        self.noise.validate()
        self.split_index = split_index
        self.task_classes = task_classes
        self.seed = seed
        self.set_defense(defense_mode)
        self.set_temperature(temperature)
        self.set_pruning_ratio(pruning_ratio)

        rng = np.random.default_rng(seed)
        self.preprocess = Preprocessor(self.cfg, rng)
        self.client = ClientNetwork(self.cfg.partitions, split_index, rng)
        self.filter_gen = FilterGenerator(self.client.out_channels, rng)
        self.task = TaskNetwork(split_index, task_classes, rng)
        self.defense_rng = np.random.default_rng((seed, 1))
        logger.debug(f"Built pipeline: {self.describe()}")

    # ------------------------------------------------------------------
    # Settings

    def set_defense(self, mode: str) -> None:
        if mode not in DEFENSE_MODES:
            raise ParameterError(f"Unknown defense mode '{mode}'; expected one of {DEFENSE_MODES}")
        self.defense_mode = mode

    def set_temperature(self, temperature: float) -> None:
        if not temperature > 0:
            raise ParameterError(f"Sigmoid temperature must be positive, got {temperature}")
        self.temperature = temperature

    def set_pruning_ratio(self, ratio: float) -> None:
        """Steer the privacy-utility knob R at inference time."""
        check_ratio(ratio)
        self.pruning_ratio = ratio

    def reseed_defense(self, seed: int) -> None:
        self.defense_rng = np.random.default_rng((seed, 1))

    @property
    def activation_shape(self) -> Tuple[int, int, int]:
        channels, size = split_shape(self.split_index, self.cfg.input_size)
        return channels, size, size

    # ------------------------------------------------------------------
    # Forward passes

    def client_activations(self, x: Tensor) -> Tensor:
        """z_hat: pre-processor followed by the client network."""
        return self.client(self.preprocess(x))

    def obfuscate(self, z_hat: Tensor, hard: Optional[bool] = None,
                  defend_output: bool = True) -> DefenseOutput:
        if not defend_output:
            return DefenseOutput(z_hat)
        if hard is None:
            hard = not self.training
        return defend(z_hat, self.defense_mode, filter_gen=self.filter_gen,
                      temperature=self.temperature, ratio=self.pruning_ratio, hard=hard,
                      noise=self.noise, rng=self.defense_rng)

    def apply_defense(self, z_hat: Tensor, hard: Optional[bool] = None) -> Tensor:
        return self.obfuscate(z_hat, hard).z

    def activations(self, x: Tensor, hard: Optional[bool] = None, defend_output: bool = True) -> Tensor:
        """z: what the client transmits for input batch ``x``."""
        return self.obfuscate(self.client_activations(x), hard, defend_output).z

    def forward(self, x: Tensor, hard: Optional[bool] = None, defend_output: bool = True) -> Tensor:
        return self.task(self.activations(x, hard, defend_output))

    def collect_activations(self, images: np.ndarray, batch_size: int = 64,
                            defend_output: bool = True) -> np.ndarray:
        """Transmitted activations for a whole array, computed in eval mode."""
        if images.ndim != 4:
            raise DimensionError(f"Expected N x 3 x H x W images, got shape {images.shape}")
        if len(images) == 0:
            return np.zeros((0,) + self.activation_shape, dtype=np.float32)
        chunks = []
        with self.evaluating(), no_grad():
            for start in range(0, len(images), batch_size):
                batch = Tensor(images[start:start + batch_size])
                chunks.append(self.activations(batch, hard=True, defend_output=defend_output).data)
        return np.concatenate(chunks, axis=0)

    def predict(self, images: np.ndarray, batch_size: int = 64, defend_output: bool = True) -> np.ndarray:
        """Task logits for a whole array, computed in eval mode."""
        chunks = []
        with self.evaluating(), no_grad():
            for start in range(0, len(images), batch_size):
                batch = Tensor(images[start:start + batch_size])
                chunks.append(self.forward(batch, hard=True, defend_output=defend_output).data)
        if not chunks:
            return np.zeros((0, self.task_classes), dtype=np.float32)
        return np.concatenate(chunks, axis=0)

    # ------------------------------------------------------------------
    # Parameter groups and views

    def client_parameters(self) -> List[Parameter]:
        return self.preprocess.parameters() + self.client.parameters()

    def filter_parameters(self) -> List[Parameter]:
        return self.filter_gen.parameters()

    def task_parameters(self) -> List[Parameter]:
        return self.task.parameters()

    def client_state(self) -> Dict[str, np.ndarray]:
        """Client network weights together with the pre-processor weights, keyed by dotted name."""
        state = {f"preprocess.{k}": v for k, v in self.preprocess.state_dict().items()}
        state.update({f"client.{k}": v for k, v in self.client.state_dict().items()})
        return state

    def client_checksum(self) -> str:
        return ClientView(self).checksum()

    def client_view(self, bn_visible: bool = True) -> 'ClientView':
        return ClientView(self, bn_visible)

    def describe(self) -> Dict[str, Any]:
        return {
            'preprocess': self.cfg.to_dict(),
            'split_index': self.split_index,
            'task_classes': self.task_classes,
            'defense_mode': self.defense_mode,
            'temperature': self.temperature,
            'pruning_ratio': self.pruning_ratio,
            'noise': self.noise.to_dict(),
            'activation_shape': list(self.activation_shape),
            'parameters': {
                'client': int(sum(p.size for p in self.client_parameters())),
                'filter_gen': self.filter_gen.num_parameters(),
                'task': self.task.num_parameters(),
            },
        }


class ClientView(Module):
    """Frozen copy of the pre-processor and client network, the white-box attacker's knowledge.

    With ``bn_visible`` False the running batch-norm statistics are treated
    as unknown: the copy normalises with the statistics of whatever batch it
    is given and never updates its buffers.
    """

    def __init__(self, pipeline: SplitPipeline, bn_visible: bool = True):
        super().__init__()
        self.cfg = pipeline.cfg
        self.split_index = pipeline.split_index
        self.bn_visible = bn_visible
        self.preprocess = copy.deepcopy(pipeline.preprocess)
        self.client = copy.deepcopy(pipeline.client)
        self.requires_grad_(False)
        if bn_visible:
            self.eval()
        else:
            self.train()
            for _, module in self.named_modules():
                if hasattr(module, 'track_running_stats'):
                    module.track_running_stats = False

    @property
    def activation_shape(self) -> Tuple[int, int, int]:
        channels, size = split_shape(self.split_index, self.cfg.input_size)
        return channels, size, size

    def forward(self, x: Tensor) -> Tensor:
        return self.client(self.preprocess(x))
