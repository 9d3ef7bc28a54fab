"""Finite systems of deterministic layers followed by Bernoulli channel dropout."""

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigError, ParameterError
from .entropy import PMF_TOLERANCE

logger = logging.getLogger(__name__)

DROPOUT_MODES = ('layer', 'channel')


class _Zero:
    """The symbol a whole layer output becomes when it is dropped."""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return 'ZERO'

    def __reduce__(self):
        return (_Zero, ())


ZERO = _Zero()

Symbol = Hashable
Layer = Dict[Symbol, Symbol]


@dataclass
class DiscreteSystem:
    """Input distribution over symbols 0..n-1, deterministic layers, and dropout.

    Each layer maps every symbol produced by the previous layer (the input
    alphabet for the first) to an output symbol. Dropout with keep
    probability ``p`` acts on the output of a chosen layer: in ``layer`` mode
    one Bernoulli variable replaces the whole output by ZERO; in ``channel``
    mode every coordinate of a tuple-valued output is zeroed independently.
    """
    pmf: np.ndarray
    layers: List[Layer] = field(default_factory=list)
    keep_probability: float = 0.5
    dropout: str = 'layer'

    def __post_init__(self):
        self.pmf = np.asarray(self.pmf, dtype=np.float64).reshape(-1)
        if self.pmf.size == 0 or np.any(self.pmf < 0) or abs(self.pmf.sum() - 1.0) > PMF_TOLERANCE:
            raise ParameterError("Input pmf must be non-negative and sum to 1")
        if not self.layers:
            raise ConfigError("A discrete system needs at least one layer", key='layers')
        if not 0.0 <= self.keep_probability <= 1.0:
            raise ParameterError(f"Keep probability must lie in [0, 1], got {self.keep_probability}")
        if self.dropout not in DROPOUT_MODES:
            raise ConfigError(f"Dropout mode must be one of {DROPOUT_MODES}", key='dropout')
        domain: Sequence[Symbol] = range(self.pmf.size)
        for k, layer in enumerate(self.layers, start=1):
            missing = [s for s in domain if s not in layer]
            if missing:
                raise ConfigError(f"Layer {k} is not total: no image for {missing[:3]}", key='layers')
            domain = list(dict.fromkeys(layer[s] for s in domain))

    @property
    def alphabet_size(self) -> int:
        return self.pmf.size

    @property
    def depth(self) -> int:
        return len(self.layers)

    def outputs(self, x: int) -> List[Symbol]:
        """f^1(x), ..., f^k(x)."""
        values = []
        value: Symbol = x
        for layer in self.layers:
            value = layer[value]
            values.append(value)
        return values

    def layer_weights(self, layer: int) -> Dict[Tuple[Symbol, Symbol], float]:
        """Sparse joint of (x, f^layer(x)); ``layer`` counts from 1."""
        weights: Dict[Tuple[Symbol, Symbol], float] = defaultdict(float)
        for x, px in enumerate(self.pmf):
            if px > 0:
                weights[(x, self.outputs(x)[layer - 1])] += px
        return weights

    def dropout_outcomes(self, value: Symbol) -> List[Tuple[Symbol, float]]:
        """Possible values of value * P with their probabilities; impossible outcomes are skipped."""
        p, q = self.keep_probability, 1.0 - self.keep_probability
        if self.dropout == 'layer':
            return [(o, w) for o, w in ((value, p), (ZERO, q)) if w > 0]
        coords = value if isinstance(value, tuple) else (value,)
        outcomes: Dict[Symbol, float] = defaultdict(float)
        for keep in itertools.product((True, False), repeat=len(coords)):
            kept = sum(keep)
            weight = p ** kept * q ** (len(coords) - kept)
            if weight == 0:
                continue
            masked = tuple(c if k else 0 for c, k in zip(coords, keep))
            outcomes[masked if isinstance(value, tuple) else masked[0]] += weight
        return list(outcomes.items())

    def pruned_weights(self, layer: Optional[int] = None) -> Dict[Tuple[int, Symbol, Symbol], float]:
        """Sparse joint of (x, f, f*P) at ``layer`` (default: last)."""
        layer = layer or self.depth
        weights: Dict[Tuple[int, Symbol, Symbol], float] = defaultdict(float)
        for x, px in enumerate(self.pmf):
            if px <= 0:
                continue
            f = self.outputs(x)[layer - 1]
            for fp, w in self.dropout_outcomes(f):
                weights[(x, f, fp)] += px * w
        return weights


def random_system(rng: np.random.Generator, max_alphabet: int = 16, max_layers: int = 3,
                  keep_probability: Optional[float] = None, dropout: str = 'layer') -> DiscreteSystem:
    """A seeded random system for property checks.

    In channel mode layer outputs are pairs of small integers so that
    coordinates can be dropped independently.
    """
    n = int(rng.integers(2, max_alphabet + 1))
    pmf = rng.dirichlet(np.ones(n))
    pmf = pmf / pmf.sum()
    depth = int(rng.integers(1, max_layers + 1))
    layers: List[Layer] = []
    domain: List[Symbol] = list(range(n))
    for _ in range(depth):
        if dropout == 'channel':
            codes = [tuple(int(v) for v in rng.integers(0, 3, size=2)) for _ in domain]
        else:
            width = int(rng.integers(1, len(domain) + 1))
            codes = [int(v) for v in rng.integers(0, width, size=len(domain))]
        layer = dict(zip(domain, codes))
        layers.append(layer)
        domain = list(dict.fromkeys(codes))
    if keep_probability is None:
        keep_probability = float(rng.choice([0.0, 0.5, 1.0, rng.uniform(0.05, 0.95)]))
    return DiscreteSystem(pmf, layers, keep_probability, dropout)
