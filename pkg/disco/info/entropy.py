"""Shannon quantities of discrete distributions, in bits."""

import logging
from typing import Dict, Hashable, List, Tuple

import numpy as np

from ..errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

PMF_TOLERANCE = 1e-9


def _validate_pmf(pmf: np.ndarray) -> np.ndarray:
    pmf = np.asarray(pmf, dtype=np.float64)
    if pmf.size == 0:
        raise DimensionError("Empty distribution")
    if np.any(pmf < 0) or not np.all(np.isfinite(pmf)):
        raise ParameterError("Probabilities must be finite and non-negative")
    if abs(pmf.sum() - 1.0) > PMF_TOLERANCE:
        raise ParameterError(f"Probabilities sum to {pmf.sum()!r}, not 1")
    return pmf


def entropy(pmf: np.ndarray) -> float:
    """H(p) = -sum p log2 p with 0 log 0 = 0."""
    pmf = _validate_pmf(pmf).reshape(-1)
    nz = pmf[pmf > 0]
    return max(float(-np.sum(nz * np.log2(nz))), 0.0)


def joint_entropy(joint: np.ndarray) -> float:
    return entropy(np.asarray(joint).reshape(-1))


def _check_joint(joint: np.ndarray) -> np.ndarray:
    joint = _validate_pmf(joint)
    if joint.ndim != 2:
        raise DimensionError(f"Expected a two-way joint table, got shape {joint.shape}")
    return joint


def conditional_entropy(joint: np.ndarray) -> float:
    """H(A|B) for a joint table indexed [a, b]."""
    joint = _check_joint(joint)
    return joint_entropy(joint) - entropy(joint.sum(axis=0))


def mutual_information(joint: np.ndarray) -> float:
    """I(A;B) = H(A) - H(A|B) for a joint table indexed [a, b]."""
    joint = _check_joint(joint)
    return entropy(joint.sum(axis=1)) - conditional_entropy(joint)


def bernoulli_entropy(p: float) -> float:
    """Entropy of a Bernoulli(p) variable."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"Bernoulli parameter must lie in [0, 1], got {p}")
    return entropy(np.array([p, 1.0 - p]))


def joint_table(weights: Dict[Tuple[Hashable, Hashable], float]) -> Tuple[np.ndarray, List[Hashable], List[Hashable]]:
    """Dense [a, b] table from a sparse {(a, b): probability} map.

    Symbols are indexed in order of first appearance.
    """
    rows: Dict[Hashable, int] = {}
    cols: Dict[Hashable, int] = {}
    for a, b in weights:
        rows.setdefault(a, len(rows))
        cols.setdefault(b, len(cols))
    table = np.zeros((len(rows), len(cols)), dtype=np.float64)
    for (a, b), prob in weights.items():
        table[rows[a], cols[b]] += prob
    return table, list(rows), list(cols)
