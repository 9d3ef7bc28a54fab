"""Exact checks of the information-flow inequalities on discrete systems."""

import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .entropy import bernoulli_entropy, entropy, joint_table, mutual_information
from .system import DiscreteSystem

logger = logging.getLogger(__name__)

TOLERANCE = 1e-12


@dataclass
class DpiReport:
    """I(x; f^k) and H(f^k) per layer."""
    mutual_information: List[float]
    layer_entropy: List[float]
    monotone: bool
    deterministic_identity: bool

    @property
    def passed(self) -> bool:
        return self.monotone and self.deterministic_identity

    def to_dict(self) -> Dict[str, Any]:
        return dict(asdict(self), passed=self.passed)


@dataclass
class EntropyReport:
    """Entropy terms of one pruned layer, in bits.

    ``stated_bound`` is H(fP | f) + p log p + q log q. It is recorded and
    compared but does not decide ``passed``; the exact quantities do.
    """
    p: float
    q: float
    h_p: float
    h_f: float
    h_fp: float
    h_fp_given_f: float
    i_x_f: float
    i_x_fp: float
    i_f_fp: float
    stated_bound: float
    dpi_ok: bool
    no_gain_ok: bool
    stated_bound_ok: bool
    joint: Optional[List[Dict[str, Any]]] = field(default=None)

    @property
    def decrease(self) -> float:
        """Information removed by pruning: I(x; f) - I(x; fP)."""
        return self.i_x_f - self.i_x_fp

    @property
    def passed(self) -> bool:
        return self.dpi_ok and self.no_gain_ok

    def to_dict(self) -> Dict[str, Any]:
        return dict(asdict(self), decrease=self.decrease, passed=self.passed)


def check_dpi_chain(system: DiscreteSystem, tolerance: float = TOLERANCE) -> DpiReport:
    """I(x; f^k) <= I(x; f^(k-1)) <= ... <= I(x; f^1), and I(x; f^k) = H(f^k)."""
    infos, entropies = [], []
    for k in range(1, system.depth + 1):
        table, _, _ = joint_table(system.layer_weights(k))
        infos.append(mutual_information(table))
        entropies.append(entropy(table.sum(axis=0)))
    monotone = all(later <= earlier + tolerance for earlier, later in zip(infos, infos[1:]))
    identity = all(abs(i - h) <= tolerance for i, h in zip(infos, entropies))
    report = DpiReport(infos, entropies, monotone, identity)
    if not report.passed:
        logger.warning(f"Data processing chain violated: I={infos}, H={entropies}")
    return report


def check_post_pruning_bound(system: DiscreteSystem, layer: Optional[int] = None,
                             tolerance: float = TOLERANCE) -> EntropyReport:
    """Enumerate the joint of (x, f, f*P) and compare the pruned information with its bounds.

    Asserted: I(x; fP) <= I(f; fP) and I(x; fP) <= I(x; f). The stated
    upper bound is evaluated as written and any violation is reported with
    the full joint table.
    """
    weights = system.pruned_weights(layer)
    x_fp: Dict = defaultdict(float)
    f_fp: Dict = defaultdict(float)
    x_f: Dict = defaultdict(float)
    for (x, f, fp), w in weights.items():
        x_fp[(x, fp)] += w
        f_fp[(f, fp)] += w
        x_f[(x, f)] += w
    t_x_fp, _, _ = joint_table(x_fp)
    t_f_fp, _, _ = joint_table(f_fp)
    t_x_f, _, _ = joint_table(x_f)

    p = system.keep_probability
    q = 1.0 - p
    h_p = bernoulli_entropy(p)
    h_fp = entropy(t_f_fp.sum(axis=0))
    h_fp_given_f = entropy(t_f_fp.reshape(-1)) - entropy(t_f_fp.sum(axis=1))
    i_x_fp = mutual_information(t_x_fp)
    i_f_fp = mutual_information(t_f_fp)
    i_x_f = mutual_information(t_x_f)
    stated = h_fp_given_f - h_p

    report = EntropyReport(
        p=p, q=q, h_p=h_p, h_f=entropy(t_x_f.sum(axis=0)), h_fp=h_fp, h_fp_given_f=h_fp_given_f,
        i_x_f=i_x_f, i_x_fp=i_x_fp, i_f_fp=i_f_fp, stated_bound=stated,
        dpi_ok=i_x_fp <= i_f_fp + tolerance,
        no_gain_ok=i_x_fp <= i_x_f + tolerance,
        stated_bound_ok=i_x_fp <= stated + tolerance)
    if not (report.dpi_ok and report.no_gain_ok and report.stated_bound_ok):
        report.joint = [{'x': x, 'f': repr(f), 'fP': repr(fp), 'probability': w}
                        for (x, f, fp), w in weights.items()]
    if not report.passed:
        logger.warning(f"Pruning increased information: I(x;fP)={i_x_fp}, I(f;fP)={i_f_fp}, I(x;f)={i_x_f}")
    elif not report.stated_bound_ok:
        logger.warning(f"Stated bound {stated:.6f} is below the exact I(x;fP)={i_x_fp:.6f}")
    return report
