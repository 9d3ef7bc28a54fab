"""Exact mutual-information analysis of channel pruning on enumerable systems."""

from .checks import DpiReport, EntropyReport, check_dpi_chain, check_post_pruning_bound
from .entropy import (bernoulli_entropy, conditional_entropy, entropy, joint_entropy, joint_table,
                      mutual_information)
from .system import DROPOUT_MODES, ZERO, DiscreteSystem, random_system

__all__ = ['DpiReport', 'EntropyReport', 'check_dpi_chain', 'check_post_pruning_bound',
           'bernoulli_entropy', 'conditional_entropy', 'entropy', 'joint_entropy', 'joint_table',
           'mutual_information', 'DROPOUT_MODES', 'ZERO', 'DiscreteSystem', 'random_system']
