"""Dynamic channel-obfuscation pipeline and its baseline defenses."""

from .config import DEFENSE_MODES, NoiseConfig, PreprocessConfig
from .experts import ExpertFilterBank
from .masking import (DefenseOutput, PruningMask, active_channel_count, defend, generate_mask,
                      hard_mask, random_channel_mask, round_half_away, soft_mask)
from .networks import (BLOCK_TABLE, ClientNetwork, FilterGenerator, ImagePrior, LeakageClassifier,
                       ReconstructionDecoder, ResidualBlock, TaskNetwork, split_shape)
from .pipeline import ClientView, SplitPipeline
from .preprocess import (Preprocessor, decouple_batch, preprocess_forward, spatial_decouple,
                         spatial_recouple)

__all__ = [
    'DEFENSE_MODES', 'NoiseConfig', 'PreprocessConfig', 'ExpertFilterBank',
    'DefenseOutput', 'PruningMask', 'active_channel_count', 'defend', 'generate_mask', 'hard_mask',
    'random_channel_mask', 'round_half_away', 'soft_mask',
    'BLOCK_TABLE', 'ClientNetwork', 'FilterGenerator', 'ImagePrior', 'LeakageClassifier',
    'ReconstructionDecoder', 'ResidualBlock', 'TaskNetwork', 'split_shape',
    'ClientView', 'SplitPipeline',
    'Preprocessor', 'decouple_batch', 'preprocess_forward', 'spatial_decouple', 'spatial_recouple',
]
