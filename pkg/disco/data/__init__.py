"""Desk-scale datasets: synthetic correlated attributes and CIFAR-10."""

from .cifar import CIFAR_CLASSES, LIVING_CLASSES, living_nonliving, load_cifar_binary, parse_cifar_bytes
from .dataset import Dataset, LabeledImage
from .synthetic import SynthConfig, generate_synthetic, shape_mask

__all__ = ['CIFAR_CLASSES', 'LIVING_CLASSES', 'living_nonliving', 'load_cifar_binary', 'parse_cifar_bytes',
           'Dataset', 'LabeledImage', 'SynthConfig', 'generate_synthetic', 'shape_mask']
