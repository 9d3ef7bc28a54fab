"""Minimal dense tensor engine with reverse-mode automatic differentiation."""

from .core import (Parameter, Tape, Tensor, backward, default_dtype, double_precision,
                   is_grad_enabled, no_grad)
from .gradcheck import GradcheckResult, gradcheck
from .nn import BatchNorm, Conv2d, ConvTranspose2d, Linear, Module
from .ops import (add, batch_norm, bilinear_resize, conv2d, flatten, global_avg_pool, l1_loss,
                  l2_loss, linear, mask_channels, matmul, mean, mul, relu, reshape, scale,
                  sigmoid, sigmoid_temperature, softmax, softmax_cross_entropy, sub, transpose,
                  transpose_conv2d)
from .ops import sum as reduce_sum
from .optim import SGD, sgd_momentum_step

__all__ = [
    'Tensor', 'Parameter', 'Tape', 'backward', 'no_grad', 'is_grad_enabled',
    'default_dtype', 'double_precision', 'gradcheck', 'GradcheckResult',
    'Module', 'Conv2d', 'ConvTranspose2d', 'Linear', 'BatchNorm',
    'add', 'sub', 'mul', 'scale', 'matmul', 'linear', 'reshape', 'flatten', 'transpose',
    'reduce_sum', 'mean', 'relu', 'sigmoid', 'sigmoid_temperature', 'mask_channels',
    'conv2d', 'transpose_conv2d', 'batch_norm', 'bilinear_resize', 'global_avg_pool',
    'softmax', 'softmax_cross_entropy', 'l1_loss', 'l2_loss', 'SGD', 'sgd_momentum_step',
]
