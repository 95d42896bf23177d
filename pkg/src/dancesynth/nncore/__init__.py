"""Deterministic float64 autodiff core: tensors, layers, optimizers, checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .conv import conv1d, conv1d_transpose, conv2d, conv2d_transpose, conv_output_length
from .layers import (HE_GAIN, Conv1d, Conv2d, ConvTranspose2d, Dense, Embedding, GRUCell, ParamSet,
                     dense, gru_cell, uniform_init)
from .optim import OptimizerState, PlateauScheduler, adam, optimizer_step, plateau_step, rmsprop
from .tensor import (Tensor, as_tensor, atan2, concat, exp, log, log_softmax, mean, no_grad, norm,
                     pad, relu, sigmoid, softmax, softmax_nll, sqrt, stack, tabs, tanh, tsum)

__all__ = [
    "HE_GAIN", "Conv1d", "Conv2d", "ConvTranspose2d", "Dense", "Embedding", "GRUCell", "OptimizerState",
    "ParamSet", "PlateauScheduler", "Tensor", "adam", "as_tensor", "atan2", "concat", "conv1d",
    "conv1d_transpose", "conv2d", "conv2d_transpose", "conv_output_length", "dense", "exp",
    "gru_cell", "load_checkpoint", "log", "log_softmax", "mean", "no_grad", "norm",
    "optimizer_step", "pad", "plateau_step", "relu", "rmsprop", "save_checkpoint", "sigmoid",
    "softmax", "softmax_nll", "sqrt", "stack", "tabs", "tanh", "tsum", "uniform_init",
]
