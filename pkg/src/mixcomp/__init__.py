"""Mixing adaptive models with projected online gradient descent.

Linear and geometric mixtures of per-step model distributions, weight
adaptation by OGD, an arithmetic coder with a small container format, and
tools for checking code-length bounds empirically.
"""

from .core import DomainError, code_length, epsilon_from_bits, floor_to_epsilon
from .mixtures import Domain, MixtureKind, geo_mix, lin_mix, loss_grad, mix, niceness_constant
from .ogd import ConfigError, OgdConfig, OgdTrace, project, run_mix_ogd, step_size
from .models import ModelConfig, build_matrix_sequence
from .coder import Bitstream, DecodeError, decode, encode
from .container import CompressConfig, compress, decompress
from .analysis import (BoundReport, best_segmentation, best_single_model, check_bound,
                       optimal_static_weights)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "ConfigError", "DecodeError", "code_length", "epsilon_from_bits",
    "floor_to_epsilon", "Domain", "MixtureKind", "lin_mix", "geo_mix", "mix", "loss_grad",
    "niceness_constant", "OgdConfig", "OgdTrace", "project", "run_mix_ogd", "step_size",
    "ModelConfig", "build_matrix_sequence", "Bitstream", "encode", "decode",
    "CompressConfig", "compress", "decompress", "BoundReport", "best_segmentation",
    "best_single_model", "check_bound", "optimal_static_weights",
]
