"""Synthetic generators with analytic divergence oracles, and MNIST ingestion."""

from .base import LabeledDataset
from .binary_image import (
    BinaryImageSpec,
    KLOracleResult,
    binary_image_analytic_kl,
    binary_image_kl_bruteforce,
    binary_image_llr,
    gen_binary_image,
)
from .gaussian import (
    GaussianSpec,
    bayes_point,
    gaussian_kl_bits,
    gaussian_np_envelope,
    gen_gaussian_pair,
)
from .mnist import load_mnist
from .yin_yang import YinYangSpec, gen_yin_yang

__all__ = [
    "BinaryImageSpec",
    "GaussianSpec",
    "KLOracleResult",
    "LabeledDataset",
    "YinYangSpec",
    "bayes_point",
    "binary_image_analytic_kl",
    "binary_image_kl_bruteforce",
    "binary_image_llr",
    "gaussian_kl_bits",
    "gaussian_np_envelope",
    "gen_binary_image",
    "gen_gaussian_pair",
    "gen_yin_yang",
    "load_mnist",
]
