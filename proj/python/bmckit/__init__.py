"""Cluster-count estimation for block Markov chain trajectories.

The heavy lifting lives in the compiled extension; this package re-exports
the main operations.
"""

from bmckit._core import (
    ami,
    build_instance_sizes,
    caic_estimate,
    count_singvals_above,
    dot_product_example,
    entropy,
    estimate,
    estimate_k,
    information_quantity,
    llsc_estimate,
    megh_estimate,
    misclassification,
    mixing_time,
    mutual_information,
    normalized_entropy,
    sample_ensemble,
    simulate,
    spectral_embedding,
    stationary_distribution,
    validate_params,
)

__all__ = [
    "ami",
    "build_instance_sizes",
    "caic_estimate",
    "count_singvals_above",
    "dot_product_example",
    "entropy",
    "estimate",
    "estimate_k",
    "information_quantity",
    "llsc_estimate",
    "megh_estimate",
    "misclassification",
    "mixing_time",
    "mutual_information",
    "normalized_entropy",
    "sample_ensemble",
    "simulate",
    "spectral_embedding",
    "stationary_distribution",
    "validate_params",
]

__version__ = "0.1.0"
