"""Dispersion-encoded full-range ISAM reconstruction toolkit."""

from frisam._core import (
    ConfigError,
    Dispersion,
    Grid,
    NonFiniteError,
    __version__,
    autofocus,
    depth_weights,
    dispersion,
    k_adjoint,
    k_forward,
    log_scale_16bit,
    phantom_points,
    phantom_random,
    psnr16,
    reconstruct,
    rmse,
    simulate,
    ssim16,
    synthesize_fullrange,
)

__all__ = [
    "ConfigError",
    "Dispersion",
    "Grid",
    "NonFiniteError",
    "__version__",
    "autofocus",
    "depth_weights",
    "dispersion",
    "k_adjoint",
    "k_forward",
    "log_scale_16bit",
    "phantom_points",
    "phantom_random",
    "psnr16",
    "reconstruct",
    "rmse",
    "simulate",
    "ssim16",
    "synthesize_fullrange",
]
