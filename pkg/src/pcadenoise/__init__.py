"""Bayesian MAP denoising of gray-level Potts images by annealed Gibbs sweeps
or a lazy probabilistic cellular automaton (PCA) with parallel site updates."""
from .core import LevelImage, Neighborhood, RngStream, neighbors
from .model import AnnealSchedule, NoiseModel, PcaParams, PriorParams
from .samplers import ChainState, TransitionRecord, gibbs_sweep, pca_step, run_chain
from .synthesis import MrfGenSpec, degrade, generate_mrf
from .metrics import MetricsReport, evaluate, mse, psnr, ssim

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "ChainState", "LevelImage", "MetricsReport", "MrfGenSpec",
    "Neighborhood", "NoiseModel", "PcaParams", "PriorParams", "RngStream",
    "TransitionRecord", "degrade", "evaluate", "generate_mrf", "gibbs_sweep", "mse",
    "neighbors", "pca_step", "psnr", "run_chain", "ssim",
]
