"""scikit-learn style wrappers around the annealed samplers.

``fit`` only validates parameters and records the lattice of the observation;
``transform`` runs the chain from the observation itself.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import LevelImage
from .metrics import psnr
from .model import AnnealSchedule, NoiseModel, PcaParams, PriorParams
from .samplers import default_threads, run_chain


def check_level_image(X, n_levels: Optional[int] = None) -> LevelImage:
    """Coerce ``X`` to a LevelImage; 2-D integer arrays need ``n_levels``."""
    if isinstance(X, LevelImage):
        if n_levels is not None and X.levels != n_levels:
            raise ValueError(f"expected {n_levels} levels, got {X.levels}")
        return X
    arr = np.asarray(X)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D level array, got shape {arr.shape}")
    if n_levels is None:
        raise ValueError("n_levels is required for raw arrays")
    return LevelImage.from_array(arr, n_levels)


class _AnnealedDenoiser(TransformerMixin, BaseEstimator):
    _method = "gibbs"

    def _pca(self) -> Optional[PcaParams]:
        return None

    def _threads(self) -> int:
        return 1

    def fit(self, X, y=None):
        g = check_level_image(X, self.n_levels)
        self.prior_ = PriorParams(self.coupling)
        self.noise_ = NoiseModel(self.sigma)
        self.schedule_ = AnnealSchedule(self.beta0, self.beta_increment, self.beta_period,
                                        self.n_steps)
        self.pca_ = self._pca()
        self.n_levels_ = g.levels
        self.shape_ = g.shape
        return self

    def transform(self, X):
        """Return the restored image as a LevelImage (arrays in, arrays out)."""
        check_is_fitted(self, "schedule_")
        g = check_level_image(X, self.n_levels_)
        out, trace = run_chain(g, g, self.prior_, self.noise_, self.schedule_, self._method,
                               self.pca_, self.random_state or 0, self._threads())
        self.trace_ = trace
        return out if isinstance(X, LevelImage) else out.to_array()

    def score(self, X, y):
        """PSNR of the restoration of ``X`` against the clean image ``y``."""
        restored = check_level_image(self.transform(X), self.n_levels_)
        return psnr(check_level_image(y, self.n_levels_), restored)


class GibbsDenoiser(_AnnealedDenoiser):
    _method = "gibbs"

    def __init__(self, n_levels=None, coupling=1.0 / 3.0, sigma=0.25, beta0=1.25,
                 beta_increment=0.25, beta_period=250, n_steps=1000, random_state=None):
        self.n_levels = n_levels
        self.coupling = coupling
        self.sigma = sigma
        self.beta0 = beta0
        self.beta_increment = beta_increment
        self.beta_period = beta_period
        self.n_steps = n_steps
        self.random_state = random_state


class LazyPCADenoiser(_AnnealedDenoiser):
    _method = "pca"

    def __init__(self, n_levels=None, coupling=1.0 / 3.0, sigma=0.25, beta0=1.25,
                 beta_increment=0.25, beta_period=250, n_steps=1000, inertia=0.51,
                 norm_exponent=0.0, pca_kernel="literal", random_state=None, n_jobs=None):
        self.n_levels = n_levels
        self.coupling = coupling
        self.sigma = sigma
        self.beta0 = beta0
        self.beta_increment = beta_increment
        self.beta_period = beta_period
        self.n_steps = n_steps
        self.inertia = inertia
        self.norm_exponent = norm_exponent
        self.pca_kernel = pca_kernel
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _pca(self):
        if self.pca_kernel not in ("balanced", "literal"):
            raise ValueError(f"pca_kernel must be 'balanced' or 'literal', got {self.pca_kernel!r}")
        return PcaParams(self.inertia, self.norm_exponent, self.pca_kernel == "balanced")

    def _threads(self):
        if self.n_jobs is None:
            return 1
        if self.n_jobs < 0:
            return default_threads()
        return int(self.n_jobs)
