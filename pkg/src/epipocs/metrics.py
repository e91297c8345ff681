"""
Reconstruction metrics and seeded noise generators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import tv_eval
from .geometry import as_signal

SNR_CAP_DB = 300.0


def _pair(truth, estimate):
    truth = as_signal(truth, "truth")
    estimate = as_signal(estimate, "estimate")
    if truth.shape != estimate.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {estimate.shape}")
    norm = np.linalg.norm(truth.ravel())
    if norm == 0:
        raise ValueError("truth has zero norm")
    return truth, estimate, norm


def snr_db(truth, estimate) -> float:
    """``20 log10(|truth| / |truth - estimate|)``, capped at 300 dB."""
    truth, estimate, norm = _pair(truth, estimate)
    err = np.linalg.norm((truth - estimate).ravel())
    if err == 0:
        return SNR_CAP_DB
    return float(min(SNR_CAP_DB, 20.0 * np.log10(norm / err)))


def nrmse(truth, estimate) -> float:
    truth, estimate, norm = _pair(truth, estimate)
    return float(np.linalg.norm((estimate - truth).ravel()) / norm)


def ntv(truth, estimate) -> float:
    """TV of the estimate relative to the TV of the truth."""
    tv_truth = tv_eval(as_signal(truth, "truth"))
    if tv_truth == 0:
        raise ValueError("truth has zero total variation")
    return tv_eval(as_signal(estimate, "estimate")) / tv_truth


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise law.

    ``kind="gaussian"`` uses `sigma`. ``kind="eps_contaminated"`` draws each
    sample from N(0, sigma1^2) with probability `eps` and from
    N(0, sigma2^2) otherwise, so `eps` is the weight of the nominal
    (usually small-variance) component.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    eps: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if not self.sigma > 0:
                raise ValueError("sigma must be positive")
        elif self.kind == "eps_contaminated":
            if not (self.sigma1 > 0 and self.sigma2 > 0):
                raise ValueError("sigma1 and sigma2 must be positive")
            if not 0 <= self.eps <= 1:
                raise ValueError("eps must lie in [0, 1]")
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def eps_contaminated(cls, eps, sigma1, sigma2):
        return cls("eps_contaminated", eps=float(eps), sigma1=float(sigma1), sigma2=float(sigma2))

    @property
    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian:{self.sigma:g}"
        return f"eps:{self.eps:g},{self.sigma1:g},{self.sigma2:g}"


def add_noise(x, model: NoiseModel, seed) -> np.ndarray:
    """Return ``x + noise`` with noise drawn from `model` using `seed`.

    `seed` may be anything accepted by `numpy.random.default_rng`.
    """
    x = as_signal(x)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(x.shape)
    if model.kind == "gaussian":
        return x + model.sigma * z
    nominal = rng.random(x.shape) < model.eps
    return x + np.where(nominal, model.sigma1, model.sigma2) * z
