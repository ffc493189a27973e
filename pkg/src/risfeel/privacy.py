"""Artificial-noise differential-privacy mechanism and leakage proxy.

The per-pair score follows the Gaussian-mechanism shape with a
channel-scaled sensitivity and is a PROXY, not a formal accountant:
larger received amplitude means more leakage, more artificial noise means
less. The system-level value takes the worst (largest) pair, i.e. the
antenna with the weakest protection binds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aircomp import TransmitPlan
from .errors import UsageError


@dataclass(frozen=True)
class PrivacySpec:
    artificial_noise_std: float | np.ndarray  # per device, broadcastable
    clip_norm: float
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise UsageError("delta must lie in (0, 1)")
        if not self.clip_norm > 0:
            raise UsageError("clip_norm must be positive")
        if np.any(np.asarray(self.artificial_noise_std) < 0):
            raise UsageError("artificial noise std must be nonnegative")

    def noise_std_for(self, device: int) -> float:
        arr = np.asarray(self.artificial_noise_std, dtype=float).reshape(-1)
        return float(arr[0] if arr.size == 1 else arr[device])


@dataclass(frozen=True)
class PrivacyReport:
    epsilon_per_pair: np.ndarray  # K_sel x M
    system_epsilon: float


def clip_update(delta_k: np.ndarray, clip_norm: float) -> np.ndarray:
    """L2 clipping to the sensitivity bound."""
    if not clip_norm > 0:
        raise UsageError("clip_norm must be positive")
    delta_k = np.asarray(delta_k, dtype=float)
    norm = float(np.linalg.norm(delta_k))
    if norm <= clip_norm:
        return delta_k.copy()
    return delta_k * (clip_norm / norm)


def apply_mechanism(
    delta_k: np.ndarray,
    spec: PrivacySpec,
    rng: np.random.Generator,
    device: int = 0,
) -> np.ndarray:
    """Clip, then add i.i.d. zero-mean Gaussian artificial noise."""
    clipped = clip_update(delta_k, spec.clip_norm)
    std = spec.noise_std_for(device)
    if std == 0:
        return clipped
    return clipped + std * rng.standard_normal(clipped.shape)


def privacy_proxy(
    h_eff: np.ndarray,
    plan: TransmitPlan,
    spec: PrivacySpec,
    noise_std: float,
) -> PrivacyReport:
    """Per-(device, antenna) leakage proxy and the binding system value.

    eps[k, m] = |h[k, m] b_k| * clip_norm * sqrt(2 ln(1.25/delta)) / sigma_m,
    sigma_m^2 = noise_std^2 + sum_j |h[j, m] b_j|^2 * artificial_noise_std_j^2.
    """
    h_eff = np.asarray(h_eff, dtype=np.complex128)
    sel = list(plan.selected)
    amp = np.abs(h_eff[sel, :] * plan.coefficients[:, None])  # K_sel x M
    an = np.broadcast_to(
        np.asarray(spec.artificial_noise_std, dtype=float), (len(sel),)
    )
    sigma2 = noise_std**2 + (amp**2 * an[:, None] ** 2).sum(axis=0)  # per m
    factor = spec.clip_norm * np.sqrt(2.0 * np.log(1.25 / spec.delta))
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.where(
            sigma2 > 0,
            amp * factor / np.sqrt(np.where(sigma2 > 0, sigma2, 1.0)),
            np.where(amp > 0, np.inf, 0.0),
        )
    return PrivacyReport(eps, float(np.max(eps)))
