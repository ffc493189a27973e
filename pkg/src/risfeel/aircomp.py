"""Channel-inversion over-the-air aggregation.

Each selected device scales its (real-valued) update by
b_k = sqrt(eta) * w_k / (f^H h_k); eta is chosen so the device with the
tightest power budget transmits exactly at its limit. The server projects
the superposed receive signal onto the beamformer and keeps the real part,
which in the noiseless case is exactly the weighted sum of the updates.

Convention: model entries are real; complex receiver noise has per-quadrature
std noise_std / sqrt(2), so total complex noise variance is noise_std**2 and
the per-entry MSE of the real-part estimator is noise_std**2 * ||f||^2 / (2 eta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, DimensionError, UsageError

_ZERO_CHANNEL_TOL = 1e-12


@dataclass(frozen=True)
class DeviceProfile:
    """Per-device data size, aggregation weight, and transmit power limit."""

    data_size: int
    weight: float
    power_budget: float

    def __post_init__(self):
        if self.weight < 0:
            raise UsageError("aggregation weight must be nonnegative")
        if not self.power_budget > 0:
            raise UsageError("power budget must be positive")


@dataclass(frozen=True)
class Beamformer:
    """Unit-norm receive combining vector of length M."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        object.__setattr__(self, "coefficients", c)
        if c.ndim != 1 or c.size == 0:
            raise DimensionError("beamformer must be a nonempty vector")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise UsageError("beamformer must have unit norm")


def identity_beamformer(M: int = 1) -> Beamformer:
    f = np.zeros(M, dtype=np.complex128)
    f[0] = 1.0
    return Beamformer(f)


@dataclass(frozen=True)
class TransmitPlan:
    """Per-device transmit scaling plus the common denoising scalar."""

    selected: tuple  # device indices, in selection order
    coefficients: np.ndarray  # complex b_k, aligned with `selected`
    eta: float
    weights: np.ndarray  # renormalized w_k over the selected set


@dataclass(frozen=True)
class AggregationReport:
    estimate: np.ndarray
    empirical_mse: float
    analytic_mse: float


def normalized_weights(profiles, selected) -> np.ndarray:
    """Renormalize profile weights so the selected set sums to one."""
    w = np.array([profiles[k].weight for k in selected], dtype=float)
    total = w.sum()
    if not total > 0:
        raise UsageError("selected devices have zero total weight")
    return w / total


def plan_transmissions(
    h_eff, selected, profiles, f: Beamformer, normalize: bool = True
) -> TransmitPlan:
    """Channel-inversion transmit plan over the selected device set.

    With normalize=True (model aggregation) weights are renormalized to
    sum to one over the selected set. With normalize=False the raw
    weights are kept, so the target is an unnormalized weighted sum; only
    in that convention is eta non-increasing under set inclusion (the
    straggler-domination mechanism).
    """
    selected = tuple(selected)
    if not selected:
        raise UsageError("selected set must be nonempty")
    h_eff = np.asarray(h_eff, dtype=np.complex128)
    g = h_eff[list(selected), :] @ f.coefficients.conj()  # f^H h_k per device
    for i, k in enumerate(selected):
        if abs(g[i]) <= _ZERO_CHANNEL_TOL:
            raise DegenerateChannelError(k, abs(g[i]))
    if normalize:
        w = normalized_weights(profiles, selected)
    else:
        w = np.array([profiles[k].weight for k in selected], dtype=float)
        if not w.sum() > 0:
            raise UsageError("selected devices have zero total weight")
    power = np.array([profiles[k].power_budget for k in selected])
    ratios = np.full(len(selected), np.inf)
    nz = w > 0
    ratios[nz] = power[nz] * np.abs(g[nz]) ** 2 / w[nz] ** 2
    eta = float(np.min(ratios))
    b = np.sqrt(eta) * w / g
    return TransmitPlan(selected, b, eta, w)


def analytic_mse(plan: TransmitPlan, f: Beamformer, noise_std: float) -> float:
    """Per-entry MSE of the real-part estimator from receiver noise alone."""
    if not plan.eta > 0:
        raise UsageError("transmit plan has nonpositive eta")
    norm2 = float(np.sum(np.abs(f.coefficients) ** 2))
    return noise_std**2 * norm2 / (2.0 * plan.eta)


def transmit_and_aggregate(
    plan: TransmitPlan,
    h_eff,
    f: Beamformer,
    updates,
    noise_std: float,
    artificial_noise_std,
    rng: np.random.Generator,
) -> AggregationReport:
    """Superpose the scaled updates, add noise, and estimate the weighted sum.

    `updates` maps selection order to real vectors (len(selected) x d);
    `artificial_noise_std` is a per-device std (aligned with `selected`)
    of Gaussian noise added by each device before scaling.
    """
    h_eff = np.asarray(h_eff, dtype=np.complex128)
    updates = np.asarray(updates, dtype=float)
    if updates.ndim != 2 or updates.shape[0] != len(plan.selected):
        raise DimensionError("need one update row per selected device")
    d = updates.shape[1]
    an_std = np.broadcast_to(
        np.asarray(artificial_noise_std, dtype=float), (len(plan.selected),)
    )

    g = h_eff[list(plan.selected), :] @ f.coefficients.conj()
    gains = g * plan.coefficients  # (f^H h_k) b_k, = sqrt(eta) w_k under true CSI

    sent = updates
    if np.any(an_std > 0):
        sent = updates + an_std[:, None] * rng.standard_normal(updates.shape)

    received = gains @ sent.astype(np.complex128)
    if noise_std > 0:
        M = f.coefficients.size
        n = (noise_std / np.sqrt(2.0)) * (
            rng.standard_normal((M, d)) + 1j * rng.standard_normal((M, d))
        )
        received = received + f.coefficients.conj() @ n
    estimate = np.real(received) / np.sqrt(plan.eta)

    target = plan.weights @ updates
    empirical = float(np.mean((estimate - target) ** 2))
    return AggregationReport(estimate, empirical, analytic_mse(plan, f, noise_std))
