"""Complex-baseband wireless channels with an optional RIS cascade.

A realization holds three link groups: direct device-to-server rows
(K x M), device-to-RIS rows (K x L) and the RIS-to-server matrix (M x L).
The effective channel of device k under phase vector theta is

    h_k(theta) = h_direct_k + G @ diag(theta) @ a_k

All sampling is a pure function of an explicit numpy Generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError

_UNIT_MODULUS_TOL = 1e-12


@dataclass(frozen=True)
class LinkModel:
    """Small-scale fading model for one link group.

    kind is one of "rayleigh" (circularly-symmetric complex Gaussian),
    "rician" (fixed LoS component plus scattered part) or "fixed"
    (pass the given values through unchanged).
    """

    kind: str
    variance: float = 1.0
    k_factor: float = 0.0
    values: np.ndarray | None = None

    def validate(self) -> None:
        if self.kind not in ("rayleigh", "rician", "fixed"):
            raise ConfigurationError(f"unknown fading model {self.kind!r}")
        if self.kind != "fixed" and not self.variance > 0:
            raise ConfigurationError("fading variance must be > 0")
        if self.kind == "rician" and self.k_factor < 0:
            raise ConfigurationError("rician k_factor must be >= 0")
        if self.kind == "fixed" and self.values is None:
            raise ConfigurationError("fixed model requires explicit values")


@dataclass(frozen=True)
class PathLoss:
    """Power-law path loss: amplitude scale (d0/d)^(alpha/2) * sqrt(gain)."""

    exponent: float
    ref_distance: float = 1.0
    ref_gain: float = 1.0

    def validate(self) -> None:
        if self.exponent < 0:
            raise ConfigurationError("path-loss exponent must be >= 0")
        if not self.ref_distance > 0 or not self.ref_gain > 0:
            raise ConfigurationError("reference distance/gain must be > 0")

    def amplitude(self, distance: float) -> float:
        if not distance > 0:
            raise ConfigurationError("link distance must be > 0")
        return np.sqrt(self.ref_gain) * (self.ref_distance / distance) ** (
            self.exponent / 2.0
        )


@dataclass(frozen=True)
class Geometry:
    """Planar positions (meters) used only when path loss is enabled."""

    device_positions: np.ndarray  # K x 2
    server_position: np.ndarray  # 2
    ris_position: np.ndarray | None = None  # 2, required when L > 0


@dataclass(frozen=True)
class FadingSpec:
    direct: LinkModel = field(default_factory=lambda: LinkModel("rayleigh", 1.0))
    # RIS deployment targets LoS availability, hence a strong Rician default.
    ris_link: LinkModel = field(
        default_factory=lambda: LinkModel("rician", 1.0, k_factor=10.0)
    )
    path_loss: PathLoss | None = None
    geometry: Geometry | None = None

    def validate(self) -> None:
        self.direct.validate()
        self.ris_link.validate()
        if self.path_loss is not None:
            self.path_loss.validate()
            if self.geometry is None:
                raise ConfigurationError("path loss requires geometry")


@dataclass(frozen=True)
class ChannelRealization:
    """All channel coefficients for one coherence block."""

    direct: np.ndarray  # K x M complex
    device_to_ris: np.ndarray  # K x L complex
    ris_to_server: np.ndarray  # M x L complex
    block_index: int = 0

    @property
    def num_devices(self) -> int:
        return self.direct.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.direct.shape[1]

    @property
    def num_ris_elements(self) -> int:
        return self.device_to_ris.shape[1]


@dataclass(frozen=True)
class RisConfig:
    """Unit-modulus phase-shift vector of length L (L = 0 means no RIS)."""

    phases: np.ndarray

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=np.complex128)
        object.__setattr__(self, "phases", phases)
        if phases.ndim != 1:
            raise DimensionError("phase vector must be one-dimensional")
        if phases.size and (
            not np.all(np.isfinite(phases.view(np.float64)))
            or np.max(np.abs(np.abs(phases) - 1.0)) > _UNIT_MODULUS_TOL
        ):
            raise ConfigurationError("RIS phases must have unit modulus")

    def __len__(self) -> int:
        return self.phases.size


def empty_ris_config() -> RisConfig:
    return RisConfig(np.zeros(0, dtype=np.complex128) + 1.0)


def _draw(model: LinkModel, shape: tuple, rng: np.random.Generator) -> np.ndarray:
    if model.kind == "fixed":
        values = np.asarray(model.values, dtype=np.complex128)
        if values.shape != shape:
            raise ConfigurationError(
                f"fixed values have shape {values.shape}, expected {shape}"
            )
        return values.copy()
    scale = np.sqrt(model.variance / 2.0)
    scattered = scale * (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    )
    if model.kind == "rayleigh":
        return scattered
    k = model.k_factor
    los = np.sqrt(model.variance * k / (k + 1.0)) * np.ones(shape, np.complex128)
    return los + scattered / np.sqrt(k + 1.0)


def sample_channels(
    spec: FadingSpec,
    K: int,
    M: int,
    L: int,
    rng: np.random.Generator,
    block_index: int = 0,
) -> ChannelRealization:
    """Draw one coherence-block realization for K devices, M antennas, L elements."""
    if K < 1 or M < 1 or L < 0:
        raise ConfigurationError("need K >= 1, M >= 1, L >= 0")
    spec.validate()

    direct = _draw(spec.direct, (K, M), rng)
    if L > 0:
        device_to_ris = _draw(spec.ris_link, (K, L), rng)
        ris_to_server = _draw(spec.ris_link, (M, L), rng)
    else:
        device_to_ris = np.zeros((K, 0), dtype=np.complex128)
        ris_to_server = np.zeros((M, 0), dtype=np.complex128)

    if spec.path_loss is not None:
        geo = spec.geometry
        dev = np.asarray(geo.device_positions, dtype=float)
        if dev.shape != (K, 2):
            raise ConfigurationError("geometry needs K device positions")
        server = np.asarray(geo.server_position, dtype=float)
        for k in range(K):
            d = float(np.linalg.norm(dev[k] - server))
            direct[k, :] *= spec.path_loss.amplitude(d)
        if L > 0:
            if geo.ris_position is None:
                raise ConfigurationError("geometry needs a RIS position when L > 0")
            ris = np.asarray(geo.ris_position, dtype=float)
            for k in range(K):
                d = float(np.linalg.norm(dev[k] - ris))
                device_to_ris[k, :] *= spec.path_loss.amplitude(d)
            ris_to_server *= spec.path_loss.amplitude(
                float(np.linalg.norm(ris - server))
            )

    real = ChannelRealization(direct, device_to_ris, ris_to_server, block_index)
    for arr in (real.direct, real.device_to_ris, real.ris_to_server):
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ConfigurationError("sampled channels contain non-finite entries")
    return real


def effective_channel(real: ChannelRealization, theta: RisConfig) -> np.ndarray:
    """K x M matrix of direct-plus-reflected channels under phase vector theta."""
    L = real.num_ris_elements
    if len(theta) != L:
        raise DimensionError(
            f"phase vector has length {len(theta)}, realization has L={L}"
        )
    if L == 0:
        return real.direct.copy()
    # row k: direct_k + G @ (theta * a_k)  ==  direct + (A * theta) @ G^T
    return real.direct + (real.device_to_ris * theta.phases) @ real.ris_to_server.T


def channel_gain(h: np.ndarray) -> float:
    """Squared Euclidean norm of a channel vector."""
    h = np.asarray(h)
    if h.size == 0:
        raise DimensionError("channel vector must be nonempty")
    return float(np.sum(np.abs(h) ** 2))
