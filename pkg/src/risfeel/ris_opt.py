"""RIS phase-vector optimization.

Two objectives are supported:

* "mse": minimize the analytic aggregation MSE of the channel-inversion
  plan (equivalently, maximize the power-limited denoising gain eta),
  alternating a closed-form beamformer update with per-element codebook
  sweeps.
* "alignment": CSIT-free mode for a single-antenna server; choose phases so
  the effective scalar channels are proportional to the aggregation
  weights, minimizing min_c sum_k |h_k(theta) - c w_k|^2.

Both descents are monotone in their objective; an exhaustive enumeration
oracle is provided for small instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .aircomp import Beamformer, normalized_weights
from .channel import ChannelRealization, RisConfig, effective_channel
from .errors import ConfigurationError, UsageError


@dataclass(frozen=True)
class PhaseCodebook:
    """Discrete phase levels {exp(2 pi i q / Q)} or continuous phases."""

    levels: int | None = 8

    def __post_init__(self):
        if self.levels is not None and self.levels < 2:
            raise ConfigurationError("discrete codebook needs at least 2 levels")

    @property
    def continuous(self) -> bool:
        return self.levels is None

    def phases(self) -> np.ndarray:
        if self.continuous:
            raise UsageError("continuous codebook has no finite phase list")
        q = np.arange(self.levels)
        return np.exp(2j * np.pi * q / self.levels)


@dataclass(frozen=True)
class AlignmentResult:
    theta: RisConfig
    scale: complex
    residual: float


# ---------------------------------------------------------------------------
# MSE objective
# ---------------------------------------------------------------------------


def dominant_beamformer(
    real: ChannelRealization, theta: RisConfig, selected
) -> Beamformer:
    """Dominant left singular direction of the selected effective channels."""
    h = effective_channel(real, theta)[list(selected), :]  # K_sel x M
    if h.shape[1] == 1:
        return Beamformer(np.ones(1, dtype=np.complex128))
    u, _, _ = np.linalg.svd(h.T, full_matrices=False)
    f = u[:, 0]
    # fix the arbitrary global phase for determinism
    pivot = f[np.argmax(np.abs(f))]
    f = f * (pivot.conj() / abs(pivot))
    return Beamformer(f / np.linalg.norm(f))


class _MseEvaluator:
    """Fast eta evaluation through the scalar channels s_k = f^H h_k."""

    def __init__(self, real, selected, profiles, f: Beamformer, noise_std: float):
        sel = list(selected)
        fc = f.coefficients.conj()
        self.weights = normalized_weights(profiles, sel)
        self.power = np.array([profiles[k].power_budget for k in sel])
        self.base = real.direct[sel, :] @ fc  # K_sel
        # v[k, l] = (f^H G[:, l]) * a[k, l]
        u = fc @ real.ris_to_server
        self.v = real.device_to_ris[sel, :] * u[None, :]
        self.noise_std = noise_std
        self.fnorm2 = float(np.sum(np.abs(f.coefficients) ** 2))

    def scalars(self, theta: np.ndarray) -> np.ndarray:
        return self.base + self.v @ theta

    def eta(self, s: np.ndarray) -> float:
        nz = self.weights > 0
        if not np.any(nz):
            return np.inf
        return float(
            np.min(self.power[nz] * np.abs(s[nz]) ** 2 / self.weights[nz] ** 2)
        )

    def objective(self, s: np.ndarray) -> float:
        eta = self.eta(s)
        if eta <= 0:
            return np.inf
        return self.noise_std**2 * self.fnorm2 / (2.0 * eta)

    def batch_objective(self, s: np.ndarray) -> np.ndarray:
        """Objective per column of a K x n candidate matrix."""
        nz = self.weights > 0
        etas = np.min(
            self.power[nz, None] * np.abs(s[nz, :]) ** 2
            / self.weights[nz, None] ** 2,
            axis=0,
        )
        with np.errstate(divide="ignore"):
            return np.where(
                etas > 0,
                self.noise_std**2 * self.fnorm2 / (2.0 * np.maximum(etas, 1e-300)),
                np.inf,
            )


def evaluate_mse_objective(
    real, theta: RisConfig, selected, profiles, noise_std: float = 1.0
) -> tuple[float, Beamformer]:
    """Objective value (and its beamformer) for a given phase vector."""
    f = dominant_beamformer(real, theta, selected)
    ev = _MseEvaluator(real, selected, profiles, f, noise_std)
    return ev.objective(ev.scalars(theta.phases)), f


def _descend_mse(real, selected, profiles, codebook, budget, theta0, noise_std):
    theta = theta0.copy()
    f = dominant_beamformer(real, RisConfig(theta), selected)
    ev = _MseEvaluator(real, selected, profiles, f, noise_std)
    s = ev.scalars(theta)
    obj = ev.objective(s)
    candidates = codebook.phases()

    for _ in range(budget):
        improved = False

        f_new = dominant_beamformer(real, RisConfig(theta), selected)
        ev_new = _MseEvaluator(real, selected, profiles, f_new, noise_std)
        s_new = ev_new.scalars(theta)
        obj_new = ev_new.objective(s_new)
        if obj_new <= obj:
            if obj_new < obj:
                improved = True
            f, ev, s, obj = f_new, ev_new, s_new, obj_new

        for l in range(theta.size):
            shifted = s[:, None] + ev.v[:, l][:, None] * (
                candidates[None, :] - theta[l]
            )
            objs = ev.batch_objective(shifted)
            q_best = int(np.argmin(objs))
            if objs[q_best] < obj:
                s = shifted[:, q_best].copy()
                theta[l] = candidates[q_best]
                obj = float(objs[q_best])
                improved = True

        L, Q = theta.size, candidates.size
        if (not improved and L > 1
                and 0 < L * L * Q * Q <= _PAIR_SWEEP_LIMIT):
            pairs = np.stack(
                [c.ravel() for c in np.meshgrid(candidates, candidates)]
            )  # 2 x Q^2
            for l1 in range(L):
                for l2 in range(l1 + 1, L):
                    base = s - ev.v[:, l1] * theta[l1] - ev.v[:, l2] * theta[l2]
                    shifted = (
                        base[:, None]
                        + ev.v[:, l1][:, None] * pairs[1][None, :]
                        + ev.v[:, l2][:, None] * pairs[0][None, :]
                    )
                    objs = ev.batch_objective(shifted)
                    q = int(np.argmin(objs))
                    if objs[q] < obj:
                        s = shifted[:, q].copy()
                        theta[l1], theta[l2] = pairs[1][q], pairs[0][q]
                        obj = float(objs[q])
                        improved = True

        if not improved:
            break
    return theta, f, obj


def optimize_mse(
    real: ChannelRealization,
    selected,
    profiles,
    codebook: PhaseCodebook,
    budget: int,
    rng: np.random.Generator,
    noise_std: float = 1.0,
    restarts: int = 5,
) -> tuple[RisConfig, Beamformer]:
    """Best (theta, f) found by restarted alternating coordinate descent."""
    selected = tuple(selected)
    if not selected:
        raise UsageError("selected set must be nonempty")
    if real.num_ris_elements < 1:
        raise UsageError("optimize_mse requires at least one RIS element")
    if codebook.continuous:
        raise UsageError("MSE objective requires a discrete codebook")

    L = real.num_ris_elements
    # deterministic starts: all-ones, then per-device co-phasing (each
    # device's reflected path rotated onto its direct path, rounded to the
    # codebook) -- the binding device of the max-min objective is usually
    # one of these; remaining restarts are random
    ones = np.ones(L, dtype=np.complex128)
    ev0 = _MseEvaluator(
        real, selected, profiles,
        dominant_beamformer(real, RisConfig(ones), selected), noise_std
    )
    starts = [ones]
    step = 2.0 * np.pi / codebook.levels
    for k in range(len(selected)):
        if len(starts) >= max(1, restarts):
            break
        mis = np.angle(ev0.base[k]) - np.angle(ev0.v[k, :])
        q = np.rint(mis / step).astype(int) % codebook.levels
        starts.append(np.exp(1j * step * q))
    while len(starts) < max(1, restarts):
        starts.append(random_phases(L, codebook, rng).phases)

    best = None
    for theta0 in starts:
        theta, f, obj = _descend_mse(
            real, selected, profiles, codebook, budget, theta0, noise_std
        )
        if best is None or obj < best[2]:
            best = (theta, f, obj)
    return RisConfig(best[0]), best[1]


# ---------------------------------------------------------------------------
# CSIT-free alignment objective
# ---------------------------------------------------------------------------


def _lsq_scale(h: np.ndarray, w: np.ndarray) -> complex:
    return complex(np.sum(w * h) / np.sum(w**2))


def alignment_residual(h: np.ndarray, w: np.ndarray) -> tuple[float, complex]:
    """min over c of sum_k |h_k - c w_k|^2, with the optimal c."""
    c = _lsq_scale(h, w)
    return float(np.sum(np.abs(h - c * w) ** 2)), c


def _batch_alignment_residual(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Column-wise min-over-c residuals for a K x n candidate matrix."""
    c = (w @ h) / np.sum(w**2)
    return np.sum(np.abs(h - w[:, None] * c[None, :]) ** 2, axis=0)


def _check_alignment_inputs(real: ChannelRealization, weights) -> np.ndarray:
    if real.num_antennas != 1:
        raise ConfigurationError(
            "CSIT-free alignment assumes a single-antenna server (M = 1)"
        )
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != real.num_devices:
        raise UsageError("need one weight per device")
    if np.any(w < 0) or not w.sum() > 0:
        raise UsageError("weights must be nonnegative with positive sum")
    return w / w.sum()


def _alignment_candidates(h, v_l, theta_l, w, candidates):
    """Candidate phases for one element: the codebook, or the fixed-c
    closed-form optimum when the codebook is continuous."""
    if candidates is not None:
        return candidates
    c = _lsq_scale(h, w)
    r = h - v_l * theta_l - c * w
    z = np.sum(np.conj(r) * v_l)
    if abs(z) == 0:
        return np.empty(0, dtype=np.complex128)
    return np.array([-np.conj(z) / abs(z)])


# Pair sweeps escape single-element local optima but cost O(L^2 Q^2) true
# objective evaluations per pass, so they only run on small instances.
_PAIR_SWEEP_LIMIT = 65536


def _descend_alignment(d, v, w, codebook, budget, theta0):
    theta = theta0.copy()
    L = theta.size
    h = d + v @ theta
    res, _ = alignment_residual(h, w)
    candidates = None if codebook.continuous else codebook.phases()
    Q = 1 if candidates is None else candidates.size
    pair_sweeps = 0 < L * L * Q * Q <= _PAIR_SWEEP_LIMIT and L > 1

    for _ in range(budget):
        improved = False
        for l in range(L):
            cand = _alignment_candidates(h, v[:, l], theta[l], w, candidates)
            if cand.size == 0:
                continue
            shifted = h[:, None] + v[:, l][:, None] * (cand[None, :] - theta[l])
            vals = _batch_alignment_residual(shifted, w)
            q = int(np.argmin(vals))
            if vals[q] < res - 1e-15:
                h = shifted[:, q].copy()
                theta[l] = cand[q]
                res = float(vals[q])
                improved = True

        if not improved and pair_sweeps and candidates is not None:
            pairs = np.stack(
                [c.ravel() for c in np.meshgrid(candidates, candidates)]
            )  # 2 x Q^2
            for l1 in range(L):
                for l2 in range(l1 + 1, L):
                    base = h - v[:, l1] * theta[l1] - v[:, l2] * theta[l2]
                    shifted = (
                        base[:, None]
                        + v[:, l1][:, None] * pairs[1][None, :]
                        + v[:, l2][:, None] * pairs[0][None, :]
                    )
                    vals = _batch_alignment_residual(shifted, w)
                    q = int(np.argmin(vals))
                    if vals[q] < res - 1e-15:
                        h = shifted[:, q].copy()
                        theta[l1], theta[l2] = pairs[1][q], pairs[0][q]
                        res = float(vals[q])
                        improved = True

        if not improved:
            break
    return theta, res


def optimize_alignment_csit_free(
    real: ChannelRealization,
    weights,
    codebook: PhaseCodebook,
    budget: int,
    rng: np.random.Generator,
    restarts: int = 5,
) -> AlignmentResult:
    """Align the effective scalar channels to the aggregation weights."""
    w = _check_alignment_inputs(real, weights)
    L = real.num_ris_elements
    d = real.direct[:, 0]
    if L == 0:
        res, c = alignment_residual(d, w)
        return AlignmentResult(RisConfig(np.ones(0, np.complex128)), c, res)

    v = real.ris_to_server[0, :][None, :] * real.device_to_ris  # K x L
    best = None
    for r in range(max(1, restarts)):
        if r == 0:
            theta0 = np.ones(L, dtype=np.complex128)
        else:
            theta0 = random_phases(L, codebook, rng).phases
        theta, res = _descend_alignment(d, v, w, codebook, budget, theta0)
        if best is None or res < best[1]:
            best = (theta, res)
    theta = RisConfig(best[0])
    res, c = alignment_residual(d + v @ theta.phases, w)
    return AlignmentResult(theta, c, res)


# ---------------------------------------------------------------------------
# Oracle and baseline
# ---------------------------------------------------------------------------

_BRUTE_FORCE_LIMIT = 10**6


def brute_force_phases(
    real: ChannelRealization,
    selected,
    profiles,
    Q: int,
    objective: str,
    noise_std: float = 1.0,
    weights=None,
) -> tuple[RisConfig, float]:
    """Exact optimum over the discrete codebook by exhaustive enumeration."""
    if objective not in ("mse", "alignment"):
        raise UsageError(f"unknown objective {objective!r}")
    L = real.num_ris_elements
    if Q**L > _BRUTE_FORCE_LIMIT:
        raise UsageError(f"codebook enumeration {Q}^{L} exceeds the guard")
    codebook = PhaseCodebook(Q)
    levels = codebook.phases()

    if objective == "alignment":
        if weights is None:
            weights = normalized_weights(profiles, range(real.num_devices))
        w = _check_alignment_inputs(real, weights)

    best = None
    for combo in itertools.product(range(Q), repeat=L):
        theta = RisConfig(levels[list(combo)])
        if objective == "mse":
            value, _ = evaluate_mse_objective(
                real, theta, selected, profiles, noise_std
            )
        else:
            h = effective_channel(real, theta)[:, 0]
            value, _ = alignment_residual(h, w)
        if best is None or value < best[1]:
            best = (theta, value)
    return best


def random_phases(
    L: int, codebook: PhaseCodebook, rng: np.random.Generator
) -> RisConfig:
    """Uniform i.i.d. codebook phases (baseline configuration)."""
    if L == 0:
        return RisConfig(np.ones(0, dtype=np.complex128))
    if codebook.continuous:
        return RisConfig(np.exp(2j * np.pi * rng.random(L)))
    return RisConfig(codebook.phases()[rng.integers(0, codebook.levels, size=L)])
