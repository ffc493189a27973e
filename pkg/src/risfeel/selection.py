"""Device selection and the communication-learning tradeoff objective.

The objective is a declared surrogate: a squared excluded-data fraction
(selection loss) plus lambda times the analytic aggregation MSE
(communication loss). Selecting more devices shrinks the first term and
grows the second, which is the tradeoff the greedy pass balances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aircomp import Beamformer, analytic_mse, identity_beamformer, plan_transmissions
from .channel import (
    ChannelRealization,
    RisConfig,
    channel_gain,
    effective_channel,
    empty_ris_config,
)
from .errors import UsageError
from .ris_opt import PhaseCodebook, dominant_beamformer, optimize_mse


@dataclass(frozen=True)
class SelectionSet:
    """Ordered, duplicate-free device indices."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise UsageError("selection contains duplicate devices")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, k) -> bool:
        return int(k) in self.indices


@dataclass(frozen=True)
class CodesignObjective:
    selection_loss: float
    comm_loss: float
    tradeoff: float  # lambda
    total: float


def select_descending_gain(gains, n: int) -> SelectionSet:
    """The n devices with largest channel gain; ties by lowest index."""
    gains = np.asarray(gains, dtype=float)
    if not 1 <= n <= gains.size:
        raise UsageError(f"n={n} out of range for {gains.size} devices")
    order = np.argsort(-gains, kind="stable")
    return SelectionSet(tuple(order[:n]))


def selection_loss(selected: SelectionSet, profiles) -> float:
    sizes = np.array([p.data_size for p in profiles], dtype=float)
    total = sizes.sum()
    if not total > 0:
        raise UsageError("total data size must be positive")
    excluded = total - sizes[list(selected.indices)].sum()
    return float((excluded / total) ** 2)


def evaluate_objective(
    selected: SelectionSet,
    real: ChannelRealization,
    theta: RisConfig,
    f: Beamformer,
    profiles,
    noise_std: float,
    tradeoff: float,
) -> CodesignObjective:
    """Surrogate total loss of a candidate (selection, theta, f) triple."""
    if len(selected) == 0:
        raise UsageError("selected set must be nonempty")
    h_eff = effective_channel(real, theta)
    # raw weights: in this convention eta only shrinks as devices join, so
    # comm_loss is monotone under set inclusion and the tradeoff is real
    plan = plan_transmissions(h_eff, selected.indices, profiles, f,
                              normalize=False)
    comm = analytic_mse(plan, f, noise_std)
    sel = selection_loss(selected, profiles)
    return CodesignObjective(sel, comm, tradeoff, sel + tradeoff * comm)


def _optimize_for_set(real, selected, profiles, noise_std, codebook, budget,
                      restarts, rng):
    if real.num_ris_elements == 0:
        theta = empty_ris_config()
        if real.num_antennas == 1:
            f = identity_beamformer(1)
        else:
            f = dominant_beamformer(real, theta, selected)
        return theta, f
    return optimize_mse(
        real, selected, profiles, codebook, budget, rng,
        noise_std=noise_std, restarts=restarts,
    )


def greedy_codesign(
    real: ChannelRealization,
    profiles,
    noise_std: float,
    tradeoff: float,
    rng: np.random.Generator,
    codebook: PhaseCodebook | None = None,
    budget: int = 20,
    restarts: int = 3,
) -> tuple[SelectionSet, RisConfig, Beamformer, CodesignObjective]:
    """One greedy pass over devices in descending gain order.

    Each candidate device is tentatively added, (theta, f) re-optimized,
    and the addition kept iff the total objective does not increase. The
    communication loss is normalized by the single-best-device MSE so both
    objective terms are O(1) at the default lambda.
    """
    K = real.num_devices
    codebook = codebook or PhaseCodebook(8)
    ones = RisConfig(np.ones(real.num_ris_elements, dtype=np.complex128))
    gains = np.array(
        [channel_gain(effective_channel(real, ones)[k, :]) for k in range(K)]
    )
    order = select_descending_gain(gains, K).indices

    def evaluate(sel_tuple, lam):
        theta, f = _optimize_for_set(
            real, sel_tuple, profiles, noise_std, codebook, budget, restarts, rng
        )
        obj = evaluate_objective(
            SelectionSet(sel_tuple), real, theta, f, profiles, noise_std, lam
        )
        return theta, f, obj

    # normalize lambda against the best single device's communication loss
    _, _, ref = evaluate((order[0],), 0.0)
    lam = tradeoff / ref.comm_loss if ref.comm_loss > 0 else tradeoff

    current = (order[0],)
    theta, f, best = evaluate(current, lam)
    for k in order[1:]:
        trial = current + (k,)
        theta_t, f_t, obj_t = evaluate(trial, lam)
        if obj_t.total <= best.total:
            current, theta, f, best = trial, theta_t, f_t, obj_t
    return SelectionSet(current), theta, f, best
