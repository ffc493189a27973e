"""Scenario orchestration: the per-round loop, sweeps, and CSV traces.

Per seed and coherence block: sample channels -> select devices ->
configure the RIS -> then per round: local updates -> (optional DP
mechanism) -> over-the-air aggregation -> global update -> evaluation.
All randomness flows from the seed through named substreams, so reruns
are byte-identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aircomp, fedlearn, privacy, ris_opt, selection
from .aircomp import AggregationReport, DeviceProfile, identity_beamformer
from .channel import (
    FadingSpec,
    Geometry,
    LinkModel,
    PathLoss,
    RisConfig,
    channel_gain,
    effective_channel,
    sample_channels,
)
from .config import ExperimentConfig, set_key
from .errors import ConfigurationError, UsageError
from .idx import load_idx_dataset
from .rng import substream

CSV_HEADER = (
    "scenario,seed,sweep_value,round,n_selected,mse_empirical,mse_analytic,"
    "train_loss,test_acc,epsilon_proxy,ms"
)
SUMMARY_HEADER = (
    "scenario,sweep_value,round,n_seeds,"
    "mse_empirical_mean,mse_empirical_std,mse_analytic_mean,mse_analytic_std,"
    "train_loss_mean,train_loss_std,test_acc_mean,test_acc_std,"
    "epsilon_proxy_mean,epsilon_proxy_std"
)


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


@dataclass(frozen=True)
class RoundRecord:
    scenario: str
    seed: int
    sweep_value: str
    round: int
    n_selected: int
    mse_empirical: float
    mse_analytic: float
    train_loss: float
    test_acc: float
    epsilon_proxy: float
    ms: float

    def to_csv_row(self) -> str:
        return ",".join(
            [
                self.scenario,
                str(self.seed),
                self.sweep_value,
                str(self.round),
                str(self.n_selected),
                _fmt(self.mse_empirical),
                _fmt(self.mse_analytic),
                _fmt(self.train_loss),
                _fmt(self.test_acc),
                _fmt(self.epsilon_proxy),
                _fmt(self.ms),
            ]
        )


def fading_spec_from_config(cfg: ExperimentConfig, rng=None) -> FadingSpec:
    direct = LinkModel(cfg.direct_model, cfg.direct_variance, cfg.direct_k_factor)
    ris = LinkModel(cfg.ris_model, cfg.ris_variance, cfg.ris_k_factor)
    path_loss = None
    geometry = None
    if cfg.path_loss_exponent > 0:
        if rng is None:
            raise ConfigurationError("path loss requires a geometry stream")
        path_loss = PathLoss(
            cfg.path_loss_exponent,
            cfg.path_loss_ref_distance,
            cfg.path_loss_ref_gain,
        )
        radius = cfg.cell_radius * np.sqrt(rng.random(cfg.devices))
        angle = 2 * np.pi * rng.random(cfg.devices)
        positions = np.stack([radius * np.cos(angle), radius * np.sin(angle)], 1)
        geometry = Geometry(
            device_positions=positions,
            server_position=np.zeros(2),
            ris_position=np.array([cfg.ris_distance, 0.0]),
        )
    return FadingSpec(direct, ris, path_loss, geometry)


def _load_task(cfg: ExperimentConfig, rng):
    if cfg.source == "idx":
        train = load_idx_dataset(cfg.idx_train_images, cfg.idx_train_labels)
        test = load_idx_dataset(cfg.idx_test_images, cfg.idx_test_labels)
        return train, test
    return fedlearn.make_synthetic_task(
        cfg.classes,
        cfg.features,
        cfg.devices * cfg.samples_per_device,
        cfg.test_samples,
        rng,
        separation=cfg.class_separation,
    )


def _partition_spec(cfg: ExperimentConfig) -> fedlearn.PartitionSpec:
    return fedlearn.PartitionSpec(
        cfg.partition,
        cfg.samples_per_device,
        shards_per_device=cfg.shards_per_device,
        alpha=cfg.dirichlet_alpha,
    )


@dataclass
class _BlockState:
    """Channel realization plus the decisions fixed for one coherence block."""

    selected: tuple
    theta: RisConfig
    f: aircomp.Beamformer
    h_eff: np.ndarray
    plan: aircomp.TransmitPlan | None
    align_scale: complex
    epsilon: float
    weights: np.ndarray  # normalized over the selected set


def _setup_block(cfg, seed, block, real, profiles, rng_opt, rng_csi):
    K, L, M = cfg.devices, cfg.ris_elements, cfg.antennas
    codebook = ris_opt.PhaseCodebook(
        None if cfg.codebook_levels == 0 else cfg.codebook_levels
    )
    ones = RisConfig(np.ones(L, dtype=np.complex128))
    align_scale = 1.0 + 0.0j

    if cfg.strategy == "greedy":
        sel, theta, f, _ = selection.greedy_codesign(
            real,
            profiles,
            cfg.noise_std,
            cfg.tradeoff_lambda,
            rng_opt,
            codebook=codebook if L > 0 else None,
            budget=cfg.opt_budget,
            restarts=cfg.opt_restarts,
        )
        selected = sel.indices
    else:
        if cfg.strategy == "descending_gain":
            gains = [
                channel_gain(effective_channel(real, ones)[k, :])
                for k in range(K)
            ]
            n = cfg.n_selected or K
            selected = selection.select_descending_gain(gains, n).indices
        else:
            selected = tuple(range(K))

        if cfg.optimizer == "mse" and L > 0:
            theta, f = ris_opt.optimize_mse(
                real,
                selected,
                profiles,
                codebook,
                cfg.opt_budget,
                rng_opt,
                noise_std=cfg.noise_std,
                restarts=cfg.opt_restarts,
            )
        elif cfg.optimizer == "csit_free":
            weights = aircomp.normalized_weights(profiles, selected)
            full_weights = np.zeros(K)
            full_weights[list(selected)] = weights
            result = ris_opt.optimize_alignment_csit_free(
                real,
                full_weights,
                codebook,
                cfg.opt_budget,
                rng_opt,
                restarts=cfg.opt_restarts,
            )
            theta, align_scale = result.theta, result.scale
            f = identity_beamformer(1)
        elif cfg.optimizer == "random":
            theta = ris_opt.random_phases(L, codebook, rng_opt)
            f = (
                identity_beamformer(M)
                if M == 1
                else ris_opt.dominant_beamformer(real, theta, selected)
            )
        else:
            theta = ones
            f = (
                identity_beamformer(M)
                if M == 1
                else ris_opt.dominant_beamformer(real, theta, selected)
            )

    h_eff = effective_channel(real, theta)
    weights = aircomp.normalized_weights(profiles, selected)

    plan = None
    epsilon = 0.0
    if not cfg.error_free and cfg.aggregation == "inversion":
        h_planned = h_eff
        if cfg.csi_error_std > 0:
            err = (cfg.csi_error_std / np.sqrt(2.0)) * (
                rng_csi.standard_normal(h_eff.shape)
                + 1j * rng_csi.standard_normal(h_eff.shape)
            )
            h_planned = h_eff * (1.0 + err)
        plan = aircomp.plan_transmissions(h_planned, selected, profiles, f)
        if cfg.privacy_enabled:
            spec = privacy.PrivacySpec(
                cfg.artificial_noise_std, cfg.clip_norm, cfg.privacy_delta
            )
            epsilon = privacy.privacy_proxy(
                h_eff, plan, spec, cfg.noise_std
            ).system_epsilon

    return _BlockState(
        selected, theta, f, h_eff, plan, align_scale, epsilon, weights
    )


def csit_free_aggregate(
    h: np.ndarray,
    scale: complex,
    weights: np.ndarray,
    updates: np.ndarray,
    noise_std: float,
    artificial_noise_std,
    power_budget: float,
    rng,
) -> AggregationReport:
    """Aggregation without transmitter-side inversion.

    Devices transmit with a common amplitude (full power); the server
    divides by the alignment scale. Misalignment of h_k from scale*w_k
    leaks into the estimate, which is exactly what shrinks with more RIS
    elements.
    """
    if abs(scale) == 0:
        raise UsageError("alignment scale must be nonzero")
    updates = np.asarray(updates, dtype=float)
    d = updates.shape[1]
    beta = np.sqrt(power_budget)
    an_std = np.broadcast_to(
        np.asarray(artificial_noise_std, dtype=float), (updates.shape[0],)
    )
    sent = updates
    if np.any(an_std > 0):
        sent = updates + an_std[:, None] * rng.standard_normal(updates.shape)
    y = beta * (h @ sent.astype(np.complex128))
    if noise_std > 0:
        y = y + (noise_std / np.sqrt(2.0)) * (
            rng.standard_normal(d) + 1j * rng.standard_normal(d)
        )
    estimate = np.real(y / (beta * scale))
    target = weights @ updates
    empirical = float(np.mean((estimate - target) ** 2))
    analytic = noise_std**2 / (2.0 * beta**2 * abs(scale) ** 2)
    return AggregationReport(estimate, empirical, analytic)


def run_seed(cfg: ExperimentConfig, seed: int, sweep_value: str = ""):
    """Execute one seed of the configured scenario; returns RoundRecords."""
    K = cfg.devices
    train, test = _load_task(cfg, substream(seed, "data"))
    parts = fedlearn.partition(train, K, _partition_spec(cfg),
                               substream(seed, "partition"))
    pooled = fedlearn.Dataset(
        np.concatenate([p.features for p in parts]),
        np.concatenate([p.labels for p in parts]),
    )
    model = fedlearn.make_model(
        cfg.model, train.features.shape[1],
        int(max(train.labels.max(), test.labels.max())) + 1, cfg.hidden_width
    )
    profiles = [
        DeviceProfile(len(p), float(len(p)), cfg.power_budget) for p in parts
    ]
    train_spec = fedlearn.TrainSpec(
        cfg.local_epochs, cfg.batch_size, cfg.learning_rate, cfg.rounds
    )
    if cfg.model == "mlp":
        params = 0.1 * substream(seed, "init").standard_normal(model.dim)
    else:
        params = np.zeros(model.dim)

    geo_rng = substream(seed, "geometry")
    spec = fading_spec_from_config(cfg, geo_rng)
    priv_spec = (
        privacy.PrivacySpec(cfg.artificial_noise_std, cfg.clip_norm,
                            cfg.privacy_delta)
        if cfg.privacy_enabled
        else None
    )

    records = []
    block = None
    block_id = -1

    def emit(rnd, state, report, t0):
        loss, _ = model.loss_and_gradient(params, pooled)
        acc = fedlearn.evaluate(params, test, model)
        ms = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else 0.0
        records.append(
            RoundRecord(
                cfg.scenario,
                seed,
                sweep_value,
                rnd,
                len(state.selected),
                report.empirical_mse if report else 0.0,
                report.analytic_mse if report else 0.0,
                loss,
                acc,
                state.epsilon,
                ms,
            )
        )

    t0 = time.perf_counter()
    for rnd in range(cfg.rounds + 1):
        new_block = 0 if cfg.block_rounds == 0 else max(rnd - 1, 0) // cfg.block_rounds
        if new_block != block_id:
            block_id = new_block
            real = sample_channels(
                spec, K, cfg.antennas, cfg.ris_elements,
                substream(seed, "channel", block_id), block_id
            )
            block = _setup_block(
                cfg, seed, block_id, real, profiles,
                substream(seed, "optimizer", block_id),
                substream(seed, "csi", block_id),
            )

        if rnd == 0:
            emit(0, block, None, t0)
            t0 = time.perf_counter()
            continue

        updates = []
        for i, k in enumerate(block.selected):
            delta = fedlearn.local_update(
                params, parts[k], train_spec, model,
                substream(seed, "training", k, rnd)
            )
            if priv_spec is not None:
                delta = privacy.clip_update(delta, priv_spec.clip_norm)
            updates.append(delta)
        updates = np.asarray(updates)
        an_std = cfg.artificial_noise_std if cfg.privacy_enabled else 0.0

        if cfg.error_free:
            sent = updates
            if priv_spec is not None and an_std > 0:
                noise_rng = substream(seed, "noise", rnd)
                sent = updates + an_std * noise_rng.standard_normal(updates.shape)
            estimate = block.weights @ sent
            report = AggregationReport(estimate, 0.0, 0.0)
        elif cfg.aggregation == "csit_free":
            h = block.h_eff[list(block.selected), 0]
            report = csit_free_aggregate(
                h, block.align_scale, block.weights, updates,
                cfg.noise_std, an_std, cfg.power_budget,
                substream(seed, "noise", rnd),
            )
        else:
            report = aircomp.transmit_and_aggregate(
                block.plan, block.h_eff, block.f, updates,
                cfg.noise_std, an_std, substream(seed, "noise", rnd),
            )

        params = fedlearn.global_update(params, report.estimate)
        emit(rnd, block, report, t0)
        t0 = time.perf_counter()
    return records


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def write_trace(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [CSV_HEADER] + [r.to_csv_row() for r in records]
    path.write_text("\n".join(lines) + "\n")


def write_summary(path: Path, records) -> None:
    """Mean/std across seeds, grouped by (sweep_value, round)."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.sweep_value, r.round), []).append(r)
    lines = [SUMMARY_HEADER]
    for (sweep_value, rnd), rs in sorted(
        groups.items(), key=lambda kv: (kv[0][0], kv[0][1])
    ):
        cols = []
        for name in ("mse_empirical", "mse_analytic", "train_loss",
                     "test_acc", "epsilon_proxy"):
            vals = np.array([getattr(r, name) for r in rs], dtype=float)
            cols += [_fmt(vals.mean()), _fmt(vals.std())]
        lines.append(
            ",".join([rs[0].scenario, sweep_value, str(rnd), str(len(rs))] + cols)
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def run(cfg: ExperimentConfig, out_dir=None, sweep_value: str = "") -> list[Path]:
    """Run all seeds; one trace CSV per seed plus a cross-seed summary."""
    cfg.validate()
    out = Path(out_dir if out_dir is not None else cfg.out)
    paths = []
    all_records = []
    for seed in cfg.seeds:
        records = run_seed(cfg, seed, sweep_value)
        all_records.extend(records)
        path = out / f"seed_{seed}.csv"
        write_trace(path, records)
        paths.append(path)
    summary = out / "summary.csv"
    write_summary(summary, all_records)
    return paths + [summary]


def scenario_sweep(
    cfg: ExperimentConfig, key: str | None = None, values=None, out_dir=None
) -> list[Path]:
    """Run the config once per sweep value with shared seeds.

    Emits per-value trace directories plus a combined long-format CSV
    keyed by (sweep value, seed, round).
    """
    cfg.validate()
    key = key or cfg.sweep_key
    values = tuple(str(v) for v in (values if values is not None
                                    else cfg.sweep_values))
    if not key:
        raise ConfigurationError("sweep requires a sweep key")
    if not values:
        raise ConfigurationError("sweep requires at least one value")
    out = Path(out_dir if out_dir is not None else cfg.out)

    paths = []
    combined = []
    for value in values:
        sub = set_key(cfg, key, value)
        for seed in cfg.seeds:
            records = run_seed(sub, seed, sweep_value=value)
            combined.extend(records)
            path = out / f"{key}={value}" / f"seed_{seed}.csv"
            write_trace(path, records)
            paths.append(path)
    combined_path = out / "combined.csv"
    write_trace(combined_path, combined)
    summary = out / "summary.csv"
    write_summary(summary, combined)
    return paths + [combined_path, summary]
