"""Experiment configuration: flat `key = value` text with [section] headers.

The format is deliberately diff-friendly: one key per line, `#` comments,
no nesting. Unknown sections or keys are rejected so typos fail loudly.
Scenario presets A-D ship as files next to this module.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigurationError

SCENARIOS = ("A", "B", "C", "D")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {text!r}")


def _parse_list(cast):
    def parse(text):
        text = text.strip()
        if not text:
            return ()
        return tuple(cast(tok.strip()) for tok in text.split(","))

    return parse


@dataclass(frozen=True)
class ExperimentConfig:
    # [run]
    scenario: str = ""
    seeds: tuple = (0,)
    rounds: int = 20
    out: str = "out"
    error_free: bool = False
    aggregation: str = "inversion"  # inversion | csit_free
    block_rounds: int = 0  # 0 = one channel realization for the whole run
    record_timing: bool = False

    # [system]
    devices: int = 20
    antennas: int = 1
    ris_elements: int = 0
    noise_std: float = 0.1
    power_budget: float = 1.0
    csi_error_std: float = 0.0

    # [channel]
    direct_model: str = "rayleigh"
    direct_variance: float = 1.0
    direct_k_factor: float = 0.0
    ris_model: str = "rician"
    ris_variance: float = 1.0
    ris_k_factor: float = 10.0
    path_loss_exponent: float = 0.0  # 0 disables path loss
    path_loss_ref_distance: float = 1.0
    path_loss_ref_gain: float = 1.0
    cell_radius: float = 100.0  # devices in a disc around the server
    ris_distance: float = 50.0  # RIS offset from the server along +x

    # [selection]
    strategy: str = "all"  # all | descending_gain | greedy
    n_selected: int = 0  # 0 = all (descending_gain only)
    tradeoff_lambda: float = 1.0

    # [ris]
    optimizer: str = "none"  # none | mse | csit_free | random
    codebook_levels: int = 8  # 0 = continuous (alignment only)
    opt_budget: int = 20
    opt_restarts: int = 5

    # [train]
    model: str = "softmax"
    hidden_width: int = 16
    local_epochs: int = 1
    batch_size: int = 20
    learning_rate: float = 0.1

    # [data]
    source: str = "synthetic"
    classes: int = 5
    features: int = 20
    samples_per_device: int = 100
    test_samples: int = 2000
    class_separation: float = 1.5
    partition: str = "iid"
    shards_per_device: int = 1
    dirichlet_alpha: float = 0.5
    idx_train_images: str = ""
    idx_train_labels: str = ""
    idx_test_images: str = ""
    idx_test_labels: str = ""

    # [privacy]
    privacy_enabled: bool = False
    artificial_noise_std: float = 0.0
    clip_norm: float = 1.0
    privacy_delta: float = 0.05

    # [sweep]
    sweep_key: str = ""
    sweep_values: tuple = ()

    def validate(self) -> "ExperimentConfig":
        c = self
        if c.scenario and c.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {SCENARIOS}")
        if not c.seeds:
            raise ConfigurationError("at least one seed is required")
        if c.rounds < 0 or c.block_rounds < 0:
            raise ConfigurationError("round counts must be nonnegative")
        if c.aggregation not in ("inversion", "csit_free"):
            raise ConfigurationError(f"unknown aggregation {c.aggregation!r}")
        if c.devices < 1 or c.antennas < 1 or c.ris_elements < 0:
            raise ConfigurationError("system dimensions out of range")
        if c.noise_std < 0 or c.csi_error_std < 0:
            raise ConfigurationError("noise levels must be nonnegative")
        if not c.power_budget > 0:
            raise ConfigurationError("power budget must be positive")
        if c.strategy not in ("all", "descending_gain", "greedy"):
            raise ConfigurationError(f"unknown selection strategy {c.strategy!r}")
        if c.strategy == "descending_gain":
            n = c.n_selected or c.devices
            if not 1 <= n <= c.devices:
                raise ConfigurationError("n_selected out of range")
        if c.optimizer not in ("none", "mse", "csit_free", "random"):
            raise ConfigurationError(f"unknown RIS optimizer {c.optimizer!r}")
        if c.codebook_levels not in (0,) and c.codebook_levels < 2:
            raise ConfigurationError("codebook_levels must be 0 or >= 2")
        if c.codebook_levels == 0 and c.optimizer in ("mse", "random"):
            raise ConfigurationError(
                f"{c.optimizer} optimizer requires a discrete codebook"
            )
        if c.optimizer == "csit_free" and c.antennas != 1:
            raise ConfigurationError("csit_free optimizer requires antennas = 1")
        if c.aggregation == "csit_free" and c.optimizer != "csit_free":
            raise ConfigurationError(
                "csit_free aggregation requires the csit_free optimizer"
            )
        if c.model not in ("softmax", "mlp"):
            raise ConfigurationError(f"unknown model {c.model!r}")
        if c.source not in ("synthetic", "idx"):
            raise ConfigurationError(f"unknown data source {c.source!r}")
        if c.partition not in ("iid", "shard", "dirichlet"):
            raise ConfigurationError(f"unknown partition {c.partition!r}")
        if c.privacy_enabled:
            if not 0 < c.privacy_delta < 1:
                raise ConfigurationError("privacy_delta must be in (0, 1)")
            if not c.clip_norm > 0:
                raise ConfigurationError("clip_norm must be positive")
            if c.artificial_noise_std < 0:
                raise ConfigurationError("artificial_noise_std must be >= 0")
        if c.sweep_key and c.sweep_key not in _KEY_TO_SECTION:
            raise ConfigurationError(f"unknown sweep key {c.sweep_key!r}")
        return c


# section -> key -> parser; the dataclass field name doubles as the key name
_SCHEMA = {
    "run": {
        "scenario": str,
        "seeds": _parse_list(int),
        "rounds": int,
        "out": str,
        "error_free": _parse_bool,
        "aggregation": str,
        "block_rounds": int,
        "record_timing": _parse_bool,
    },
    "system": {
        "devices": int,
        "antennas": int,
        "ris_elements": int,
        "noise_std": float,
        "power_budget": float,
        "csi_error_std": float,
    },
    "channel": {
        "direct_model": str,
        "direct_variance": float,
        "direct_k_factor": float,
        "ris_model": str,
        "ris_variance": float,
        "ris_k_factor": float,
        "path_loss_exponent": float,
        "path_loss_ref_distance": float,
        "path_loss_ref_gain": float,
        "cell_radius": float,
        "ris_distance": float,
    },
    "selection": {
        "strategy": str,
        "n_selected": int,
        "tradeoff_lambda": float,
    },
    "ris": {
        "optimizer": str,
        "codebook_levels": int,
        "opt_budget": int,
        "opt_restarts": int,
    },
    "train": {
        "model": str,
        "hidden_width": int,
        "local_epochs": int,
        "batch_size": int,
        "learning_rate": float,
    },
    "data": {
        "source": str,
        "classes": int,
        "features": int,
        "samples_per_device": int,
        "test_samples": int,
        "class_separation": float,
        "partition": str,
        "shards_per_device": int,
        "dirichlet_alpha": float,
        "idx_train_images": str,
        "idx_train_labels": str,
        "idx_test_images": str,
        "idx_test_labels": str,
    },
    "privacy": {
        "privacy_enabled": _parse_bool,
        "artificial_noise_std": float,
        "clip_norm": float,
        "privacy_delta": float,
    },
    "sweep": {
        "sweep_key": str,
        "sweep_values": _parse_list(str),
    },
}

_KEY_TO_SECTION = {
    key: section for section, keys in _SCHEMA.items() for key in keys
}
_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
assert set(_KEY_TO_SECTION) == _FIELD_NAMES


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    values = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ConfigurationError(
                    f"{source}:{lineno}: unknown section [{section}]"
                )
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key = value")
        if section is None:
            raise ConfigurationError(
                f"{source}:{lineno}: key outside any [section]"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA[section]:
            raise ConfigurationError(
                f"{source}:{lineno}: unknown key {key!r} in [{section}]"
            )
        if key in values:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _SCHEMA[section][key](value.strip())
        except ConfigurationError:
            raise
        except ValueError as exc:
            raise ConfigurationError(
                f"{source}:{lineno}: bad value for {key!r}: {exc}"
            ) from exc
    return ExperimentConfig(**values).validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def load_scenario(name: str) -> ExperimentConfig:
    """Shipped preset for scenario A, B, C, or D."""
    if name not in SCENARIOS:
        raise ConfigurationError(f"scenario must be one of {SCENARIOS}")
    res = importlib.resources.files("risfeel.configs") / f"scenario_{name.lower()}.cfg"
    return parse_config_text(res.read_text(), source=f"scenario {name}")


def set_key(cfg: ExperimentConfig, key: str, raw_value: str) -> ExperimentConfig:
    """Replace one config key from its textual form, re-validating."""
    section = _KEY_TO_SECTION.get(key)
    if section is None:
        raise ConfigurationError(f"unknown config key {key!r}")
    value = _SCHEMA[section][key](raw_value)
    return replace(cfg, **{key: value}).validate()
