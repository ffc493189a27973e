"""RIS-assisted over-the-air federated learning simulator."""

from .aircomp import (
    AggregationReport,
    Beamformer,
    DeviceProfile,
    TransmitPlan,
    analytic_mse,
    identity_beamformer,
    normalized_weights,
    plan_transmissions,
    transmit_and_aggregate,
)
from .channel import (
    ChannelRealization,
    FadingSpec,
    Geometry,
    LinkModel,
    PathLoss,
    RisConfig,
    channel_gain,
    effective_channel,
    sample_channels,
)
from .config import ExperimentConfig, load_config, load_scenario, parse_config_text
from .errors import (
    ConfigurationError,
    DegenerateChannelError,
    DimensionError,
    FormatError,
    RisFeelError,
    UsageError,
)
from .fedlearn import (
    Dataset,
    PartitionSpec,
    TrainSpec,
    evaluate,
    global_update,
    local_update,
    make_model,
    make_synthetic_task,
    partition,
)
from .idx import load_idx_dataset, load_idx_images, load_idx_labels
from .privacy import (
    PrivacyReport,
    PrivacySpec,
    apply_mechanism,
    clip_update,
    privacy_proxy,
)
from .ris_opt import (
    AlignmentResult,
    PhaseCodebook,
    alignment_residual,
    brute_force_phases,
    evaluate_mse_objective,
    optimize_alignment_csit_free,
    optimize_mse,
    random_phases,
)
from .rng import substream
from .selection import (
    CodesignObjective,
    SelectionSet,
    evaluate_objective,
    greedy_codesign,
    select_descending_gain,
)
from .simulate import run, run_seed, scenario_sweep

__version__ = "0.1.0"
