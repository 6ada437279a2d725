"""Semantic channel equalization between mismatched goal-oriented languages.

A deterministic grid-world task gives every observation an exact oracle
action value.  Languages encode observations to 2-D symbols decoded by
nearest-anchor atoms; two independently synthesized languages generally
disagree, and the mismatch is measured at the interpretation level and the
task level.  A codebook of affine maps, fit by entropic optimal transport,
equalizes a source language into a target's semantic space, and an episode
harness compares communication strategies across channel SNR and decoder
temperature.
"""

from .channel import ChannelConfig, transmit
from .equalizer import EqualizedLanguage, Policy, equalize, select_em, select_sm
from .gridworld import (
    ACTIONS,
    Action,
    GridConfig,
    Observation,
    ObservationDistribution,
    all_observations,
    best_action,
    manhattan,
    q_star,
    q_star_plus,
    q_star_values,
    step,
    uniform_mu,
)
from .harness import (
    CSV_HEADER,
    EpisodeRecord,
    Strategy,
    SweepConfig,
    SweepRow,
    run_episode,
    rows_to_csv_text,
    sample_start,
    sweep_beta,
    sweep_config_from_dict,
    sweep_snr,
    write_rows_csv,
)
from .language import (
    DEFAULT_JITTER_RADIUS,
    DecoderQ,
    Language,
    Partition,
    load_language,
    perturb_language,
    save_language,
    synthesize_language,
)
from .mismatch import (
    InfoTransferMatrix,
    MismatchReport,
    effectiveness_mismatch,
    info_transfer,
    info_transfer_matrix,
    info_transfer_row,
    mismatch_report,
    semantic_mismatch,
)
from .transport import (
    AffineMap,
    CodebookParams,
    Coupling,
    PointCloud,
    SinkhornError,
    TransformCodebook,
    atom_cloud,
    build_codebook,
    cost_matrix,
    exact_emd,
    fit_affine_map,
    load_codebook,
    save_codebook,
    sinkhorn,
    transport_cost,
)

__version__ = "0.1.0"
