"""Layer-wise representation-quality metrics for language-model hidden states."""

from ._core import (  # noqa: F401
    DegenerateStepError,
    FormatError,
    GranularityError,
    IoError,
    RepscopeError,
    ValidationError,
    __version__,
    augment_pair,
    collision_entropy_fast,
    compute_report,
    curvature,
    dataset_entropy,
    decode_lrep,
    dime,
    distance_correlation,
    effective_rank,
    encode_lrep,
    gram_spectrum,
    infonce,
    kendall,
    lidar,
    logdet_entropy,
    matrix_entropy,
    prompt_entropy,
    read_lrep,
    run_info,
    singular_spectrum,
    spearman,
    write_lrep,
)
