"""River scum monitoring: mixture augmentation, patch classifier and scum-on-river index."""

from ._core import (
    AugmentPolicy,
    ClassMode,
    CountMismatch,
    DegenerateDataset,
    DimensionMismatch,
    EmptyRiver,
    EmptySet,
    FormatError,
    InvalidParam,
    IoError,
    ScumError,
    TinyConvNet,
    analyze_frame,
    analyze_probabilities,
    apply_probability_floor,
    assemble_matrix,
    binarize,
    compute_metrics,
    compute_ratio,
    crop_far_region,
    cutout,
    extract_patches,
    generate_synthetic_dataset,
    mixup,
    render_heatmap,
    ricap,
    run_cli,
    sample_beta,
    soft_cross_entropy,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def main(argv=None):
    """Console entry point mirroring the native scumwatch executable."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
