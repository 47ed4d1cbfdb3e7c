"""Presentation attack detection benchmark toolkit.

Score-level PAD evaluation: ISO-style error rates (APCER, BPCER, EER,
BPCER@APCER), DET curves, shallow probe heads trained on frozen
embeddings, leave-one-species-out protocols, score fusion, and a
synthetic Gaussian generator with known ground-truth error rates.
"""

from ._native import available_backends, backend_name, get_backend
from .det import DetCurve, export_det, parse_det, probit, sweep_det
from .errors import (
    AlignmentError,
    CoverageError,
    DivergenceError,
    FormatError,
    PadBenchError,
    ValidationError,
)
from .fusion import (
    FusedScoreSet,
    FusionComparison,
    evaluate_fusion,
    fuse_average,
    fuse_mean,
)
from .head import (
    EmbeddingTable,
    HeadModel,
    TrainConfig,
    bce_gradient,
    bce_loss,
    grid_search,
    init_head,
    predict,
    predict_scores,
    train_head,
)
from .io import (
    read_det,
    read_embeddings,
    read_head,
    read_manifest,
    read_results,
    read_scores,
    read_synth_spec,
    render_results_table,
    write_det,
    write_embeddings,
    write_head,
    write_manifest,
    write_results,
    write_scores,
)
from .metrics import (
    BONA_FIDE,
    MetricsReport,
    ScoreSet,
    apcer,
    bpcer,
    bpcer_at_apcer,
    classify,
    compute_report,
    eer,
    worst_case_apcer,
)
from .protocol import (
    ALL_ATTACKS,
    DatasetManifest,
    ManifestEntry,
    ProtocolSplit,
    ResultRow,
    attach_manifest,
    build_loo_split,
    build_two_class_split,
    run_benchmark,
    run_experiment,
)
from .synth import SpeciesSpec, SynthSpec, analytic_eer, generate, parse_spec

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ALL_ATTACKS",
    "AlignmentError",
    "BONA_FIDE",
    "CoverageError",
    "DatasetManifest",
    "DetCurve",
    "DivergenceError",
    "EmbeddingTable",
    "FormatError",
    "FusedScoreSet",
    "FusionComparison",
    "HeadModel",
    "ManifestEntry",
    "MetricsReport",
    "PadBenchError",
    "ProtocolSplit",
    "ResultRow",
    "ScoreSet",
    "SpeciesSpec",
    "SynthSpec",
    "TrainConfig",
    "ValidationError",
    "analytic_eer",
    "apcer",
    "attach_manifest",
    "available_backends",
    "backend_name",
    "bce_gradient",
    "bce_loss",
    "bpcer",
    "bpcer_at_apcer",
    "build_loo_split",
    "build_two_class_split",
    "classify",
    "compute_report",
    "eer",
    "evaluate_fusion",
    "export_det",
    "fuse_average",
    "fuse_mean",
    "generate",
    "get_backend",
    "grid_search",
    "init_head",
    "parse_det",
    "parse_spec",
    "predict",
    "predict_scores",
    "probit",
    "read_det",
    "read_embeddings",
    "read_head",
    "read_manifest",
    "read_results",
    "read_scores",
    "read_synth_spec",
    "render_results_table",
    "run_benchmark",
    "run_experiment",
    "sweep_det",
    "train_head",
    "worst_case_apcer",
    "write_det",
    "write_embeddings",
    "write_head",
    "write_manifest",
    "write_results",
    "write_scores",
]
