"""Online signature verification with k-NN thresholds over multivariate DTW."""

from .dtw import DtwConfig, DtwResult, dtw_bruteforce_oracle, dtw_distance, local_distance
from .evaluation import (
    EerResult,
    ErrorCurve,
    ProtocolMode,
    ProtocolSpec,
    ScoredTrial,
    compute_eer,
    export_results,
    far_frr_curve,
    run_protocol,
)
from .knn import (
    ComparisonResult,
    Decision,
    GlobalCalibration,
    KnnConfig,
    ReferenceSet,
    Thresholds,
    build_reference_set,
    calibrate_global,
    compute_thresholds,
    knn_mean_distance,
    score,
)
from .preprocess import FeatureSeries, PreprocessConfig, preprocess_pipeline
from .sigdata import (
    DatasetManifest,
    Label,
    Modality,
    Signature,
    load_manifest,
    parse_canonical,
    parse_svc2004,
    serialize_canonical,
)
from .synth import SynthParams, generate_dataset

__version__ = "0.1.0"
