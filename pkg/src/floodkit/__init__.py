"""floodkit: flood detection in satellite image sequences via masking +
co-occurrence texture + tree classifiers, a classifier-fusion engine
(early/late/PSO-weighted) with imbalance-aware ensembles, bag-of-words
text classification, and keypoint-based flood-level rules."""

from .errors import ConfigError, DataError, FloodkitError, FormatError, SchemaError
from .fusion import (
    FusionWeights,
    PsoParams,
    early_fuse,
    fit_early_fusion,
    late_fuse_average,
    late_fuse_weighted,
    optimize_fusion_weights,
    pso_minimize,
)
from .learn import (
    LabeledDataset,
    Metrics,
    SvmParams,
    TrainedModel,
    TreeParams,
    confusion_and_f1,
    predict_score,
    train_forest,
    train_resampled_ensemble,
    train_svm,
    train_tree,
)
from .masking import (
    MaskConfig,
    PixelMask,
    cloud_mask,
    dark_missing_mask,
    dilate_invalid,
    downscale_mask,
    intersect,
    median_filter,
    sv_mask,
    white_reference,
)
from .poserule import PersonKeypoints, PoseRuleConfig, above_knee_decision
from .raster import HsvRaster, Raster, load_pnm, resize_area, to_gray, to_hsv, write_pnm
from .sequence import (
    CitySequence,
    SynthConfig,
    decide_sequence,
    evaluate_corpus,
    extract_sequence_features,
    generate_synthetic_sequence,
)
from .textbow import Vocabulary, build_vocab, tokenize, vectorize
from .texture import FeatureVector, Glcm, QuantizedGrid, glcm, haralick, pair_delta, quantize

__version__ = "0.1.0"
