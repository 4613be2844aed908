from .components import Branch, FeatureExtractor, FeatureProcessor, FrameCutter, MixtureExtractor
from .extraction import FeatureKind, compute_features, feature_dims
from .framing import condition_frame, condition_frames, cut_frames
from .spectral import hz_to_mel, mel_fbank, mel_filterbank, mel_to_hz, mfcc, power_spectrum, spectral_hook
from .transforms import (
    AffineStage,
    AffineTransform,
    CmvnStage,
    DeltaStage,
    SpliceStage,
    StageStack,
    add_deltas,
    apply_affine,
    concat_streams,
    sliding_cmvn,
    splice,
)

__all__ = [
    "AffineStage", "AffineTransform", "Branch", "CmvnStage", "DeltaStage", "FeatureExtractor",
    "FeatureKind", "FeatureProcessor", "FrameCutter", "MixtureExtractor", "SpliceStage", "StageStack",
    "add_deltas", "apply_affine", "compute_features", "concat_streams", "condition_frame",
    "condition_frames", "cut_frames", "feature_dims", "hz_to_mel", "mel_fbank", "mel_filterbank",
    "mel_to_hz", "mfcc", "power_spectrum", "sliding_cmvn", "spectral_hook", "splice",
]
