import math

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import ListSource, payloads
from rtasr.config import FrameConfig, MelConfig
from rtasr.errors import ConfigError, FeatureError
from rtasr.features import (
    AffineStage,
    AffineTransform,
    Branch,
    CmvnStage,
    DeltaStage,
    FeatureExtractor,
    FeatureKind,
    FeatureProcessor,
    FrameCutter,
    MixtureExtractor,
    SpliceStage,
    StageStack,
    add_deltas,
    apply_affine,
    compute_features,
    condition_frame,
    condition_frames,
    cut_frames,
    mel_fbank,
    mel_filterbank,
    mfcc,
    power_spectrum,
    sliding_cmvn,
    splice,
)
from rtasr.features.framing import FrameCutterStage
from rtasr.features.transforms import join_blocks
from rtasr.models import AudioChunk, FeatureMatrix, FrameBlock, PayloadKind
from rtasr.pipeline import Chain

rng = np.random.default_rng(42)


def random_signal(n: int) -> np.ndarray:
    return (rng.normal(0, 3000, n)).clip(-32768, 32767).astype(np.int16)


def random_chunks(samples: np.ndarray) -> list[np.ndarray]:
    cuts = np.sort(rng.choice(np.arange(1, len(samples)), size=int(rng.integers(1, 12)), replace=False))
    return np.split(samples, cuts)


# framing

def test_frame_counts():
    cfg = FrameConfig()
    assert cut_frames(np.zeros(400, np.int16), cfg).num_frames == 1
    assert cut_frames(np.zeros(1600, np.int16), cfg).num_frames == 8
    assert cut_frames(np.zeros(399, np.int16), cfg, eos=False).num_frames == 0


def test_short_segment_is_padded_into_one_frame():
    frames = cut_frames(np.full(100, 1000, np.int16), FrameConfig())
    assert frames.num_frames == 1
    assert np.all(frames.data[0, 100:] == 0)
    assert np.allclose(frames.data[0, :100], 1000 / 32768)


def test_frame_config_rejects_shift_over_length():
    with pytest.raises(ValidationError):
        FrameConfig(frame_length=200, frame_shift=300)


def test_condition_frame_matches_scalar_loop():
    cfg = FrameConfig()
    frame = rng.normal(size=cfg.frame_length)
    n = cfg.frame_length
    mean = sum(frame) / n
    x = [v - mean for v in frame]
    expected = []
    for i in range(n):
        prev = x[i - 1] if i > 0 else x[0]
        w = 0.54 - 0.46 * math.cos(2 * math.pi * i / (n - 1))
        expected.append((x[i] - cfg.preemphasis * prev) * w)
    assert np.allclose(condition_frame(frame, cfg), expected, rtol=0, atol=1e-12)


# spectrum

@pytest.mark.parametrize("n_fft", [256, 512])
def test_power_spectrum_matches_naive_dft(n_fft):
    frames = rng.normal(size=(50, min(400, n_fft)))
    k = np.arange(n_fft // 2 + 1)[:, None]
    n = np.arange(frames.shape[1])[None, :]
    basis = np.exp(-2j * np.pi * k * n / n_fft)
    naive = np.abs(frames @ basis.T) ** 2
    fast = power_spectrum(frames, n_fft)
    assert np.max(np.abs(fast - naive)) / np.max(naive) <= 1e-9


def test_parseval():
    n_fft = 512
    frames = rng.normal(size=(100, 400))
    p = power_spectrum(frames, n_fft)
    full = p[:, 0] + p[:, -1] + 2 * p[:, 1:-1].sum(axis=1)
    energy = n_fft * np.sum(frames ** 2, axis=1)
    assert np.max(np.abs(full - energy) / energy) <= 1e-9


def test_power_spectrum_rejects_bad_sizes():
    with pytest.raises(FeatureError):
        power_spectrum(np.zeros((1, 400)), 500)
    with pytest.raises(FeatureError):
        power_spectrum(np.zeros((1, 600)), 512)


def test_flat_spectrum_gives_filter_areas():
    cfg = MelConfig()
    ones = np.ones((1, cfg.n_fft // 2 + 1))
    weights = mel_filterbank(cfg, 16000)
    assert weights.shape == (24, 257)
    assert np.allclose(mel_fbank(ones, cfg, log=False)[0], weights.sum(axis=1))
    assert np.all(weights >= 0) and np.all(weights.max(axis=1) <= 1.0)


def test_mfcc_matches_direct_cosine_sum():
    x = rng.normal(size=(10, 24))
    n = x.shape[1]
    expected = np.zeros((10, 13))
    for k in range(13):
        scale = math.sqrt(1 / n) if k == 0 else math.sqrt(2 / n)
        for i in range(n):
            expected[:, k] += x[:, i] * math.cos(math.pi * k * (2 * i + 1) / (2 * n))
        expected[:, k] *= scale
    assert np.max(np.abs(mfcc(x, 13) - expected)) <= 1e-10


def test_mel_band_must_fit_the_stream():
    with pytest.raises(ConfigError):
        FeatureExtractor(FeatureKind.FBANK, FrameConfig(sample_rate=8000), MelConfig(fmax=6000))


def test_spectrogram_is_log_power():
    cfg, mel = FrameConfig(), MelConfig()
    frames = cut_frames(random_signal(3200), cfg)
    feats = compute_features(frames, FeatureKind.SPECTROGRAM, cfg, mel)
    assert feats.dims == mel.n_fft // 2 + 1
    power = power_spectrum(condition_frames(frames.data, cfg), mel.n_fft)
    assert np.allclose(feats.data, np.log(np.maximum(power, 1e-10)), atol=1e-9)


def test_spectral_hook_matches_offline_gate():
    cfg, mel = FrameConfig(), MelConfig()
    t = np.arange(4000) / 16000
    signal = (8000 * np.sin(2 * np.pi * 440 * t) + rng.normal(0, 50, t.size)).astype(np.int16)
    frames = cut_frames(signal, cfg)

    def gate(magnitude):
        return np.where(magnitude < 1.0, 0.0, magnitude)

    hooked = compute_features(frames, FeatureKind.MFCC, cfg, mel, hook=gate)
    power = power_spectrum(condition_frames(frames.data, cfg), mel.n_fft)
    gated = gate(np.sqrt(power)) ** 2
    expected = mfcc(mel_fbank(gated, mel), mel.n_ceps)
    assert np.max(np.abs(hooked.data - expected)) <= 1e-9
    with pytest.raises(FeatureError):
        compute_features(frames, FeatureKind.MFCC, cfg, mel, hook=lambda m: m[:, :10])


# post-processing

def test_delta_matches_regression_formula():
    x = rng.normal(size=(20, 13))
    base = np.arange(-2, 3) / (2.0 * (1 + 4))
    second = np.convolve(base, base)

    def filt(kernel, t):
        half = len(kernel) // 2
        return sum(kernel[j] * x[min(max(t + j - half, 0), 19)] for j in range(len(kernel)))

    expected = np.array([np.concatenate([x[t], filt(base, t), filt(second, t)]) for t in range(20)])
    out = add_deltas(FeatureMatrix(x), order=2, half_window=2)
    assert out.dims == 39
    assert np.max(np.abs(out.data - expected)) <= 1e-12


def test_splice_replicates_edges():
    x = FeatureMatrix(np.arange(5.0).reshape(5, 1), 10)
    out = splice(x, 1, 2)
    assert out.first_frame_index == 10
    assert out.data.tolist()[0] == [0, 0, 1, 2]
    assert out.data.tolist()[4] == [3, 4, 4, 4]


@pytest.mark.parametrize("normalize_variance", [False, True])
def test_sliding_cmvn_matches_direct_window_statistics(normalize_variance):
    x = rng.normal(size=(1000, 13)) * 5 + 3
    out = sliding_cmvn(FeatureMatrix(x), 600, normalize_variance).data
    for t in (0, 1, 300, 599, 600, 601, 999):
        win = x[max(0, t - 599):t + 1]
        expected = x[t] - win.mean(axis=0)
        if normalize_variance:
            expected = expected / np.maximum(win.std(axis=0), 1e-8)
        assert np.max(np.abs(out[t] - expected)) <= 1e-10


@pytest.mark.parametrize("sizes", [(60, 8), (1, 2, 3, 60, 2), (99, 1, 5), (30, 30, 30, 30)])
def test_cmvn_stage_warm_up_keeps_every_frame(sizes):
    x = rng.normal(size=(sum(sizes), 3)) * 4 - 1
    stage = CmvnStage(window=100, normalize_variance=True)
    parts, start = [], 0
    for size in sizes:
        parts.append(stage.accept(FeatureMatrix(x[start:start + size], start)).data)
        start += size
    expected = sliding_cmvn(FeatureMatrix(x), 100, True).data
    assert np.max(np.abs(np.concatenate(parts) - expected)) <= 1e-10


def test_affine_matches_triple_loop():
    m = rng.normal(size=(5, 9))
    b = rng.normal(size=5)
    x = rng.normal(size=(7, 9))
    expected = np.zeros((7, 5))
    for t in range(7):
        for i in range(5):
            acc = b[i]
            for j in range(9):
                acc += m[i, j] * x[t, j]
            expected[t, i] = acc
    out = apply_affine(FeatureMatrix(x), AffineTransform(m, b))
    assert np.max(np.abs(out.data - expected)) <= 1e-12
    with pytest.raises(FeatureError):
        apply_affine(FeatureMatrix(x[:, :8]), AffineTransform(m, b))


def test_affine_file_with_bias_column(tmp_path):
    m = rng.normal(size=(4, 7))
    path = tmp_path / "lda.mat"
    path.write_text("4 7\n" + "\n".join(" ".join(repr(float(v)) for v in row) for row in m) + "\n")
    with_bias = AffineTransform.load(path, in_dims=6)
    assert with_bias.in_dims == 6 and np.allclose(with_bias.bias, m[:, -1])
    plain = AffineTransform.load(path)
    assert plain.in_dims == 7 and plain.bias is None


def test_dimension_arithmetic():
    mel = MelConfig()
    assert DeltaStage(2, 2).output_dims(13) == 39
    assert SpliceStage(10, 10).output_dims(13) == 273
    assert 39 + 24 + 40 == 103
    assert SpliceStage(3, 3).output_dims(103) == 721
    assert Branch(FeatureKind.FBANK).dims(mel) == 24


# streaming

def stream(samples: np.ndarray, chunks: list[np.ndarray], cfg: FrameConfig, mel: MelConfig) -> FeatureMatrix:
    cutter = FrameCutterStage(cfg)
    stack = StageStack([DeltaStage(2, 2), SpliceStage(2, 2), CmvnStage(100)])
    parts = []
    for chunk in chunks:
        frames = cutter.accept(chunk)
        if frames is not None:
            parts.append(stack.accept(compute_features(frames, FeatureKind.MFCC, cfg, mel)))
    tail = cutter.flush()
    if tail is not None:
        parts.append(stack.accept(compute_features(tail, FeatureKind.MFCC, cfg, mel)))
    parts.append(stack.flush())
    return join_blocks(parts)


def offline(samples: np.ndarray, cfg: FrameConfig, mel: MelConfig) -> FeatureMatrix:
    feats = compute_features(cut_frames(samples, cfg), FeatureKind.MFCC, cfg, mel)
    return sliding_cmvn(splice(add_deltas(feats, 2, 2), 2, 2), 100)


def test_streaming_matches_whole_signal():
    cfg, mel = FrameConfig(), MelConfig()
    for _ in range(50):
        samples = random_signal(int(rng.integers(2000, 12000)))
        streamed = stream(samples, random_chunks(samples), cfg, mel)
        whole = offline(samples, cfg, mel)
        assert streamed.first_frame_index == 0
        assert streamed.data.shape == (whole.num_frames, 13 * 3 * 5)
        assert np.max(np.abs(streamed.data - whole.data)) <= 1e-10


def test_component_chain_matches_whole_signal():
    cfg, mel = FrameConfig(), MelConfig()
    samples = random_signal(9000)
    chunks = [AudioChunk(c, 16000) for c in random_chunks(samples)]
    chain = Chain(capacity=2)
    chain.add(ListSource(chunks, PayloadKind.AUDIO)).add(FrameCutter(cfg)).add(FeatureExtractor(FeatureKind.MFCC, cfg, mel))
    chain.add(FeatureProcessor(DeltaStage(2, 2), SpliceStage(2, 2), CmvnStage(100)))
    chain.start()
    out = FeatureMatrix.concat_rows(payloads(list(chain.packets())))
    assert chain.wait(5)
    assert np.max(np.abs(out.data - offline(samples, cfg, mel).data)) <= 1e-10


def test_cutter_rejects_other_sample_rates():
    chain = Chain()
    chain.add(ListSource([AudioChunk(np.zeros(800, np.int16), 8000)], PayloadKind.AUDIO)).add(FrameCutter())
    chain.start()
    with pytest.raises(Exception, match="16000 Hz"):
        list(chain.packets(timeout=5))


def test_mixture_produces_721_dims():
    cfg, mel = FrameConfig(), MelConfig()
    lda = AffineTransform(rng.normal(size=(40, 13 * 9)) * 0.1)
    branches = [
        Branch(FeatureKind.MFCC, [DeltaStage(2, 2)], name="mfcc_delta"),
        Branch(FeatureKind.FBANK),
        Branch(FeatureKind.MFCC, [SpliceStage(4, 4), AffineStage(lda)], name="lda"),
    ]
    mixture = MixtureExtractor(branches, cfg, mel, post=[SpliceStage(3, 3)])
    assert mixture.dims == 721
    frames = cut_frames(random_signal(8000), cfg)
    half = frames.num_frames // 2
    parts = [mixture.transform(FrameBlock(frames.data[:half])),
             mixture.transform(FrameBlock(frames.data[half:], half)),
             mixture.flush()]
    out = join_blocks(parts)
    assert out.data.shape == (frames.num_frames, 721)
    assert out.first_frame_index == 0
    fbank = compute_features(frames, FeatureKind.FBANK, cfg, mel).data
    # centre block of the ±3 splice holds the fBank stream at columns 39..63
    assert np.allclose(out.data[:, 3 * 103 + 39:3 * 103 + 63], fbank)
