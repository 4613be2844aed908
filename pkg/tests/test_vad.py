import numpy as np
import pytest

from conftest import ListSource
from rtasr.config import FrameConfig, VadConfig, VadSection
from rtasr.models import EMPTY, FrameBlock, PayloadKind
from rtasr.pipeline import Chain
from rtasr.vad import EnergyDetector, SilenceFilter, VadLabel, VoiceActivityDetector, classify_frame, filter_silence


def frames_for(labels) -> FrameBlock:
    '''
    One frame per label: a loud sine for speech, zeros for silence
    '''
    t = np.arange(400) / 16000
    loud = 0.5 * np.sin(2 * np.pi * 500 * t)
    return FrameBlock(np.array([loud if s else np.zeros(400) for s in labels]))


def reference_filter(labels, cfg: VadConfig):
    '''
    Whole-sequence rendition of the keep/drop/endpoint rules; returns the
    kept mask and the number of forwarded frames at every endpoint
    '''
    kept, endpoints = [], []
    run, marked, forwarded = 0, False, 0
    for speech in labels:
        if speech:
            run, marked = 0, False
            kept.append(True)
            forwarded += 1
            continue
        run += 1
        kept.append(run <= cfg.keep_silence)
        forwarded += run <= cfg.keep_silence
        if run >= cfg.endpoint_silence and not marked:
            marked = True
            endpoints.append(forwarded)
    return kept, endpoints


def test_classify_frame():
    assert classify_frame(np.zeros(400), threshold=-20) is VadLabel.SILENCE
    t = np.arange(400) / 16000
    sine = 0.5 * np.sin(2 * np.pi * 1000 * t)
    assert classify_frame(sine, threshold=-10) is VadLabel.SPEECH
    assert classify_frame(sine, threshold=-1) is VadLabel.SILENCE
    always = lambda frames, features=None: np.ones(len(frames), dtype=bool)  # noqa: E731
    assert classify_frame(np.zeros(400), predictor=always) is VadLabel.SPEECH


def test_short_silence_passes():
    labels = [True] * 20 + [False] * 10 + [True] * 20
    outputs = filter_silence(frames_for(labels), labels, VadConfig(keep_silence=30, endpoint_silence=40, hangover=0))
    assert len(outputs) == 1 and not outputs[0].endpoint
    assert outputs[0].frames.num_frames == 50


def test_long_silence_is_cut_and_marked_once():
    labels = [True] * 20 + [False] * 50
    outputs = filter_silence(frames_for(labels), labels, VadConfig(keep_silence=30, endpoint_silence=40, hangover=0))
    assert [o.endpoint for o in outputs] == [True]
    assert outputs[0].frames.num_frames == 50
    assert outputs[0].frames.first_frame_index == 0


@pytest.mark.parametrize("hangover", [0, 10, 30])
def test_hangover_stays_inside_the_keep_limit(hangover):
    labels = [True] * 20 + [False] * 50
    cfg = VadConfig(keep_silence=30, endpoint_silence=40, hangover=hangover)
    outputs, decision = SilenceFilter(cfg).push(frames_for(labels), labels)
    assert decision.kept.tolist() == [True] * 50 + [False] * 20
    assert [o.endpoint for o in outputs] == [True]
    assert outputs[0].frames.num_frames == 50


def test_default_config_cuts_at_keep_silence():
    cfg = VadConfig()
    labels = [True] * 20 + [False] * 60
    outputs = filter_silence(frames_for(labels), labels, cfg)
    assert [o.endpoint for o in outputs] == [True]
    assert outputs[0].frames.num_frames == 20 + cfg.keep_silence


def test_endpoint_after_an_emitted_block_travels_alone():
    cfg = VadConfig(keep_silence=3, endpoint_silence=6, hangover=0)
    vad = SilenceFilter(cfg)
    first = [True] * 4 + [False] * 3
    outputs, _ = vad.push(frames_for(first), first)
    assert [(o.frames.num_frames, o.endpoint) for o in outputs] == [(7, False)]
    second = [False] * 5
    outputs, _ = vad.push(FrameBlock(frames_for(second).data, 7), second)
    assert len(outputs) == 1
    assert outputs[0].frames is None and outputs[0].endpoint
    assert vad.forwarded == 7 and vad.dropped == 5


def test_matches_reference_on_random_labels():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        keep = int(rng.integers(0, 8))
        hang = int(rng.integers(0, keep + 1))
        cfg = VadConfig(keep_silence=keep, endpoint_silence=keep + int(rng.integers(1, 8)), hangover=hang)
        n = int(rng.integers(1, 80))
        # runs of speech and silence rather than independent coin flips
        labels, speech = [], bool(rng.integers(2))
        while len(labels) < n:
            labels += [speech] * int(rng.integers(1, 15))
            speech = not speech
        labels = labels[:n]
        kept, endpoints = reference_filter(labels, cfg)

        vad = SilenceFilter(cfg)
        got_kept, got_endpoints, forwarded, start = [], [], 0, 0
        while start < n:
            size = int(rng.integers(1, 10))
            chunk = labels[start:start + size]
            block = FrameBlock(np.zeros((len(chunk), 4)), start)
            outputs, decision = vad.push(block, chunk)
            got_kept += decision.kept.tolist()
            for out in outputs:
                if out.frames is not None:
                    assert out.frames.first_frame_index == forwarded
                    forwarded += out.frames.num_frames
                if out.endpoint:
                    got_endpoints.append(forwarded)
            start += size
        assert got_kept == kept
        assert got_endpoints == endpoints
        assert forwarded == sum(kept) == vad.forwarded
        assert vad.dropped == n - sum(kept)


def test_section_converts_milliseconds():
    cfg = VadSection(keep_silence_ms=300, endpoint_silence_ms=500, hangover_ms=100).to_frames(FrameConfig())
    assert (cfg.keep_silence, cfg.endpoint_silence, cfg.hangover) == (30, 50, 10)
    with pytest.raises(ValueError):
        VadSection(keep_silence_ms=500, endpoint_silence_ms=300).to_frames(FrameConfig())


def test_component_renumbers_and_flags_endpoints():
    labels = [True] * 10 + [False] * 60 + [True] * 10
    block = frames_for(labels)
    chunks = [FrameBlock(block.data[i:i + 7], i) for i in range(0, len(labels), 7)]
    cfg = VadConfig(energy_threshold=-9.0, keep_silence=30, endpoint_silence=50, hangover=0)
    chain = Chain()
    vad = VoiceActivityDetector(cfg)
    chain.add(ListSource(chunks, PayloadKind.FRAMES)).add(vad)
    chain.start()
    packets = list(chain.packets())
    assert chain.wait(5)
    blocks = [p.payload for p in packets if p.payload is not EMPTY]
    assert FrameBlock.concat_rows(blocks).num_frames == 10 + 30 + 10
    assert sum(p.endpoint for p in packets) == 1
    assert vad.endpoints == 1
    ends = [k for k, p in enumerate(packets) if p.endpoint][0]
    before = sum(p.payload.num_frames for p in packets[:ends + 1] if p.payload is not EMPTY)
    assert before == 40
    assert packets[-1].eos


def test_energy_detector_threshold():
    detector = EnergyDetector(-9.0)
    frames = np.stack([np.zeros(400), np.full(400, 0.05), np.full(400, 0.001)])
    assert detector(frames).tolist() == [False, True, False]
