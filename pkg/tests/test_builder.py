import time

import numpy as np
import pytest
import soundfile as sf

from conftest import payloads
from rtasr.audio import read_wav, replay_stream, write_wav
from rtasr.bench import bench_rtf, decode_file
from rtasr.builder import BuildOptions, build_chain
from rtasr.config import ChainConfig, FrameConfig
from rtasr.decoder import WfstDecoder
from rtasr.errors import AudioFormatError, ChainLinkError, ConfigError
from rtasr.pipeline import Chain
from rtasr.toy import make_toy_model


def one_second(tmp_path, name: str = "tone.wav"):
    path = tmp_path / name
    t = np.arange(16000) / 16000
    write_wav(path, np.round(8000 * np.sin(2 * np.pi * 440 * t)), 16000)
    return path


def chain_file(tmp_path, toy, components: str, extra: str = "") -> ChainConfig:
    path = tmp_path / "chain.conf"
    path.write_text(f"""\
[chain]
components = {components}

[recorder]
wav = {toy.paths["wav"]}

[scorer]
model = {toy.paths["gmm"]}

[decoder]
graph = {toy.paths["graph"]}
words = {toy.paths["words"]}
{extra}""")
    return ChainConfig.load(path)


# replay

def test_replay_chunks_and_eos(tmp_path):
    chain = Chain()
    chain.add(replay_stream(one_second(tmp_path), chunk_ms=100))
    chain.start()
    packets = list(chain.packets())
    assert chain.wait(5)
    chunks = payloads(packets)
    assert len(chunks) == 10 and all(len(c.samples) == 1600 for c in chunks)
    assert packets[-1].eos


def test_realtime_replay_is_paced(tmp_path):
    chain = Chain()
    chain.add(replay_stream(one_second(tmp_path), realtime=True, chunk_ms=100))
    started = time.monotonic()
    chain.start()
    list(chain.packets(timeout=5))
    assert time.monotonic() - started >= 0.95
    assert chain.wait(5)


def test_stereo_and_float_wavs_are_rejected(tmp_path):
    stereo = tmp_path / "stereo.wav"
    sf.write(str(stereo), np.zeros((160, 2), dtype=np.int16), 16000, subtype="PCM_16")
    with pytest.raises(AudioFormatError, match="mono"):
        read_wav(stereo)
    floats = tmp_path / "float.wav"
    sf.write(str(floats), np.zeros(160, dtype=np.float32), 16000, subtype="FLOAT")
    with pytest.raises(AudioFormatError, match="16-bit PCM"):
        read_wav(floats)
    with pytest.raises(AudioFormatError, match="cannot read"):
        read_wav(tmp_path / "missing.wav")


# chain assembly

def test_full_chain_from_config(toy, tmp_path):
    cfg = chain_file(tmp_path, toy, "recorder -> cutter -> mfcc -> cmvn -> gmm -> decoder")
    chain = build_chain(cfg)
    assert [c.name for c in chain.components] == ["recorder", "cutter", "mfcc", "cmvn", "gmm-scorer", "decoder"]
    assert len(chain.pipes) == 6


def test_decoder_before_scorer_is_a_link_error(toy, tmp_path):
    cfg = chain_file(tmp_path, toy, "recorder -> cutter -> mfcc -> decoder -> gmm")
    with pytest.raises(ChainLinkError, match="decoder"):
        build_chain(cfg)


@pytest.mark.parametrize("components,message", [
    ("", "empty"),
    ("recorder -> cutter -> whisper", "unknown component 'whisper'"),
])
def test_bad_component_lists(toy, tmp_path, components, message):
    with pytest.raises(ConfigError, match=message):
        build_chain(chain_file(tmp_path, toy, components))


def test_empty_config_is_an_error():
    with pytest.raises(ConfigError, match="chain"):
        build_chain(ChainConfig.parse(""))


def test_validation_errors_name_section_and_key(toy, tmp_path):
    cfg = chain_file(tmp_path, toy, "recorder -> cutter", "\n[frame]\nframe_length = many\n")
    with pytest.raises(ConfigError, match=r"\[frame\] frame_length"):
        build_chain(cfg)
    cfg = chain_file(tmp_path, toy, "recorder -> cutter -> mfcc -> cmvn -> gmm -> decoder", "beam = -1\n")
    with pytest.raises(ConfigError, match=r"\[decoder\] beam"):
        build_chain(cfg)


def test_missing_model_file(toy, tmp_path):
    broken = ChainConfig.parse(
        "[chain]\ncomponents = recorder -> cutter -> mfcc -> gmm\n[scorer]\nmodel = nowhere.txt\n",
        tmp_path / "x.conf")
    with pytest.raises(ConfigError, match=r"\[scorer\] model: file"):
        build_chain(broken, BuildOptions(wav=str(toy.paths["wav"])))


def test_environment_overrides_chain_keys(toy, tmp_path, monkeypatch):
    monkeypatch.setenv("RTASR_DECODER_NBEST", "2")
    chain = build_chain(chain_file(tmp_path, toy, "recorder -> cutter -> mfcc -> cmvn -> gmm -> decoder"))
    decoder = chain.components[-1]
    assert isinstance(decoder, WfstDecoder) and decoder.cfg.nbest == 2


def test_command_line_options_win(toy, tmp_path):
    cfg = chain_file(tmp_path, toy, "recorder -> cutter -> mfcc -> cmvn -> gmm -> decoder")
    other = one_second(tmp_path)
    chain = build_chain(cfg, BuildOptions(wav=str(other), realtime=True, nbest=1))
    assert chain.components[0].wav == other and chain.components[0].realtime
    assert chain.components[-1].cfg.nbest == 1


# benchmarking

def test_same_input_gives_the_same_transcript(toy):
    cfg = ChainConfig.load(toy.paths["config"])
    first, second = decode_file(cfg), decode_file(cfg)
    assert first.text == second.text == toy.reference
    assert [r.hypotheses for r in first.results] == [r.hypotheses for r in second.results]


def test_minute_of_audio_runs_faster_than_real_time(tmp_path):
    toy = make_toy_model(seed=8, min_seconds=60.0, out_dir=tmp_path)
    report = bench_rtf(ChainConfig.load(toy.paths["config"]), [toy.paths["wav"]])
    assert report.duration >= 60.0
    assert report.rtf < 1.0
    assert report.wer == 0.0
    assert len(report.files) == 1 and report.files[0].transcript == toy.reference


def test_frame_config_rejects_long_shift():
    with pytest.raises(ValueError):
        FrameConfig(frame_length=160, frame_shift=400)
