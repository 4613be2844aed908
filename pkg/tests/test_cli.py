import shutil

import pytest

from rtasr.cli import build_parser, main
from rtasr.matrix_io import read_matrix


def test_make_toy_model(tmp_path, capsys):
    out = tmp_path / "toy"
    assert main(["make-toy-model", "--seed", "4", "--words", "2", "--output", str(out)]) == 0
    config, reference = capsys.readouterr().out.strip().split("\t")
    assert config == str(out / "chain.conf")
    assert (out / "toy.txt").read_text().strip() == reference
    for name in ("graph.fst", "gmm.txt", "words.txt", "toy.wav"):
        assert (out / name).exists()


def test_decode_writes_nbest_lines(toy, tmp_path):
    out = tmp_path / "hyps.txt"
    assert main(["decode", "--config", str(toy.paths["config"]), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    cost, words = lines[0].split("\t")
    assert words == toy.reference
    assert cost == f"{float(cost):.4f}"
    assert 1 <= len(lines) <= 5


def test_decode_to_stdout_with_nbest(toy, capsys):
    assert main(["decode", "--config", str(toy.paths["config"]), "--nbest", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1
    assert lines[0].split("\t")[1] == toy.reference


def test_decode_two_segments_are_separated(gap_toy, tmp_path):
    out = tmp_path / "hyps.txt"
    assert main(["decode", "--config", str(gap_toy.paths["config"]), "--nbest", "1", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3 and lines[1] == ""
    assert " ".join(line.split("\t")[1] for line in (lines[0], lines[2])) == gap_toy.reference


def test_featurize_dumps_mfcc(toy, tmp_path):
    out = tmp_path / "feats.mat"
    assert main(["featurize", "--config", str(toy.paths["config"]), "--output", str(out)]) == 0
    feats = read_matrix(out)
    assert feats.shape[1] == 13
    assert feats.shape[0] > 0


def test_vad_lists_segments(gap_toy, tmp_path):
    out = tmp_path / "segments.txt"
    assert main(["vad", "--config", str(gap_toy.paths["config"]), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    fields = [line.split("\t") for line in lines]
    assert [f[0] for f in fields] == ["segment 0", "segment 1"]
    assert int(fields[0][1]) == 0
    assert int(fields[0][2]) == int(fields[1][1])
    assert int(fields[1][2]) > int(fields[1][1])


def test_bench_rtf_reports_wer(toy, tmp_path):
    wavs = tmp_path / "wavs"
    wavs.mkdir()
    shutil.copy(toy.paths["wav"], wavs / "toy.wav")
    shutil.copy(toy.paths["reference"], wavs / "toy.txt")
    out = tmp_path / "report.txt"
    assert main(["bench-rtf", "--config", str(toy.paths["config"]), "--output", str(out), str(wavs)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0].split() == ["file", "audio_s", "proc_s", "rtf", "wer"]
    assert rows[1].split()[0] == "toy.wav"
    assert rows[-1].startswith("TOTAL")
    assert rows[-1].split()[-1] == "0.00%"


def test_bench_rtf_without_files(toy, capsys):
    assert main(["bench-rtf", "--config", str(toy.paths["config"])]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 2
    assert rows[-1].split() == ["TOTAL", "0.00", "0.00", "-", "-"]


def test_bad_config_exits_with_one(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("[chain]\ncomponents = recorder -> cutter -> decoder\n\n[recorder]\nwav = missing.wav\n")
    assert main(["decode", "--config", str(bad)]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert err[-1].startswith("rtasr decode:")


def test_missing_config_file(capsys):
    assert main(["featurize", "--config", "/nonexistent/chain.conf"]) == 1
    assert "cannot read chain config" in capsys.readouterr().err


def test_config_is_required(capsys):
    assert main(["vad"]) == 1
    assert capsys.readouterr().err.strip().endswith("--config is required")


def test_client_needs_a_sender(toy, capsys):
    assert main(["client", "--config", str(toy.paths["config"])]) == 1
    assert "must end with sender" in capsys.readouterr().err


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("featurize", "vad", "decode", "serve", "client", "bench-rtf", "make-toy-model"):
        args = parser.parse_args([command] + (["--config", "x"] if command != "make-toy-model" else []))
        assert args.command == command
    with pytest.raises(SystemExit):
        parser.parse_args(["transcribe"])
