import struct
import wave

import numpy as np
import pytest

from pmfspoof import audio_io, synth
from pmfspoof.errors import DataError


def write_pcm16(path, values, rate=16000, channels=1, width=2):
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(width)
        wf.setframerate(rate)
        if width == 2:
            data = b"".join(struct.pack("<h", v) for v in values)
        else:
            data = bytes((v + 128) % 256 for v in values)
        wf.writeframes(data)


def test_normalization_examples(tmp_path):
    p = tmp_path / "t.wav"
    write_pcm16(p, [-32768, 0, 16384])
    w = audio_io.read_wav(p)
    assert w.samples[0] == -1.0
    assert w.samples[1] == 0.0
    assert w.samples[2] == 0.5
    assert w.sample_rate_hz == 16000
    assert w.file_id == "t"


def test_sample_count_matches_data_chunk(tmp_path):
    p = tmp_path / "n.wav"
    write_pcm16(p, list(range(-50, 50)))
    w = audio_io.read_wav(p)
    assert w.samples.size == 100
    assert np.all(np.abs(w.samples) <= 1.0)


def test_read_is_deterministic(tmp_path):
    p = tmp_path / "d.wav"
    write_pcm16(p, [1, 2, 3, -3, -2, -1])
    a = audio_io.read_wav(p)
    b = audio_io.read_wav(p)
    assert np.array_equal(a.samples, b.samples)


def test_rejects_stereo(tmp_path):
    p = tmp_path / "s.wav"
    write_pcm16(p, [0, 0, 0, 0], channels=2)
    with pytest.raises(DataError, match="mono"):
        audio_io.read_wav(p)


def test_rejects_8bit(tmp_path):
    p = tmp_path / "b.wav"
    write_pcm16(p, [0, 1, 2], width=1)
    with pytest.raises(DataError, match="16-bit"):
        audio_io.read_wav(p)


def test_rejects_non_riff(tmp_path):
    p = tmp_path / "x.wav"
    p.write_bytes(b"not audio at all")
    with pytest.raises(DataError, match="WAV"):
        audio_io.read_wav(p)


def test_rejects_truncated(tmp_path):
    p = tmp_path / "t.wav"
    write_pcm16(p, list(range(100)))
    blob = p.read_bytes()
    p.write_bytes(blob[:-60])  # chop off part of the data chunk
    with pytest.raises(DataError):
        audio_io.read_wav(p)


def test_rejects_unexpected_rate(tmp_path):
    p = tmp_path / "r.wav"
    write_pcm16(p, [0, 0], rate=8000)
    with pytest.raises(DataError, match="8000"):
        audio_io.read_wav(p, expected_rate=16000)
    assert audio_io.read_wav(p).sample_rate_hz == 8000


def test_roundtrip_within_quantization_step(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.uniform(-0.99, 0.99, 5000)
    p = tmp_path / "rt.wav"
    synth.write_wav(p, x, 16000)
    w = audio_io.read_wav(p)
    assert np.max(np.abs(w.samples - x)) <= 1.0 / 32768.0


def test_gender_map(tmp_path):
    p = tmp_path / "gm.txt"
    p.write_text("LA_0079 F\nLA_0080 M\n# comment\nLA_0081 female\n")
    gm = audio_io.load_gender_map(p)
    assert gm == {"LA_0079": "female", "LA_0080": "male", "LA_0081": "female"}
    bad = tmp_path / "bad.txt"
    bad.write_text("LA_0079 X\n")
    with pytest.raises(DataError, match="gender token"):
        audio_io.load_gender_map(bad)
    short = tmp_path / "short.txt"
    short.write_text("LA_0079\n")
    with pytest.raises(DataError, match="2 fields"):
        audio_io.load_gender_map(short)


def test_parse_manifest_basic(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text(
        "LA_0079 LA_T_1138215 - - bonafide\n"
        "\n"
        "LA_0079 LA_T_1271820 - A01 spoof\n"
    )
    gm = {"LA_0079": "female"}
    records = audio_io.parse_manifest(p, gm, "train")
    assert len(records) == 2
    first, second = records
    assert first.file_id == "LA_T_1138215"
    assert first.gender == "female"
    assert first.label == "genuine"
    assert first.attack_id is None
    assert first.split == "train"
    assert second.label == "spoofed"
    assert second.attack_id == "A01"


def test_parse_manifest_count_matches_nonempty_lines(tmp_path):
    p = tmp_path / "m.txt"
    lines = [f"SPK LA_{i:07d} - A0{1 + i % 3} spoof" for i in range(17)]
    p.write_text("\n".join(lines) + "\n\n")
    records = audio_io.parse_manifest(p, {"SPK": "male"}, "dev")
    assert len(records) == 17


def test_parse_manifest_errors(tmp_path):
    gm = {"SPK": "male"}
    p = tmp_path / "m.txt"
    p.write_text("SPK LA_1 spoof\n")
    with pytest.raises(DataError, match=":1"):
        audio_io.parse_manifest(p, gm, "train")
    p.write_text("OTHER LA_1 - - bonafide\n")
    with pytest.raises(DataError, match="gender map"):
        audio_io.parse_manifest(p, gm, "train")
    p.write_text("SPK LA_1 - - maybe\n")
    with pytest.raises(DataError, match="unknown key"):
        audio_io.parse_manifest(p, gm, "train")
    p.write_text("SPK LA_1 - - spoof\n")
    with pytest.raises(DataError, match="attack"):
        audio_io.parse_manifest(p, gm, "train")
    with pytest.raises(ValueError, match="split"):
        audio_io.parse_manifest(p, gm, "test")
