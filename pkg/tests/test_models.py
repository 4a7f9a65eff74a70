import numpy as np
import pytest

from pmfspoof import container, filterbank, models, pmf, synth
from pmfspoof.audio_io import UtteranceRecord
from pmfspoof.errors import DataError

FS = 16000
BINS = 1024


def make_corpus(tmp_path, spec_rows):
    """spec_rows: (file_id, gender, label, attack). Writes one wav each."""
    wav_dir = tmp_path / "wav"
    records = []
    for i, (fid, gender, label, attack) in enumerate(spec_rows):
        rng = np.random.default_rng(100 + i)
        n = 4000 + 400 * (i % 3)  # unequal lengths on purpose
        x = np.clip(rng.laplace(0, 0.1, n), -0.95, 0.95)
        synth.write_wav(wav_dir / f"{fid}.wav", x, FS)
        records.append(
            UtteranceRecord(fid, f"SPK_{gender}", gender, label, attack, "train")
        )
    return wav_dir, records


@pytest.fixture(scope="module")
def banks():
    return [
        filterbank.design_gammatone(3, 0.0, 8000.0, FS),
        filterbank.design_inverse_gammatone(3, 0.0, 8000.0, FS),
    ]


def base_rows():
    rows = []
    for gender in ("female", "male"):
        for j in range(2):
            rows.append((f"gen_{gender}_{j}", gender, "genuine", None))
            rows.append((f"spf_{gender}_{j}", gender, "spoofed", "A01"))
    return rows


def test_build_counts_and_keys(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS, gender_split=True)
    assert len(ms.entries) == 2 * 2 * 2 * 3  # genders x classes x banks x channels
    for h in ms.entries.values():
        assert abs(h.probabilities.sum() - 1.0) < 1e-12
        assert h.bin_count == BINS


def test_no_gender_split_counts(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS, gender_split=False)
    assert ms.genders == ("all",)
    assert len(ms.entries) == 2 * 2 * 3


def test_single_file_model_equals_file_pmf(tmp_path, banks):
    rows = [
        ("g0", "female", "genuine", None),
        ("s0", "female", "spoofed", "A01"),
        ("g1", "male", "genuine", None),
        ("s1", "male", "spoofed", "A01"),
    ]
    wav_dir, records = make_corpus(tmp_path, rows)
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS, gender_split=True)
    from pmfspoof.audio_io import read_wav

    w = read_wav(wav_dir / "g0.wav")
    filtered = filterbank.apply(banks[0], w)
    direct = pmf.estimate_pmf(filtered.channels[1], BINS)
    stored = ms.entries[("female", "genuine", "gammatone", 2)]
    assert np.array_equal(stored.counts, direct.counts)
    assert np.array_equal(stored.probabilities, direct.probabilities)


def test_equal_length_files_average(tmp_path, banks):
    wav_dir = tmp_path / "wav"
    rng = np.random.default_rng(0)
    xs = [rng.uniform(-0.9, 0.9, 4096) for _ in range(2)]
    for i, x in enumerate(xs):
        synth.write_wav(wav_dir / f"g{i}.wav", x, FS)
    synth.write_wav(wav_dir / "s0.wav", rng.uniform(-0.9, 0.9, 4096), FS)
    records = [
        UtteranceRecord("g0", "S", "female", "genuine", None, "train"),
        UtteranceRecord("g1", "S", "female", "genuine", None, "train"),
        UtteranceRecord("s0", "S", "female", "spoofed", "A01", "train"),
    ]
    gbank = [banks[0]]
    ms = models.build_models(records, wav_dir, gbank, bin_count=BINS, gender_split=False)
    from pmfspoof.audio_io import read_wav

    per_file = []
    for fid in ("g0", "g1"):
        filtered = filterbank.apply(banks[0], read_wav(wav_dir / f"{fid}.wav"))
        per_file.append(pmf.estimate_pmf(filtered.channels[0], BINS))
    expected = 0.5 * (per_file[0].probabilities + per_file[1].probabilities)
    got = ms.entries[("all", "genuine", "gammatone", 1)].probabilities
    assert np.max(np.abs(got - expected)) < 1e-15


def test_build_is_order_independent(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms1 = models.build_models(records, wav_dir, banks, bin_count=BINS)
    ms2 = models.build_models(records[::-1], wav_dir, banks, bin_count=BINS)
    for key in ms1.entries:
        assert np.array_equal(ms1.entries[key].counts, ms2.entries[key].counts)
        assert np.array_equal(
            ms1.entries[key].probabilities, ms2.entries[key].probabilities
        )


def test_empty_bucket_rejected(tmp_path, banks):
    rows = [
        ("g0", "female", "genuine", None),
        ("s0", "female", "spoofed", "A01"),
        ("g1", "male", "genuine", None),
        # no spoofed male
    ]
    wav_dir, records = make_corpus(tmp_path, rows)
    with pytest.raises(DataError, match="spoofed.*male|male.*spoofed"):
        models.build_models(records, wav_dir, banks, bin_count=BINS)


def test_save_load_roundtrip_bit_exact(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS)
    path = tmp_path / "models.bin"
    models.save_models(ms, path, config_hash="abc123")
    loaded = models.load_models(path)
    assert loaded.bin_count == ms.bin_count
    assert loaded.banks == ms.banks
    assert loaded.gender_split == ms.gender_split
    for key in ms.entries:
        assert np.array_equal(loaded.entries[key].counts, ms.entries[key].counts)
        assert np.array_equal(
            loaded.entries[key].probabilities, ms.entries[key].probabilities
        )
    assert models.model_config_hash(path) == "abc123"


def test_load_truncated_rejected(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS)
    path = tmp_path / "models.bin"
    models.save_models(ms, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 999])
    with pytest.raises(DataError, match="truncated"):
        models.load_models(path)


def test_load_missing_bucket_named(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS)
    path = tmp_path / "models.bin"
    key = ("male", "spoofed", "gammatone", 2)
    dropped = {k: v for k, v in ms.entries.items() if k != key}
    ms.entries = dropped
    models.save_models(ms, path)
    with pytest.raises(DataError, match="male/spoofed/gammatone/channel 2"):
        models.load_models(path)


def test_merge_bins_models(tmp_path, banks):
    wav_dir, records = make_corpus(tmp_path, base_rows())
    ms = models.build_models(records, wav_dir, banks, bin_count=BINS)
    coarse = ms.merge_bins(64)
    assert coarse.bin_count == 64
    for key, h in coarse.entries.items():
        assert h.counts.sum() == ms.entries[key].counts.sum()


def test_container_roundtrip_misc(tmp_path):
    arrays = {
        "a": np.arange(6, dtype=np.int64).reshape(2, 3),
        "b": np.linspace(-1, 1, 5),
    }
    p = tmp_path / "c.bin"
    container.save_container(p, "thing", {"x": 1.5}, arrays)
    meta, loaded = container.load_container(p, expected_kind="thing")
    assert meta == {"x": 1.5}
    assert np.array_equal(loaded["a"], arrays["a"])
    assert np.array_equal(loaded["b"], arrays["b"])
    header = container.read_header(p)
    assert header["kind"] == "thing"
    with pytest.raises(DataError, match="kind"):
        container.load_container(p, expected_kind="other")
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"nope")
    with pytest.raises(DataError):
        container.load_container(bad)
