"""Tests for the plot scripts.

The scripts couple to the pipeline only through its exported CSV
formats, so the fixtures write those CSVs by hand (an embeddings table
and threshold-swept DET points) rather than importing the pipeline.
"""

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

SCRIPTS_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(SCRIPTS_DIR))

import plot_det  # noqa: E402
import plot_embedding  # noqa: E402

CLASSES = ["genuine", "A01", "A02", "A03", "A04", "A05", "A06"]


def write_embeddings_csv(path, k=4, per_class=15, classes=CLASSES):
    rng = np.random.default_rng(0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["file_id", "gender", "label", "attack"] + [f"dm_{i}" for i in range(1, k + 1)])
        for ci, cls in enumerate(classes):
            center = rng.standard_normal(k) * 3
            for i in range(per_class):
                row = center + rng.standard_normal(k) * 0.3
                label = "genuine" if cls == "genuine" else "spoofed"
                attack = "None" if cls == "genuine" else cls
                writer.writerow(
                    [f"f_{cls}_{i}", "female", label, attack] + [repr(float(v)) for v in row]
                )
    return path


def write_det_csv(path, genuine, spoofed):
    """Oracle DET points: sweep every distinct score as a threshold."""
    scores = sorted(set(genuine) | set(spoofed))
    thresholds = scores + [scores[-1] + 1.0]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["fpr", "fnr"])
        for theta in thresholds:
            fpr = sum(1 for s in genuine if s >= theta) / len(genuine)
            fnr = sum(1 for s in spoofed if s < theta) / len(spoofed)
            writer.writerow([repr(fpr), repr(fnr)])
    return path


def run_script(script, *args):
    return subprocess.run(
        [sys.executable, str(SCRIPTS_DIR / script), *args],
        capture_output=True,
        text=True,
    )


def test_embedding_script_renders_k4_csv(tmp_path):
    csv_path = write_embeddings_csv(tmp_path / "emb.csv", k=4)
    out = tmp_path / "emb.png"
    result = run_script("plot_embedding.py", "--csv", str(csv_path), "--dims", "2", "--out", str(out))
    assert result.returncode == 0, result.stderr
    assert out.exists() and out.stat().st_size > 0


def test_embedding_one_legend_entry_per_class(tmp_path):
    csv_path = write_embeddings_csv(tmp_path / "emb.csv", k=4)
    ordered = plot_embedding.plot_embedding(csv_path, 2, tmp_path / "o.png")
    assert ordered == ["genuine", "A01", "A02", "A03", "A04", "A05", "A06"]
    assert len(ordered) == len(CLASSES)


def test_embedding_3d_and_genuine_only(tmp_path):
    csv_path = write_embeddings_csv(tmp_path / "e3.csv", k=4)
    result = run_script("plot_embedding.py", "--csv", str(csv_path), "--dims", "3", "--out", str(tmp_path / "e3.png"))
    assert result.returncode == 0, result.stderr
    solo = write_embeddings_csv(tmp_path / "solo.csv", k=2, classes=["genuine"])
    ordered = plot_embedding.plot_embedding(solo, 2, tmp_path / "solo.png")
    assert ordered == ["genuine"]


def test_embedding_dim_errors(tmp_path):
    csv_path = write_embeddings_csv(tmp_path / "e2.csv", k=2)
    result = run_script("plot_embedding.py", "--csv", str(csv_path), "--dims", "3", "--out", str(tmp_path / "x.png"))
    assert result.returncode == 1
    assert "dm_" in result.stderr or "columns" in result.stderr
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    result = run_script("plot_embedding.py", "--csv", str(bad), "--dims", "2", "--out", str(tmp_path / "y.png"))
    assert result.returncode == 1


def test_det_script_renders_oracle_points(tmp_path):
    rng = np.random.default_rng(1)
    genuine = list(rng.normal(0.2, 0.1, 50))
    spoofed = list(rng.normal(0.7, 0.15, 120))
    csv_path = write_det_csv(tmp_path / "det.csv", genuine, spoofed)
    out = tmp_path / "det.png"
    result = run_script("plot_det.py", "--csv", str(csv_path), "--out", str(out))
    assert result.returncode == 0, result.stderr
    assert out.exists() and out.stat().st_size > 0


def test_det_separable_and_chance(tmp_path):
    sep = write_det_csv(tmp_path / "sep.csv", [0.1, 0.2], [0.8, 0.9])
    eer = plot_det.plot_det(sep, tmp_path / "sep.png")
    assert eer == pytest.approx(0.0, abs=1e-12)
    chance = write_det_csv(tmp_path / "ch.csv", [0.5] * 4, [0.5] * 4)
    eer = plot_det.plot_det(chance, tmp_path / "ch.png")
    assert eer == pytest.approx(0.5, abs=1e-12)


def test_det_malformed_rejected(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert run_script("plot_det.py", "--csv", str(empty), "--out", str(tmp_path / "e.png")).returncode == 1
    header_only = tmp_path / "h.csv"
    header_only.write_text("fpr,fnr\n")
    assert run_script("plot_det.py", "--csv", str(header_only), "--out", str(tmp_path / "h.png")).returncode == 1
    junk = tmp_path / "j.csv"
    junk.write_text("fpr,fnr\nx,y\n")
    assert run_script("plot_det.py", "--csv", str(junk), "--out", str(tmp_path / "j.png")).returncode == 1


def test_rendering_does_not_mutate_input(tmp_path):
    csv_path = write_embeddings_csv(tmp_path / "emb.csv", k=4)
    before = csv_path.read_bytes()
    plot_embedding.plot_embedding(csv_path, 2, tmp_path / "a.png")
    assert csv_path.read_bytes() == before
