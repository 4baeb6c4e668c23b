import csv
import json
from pathlib import Path

import pytest

from vaas.cli import main
from vaas.synthetic import SYNTHETIC_TOY_CONFIG, build_synthetic_dataset

TOY_ARGS = ["--seed", str(SYNTHETIC_TOY_CONFIG.seed),
            "--tau", str(SYNTHETIC_TOY_CONFIG.temperature)]


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_ds")
    return build_synthetic_dataset(root, n_authentic=6, n_tampered=4, seed=7)


@pytest.fixture(scope="module")
def ref_json(small_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_ref") / "ref.json"
    rc = main(["calibrate", "--manifest", str(small_dataset),
               "--out", str(out)] + TOY_ARGS)
    assert rc == 0
    return out


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_calibrate_writes_valid_ref(ref_json):
    doc = json.loads(ref_json.read_text())
    assert set(doc) == {"mu_ref", "sigma_ref", "raw_p01", "raw_p99", "n_samples"}
    assert doc["n_samples"] == 6
    assert doc["sigma_ref"] > 0


def test_calibrate_too_few_authentic(tmp_path):
    manifest = build_synthetic_dataset(tmp_path, n_authentic=1, n_tampered=2)
    rc = main(["calibrate", "--manifest", str(manifest),
               "--out", str(tmp_path / "ref.json")] + TOY_ARGS)
    assert rc == 1
    assert not (tmp_path / "ref.json").exists()


def test_missing_manifest_is_data_error(tmp_path):
    rc = main(["calibrate", "--manifest", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "ref.json")])
    assert rc == 2


def test_score_columns_and_fusion(small_dataset, ref_json, tmp_path):
    out = tmp_path / "scores.csv"
    rc = main(["score", "--manifest", str(small_dataset),
               "--ref", str(ref_json), "--out", str(out),
               "--alpha", "0.6"] + TOY_ARGS)
    assert rc == 0
    rows = read_csv(out)
    assert len(rows) == 10
    for row in rows:
        s_f, s_p, s_h = (float(row[k]) for k in ("s_f", "s_p", "s_h"))
        assert s_h == pytest.approx(0.6 * s_f + 0.4 * s_p, abs=1e-9)
        assert row["mode"] == "weighted"


def test_score_harmonic_ignores_alpha(small_dataset, ref_json, tmp_path):
    outs = []
    for i, alpha in enumerate(("0.2", "0.9")):
        out = tmp_path / f"h{i}.csv"
        rc = main(["score", "--manifest", str(small_dataset),
                   "--ref", str(ref_json), "--out", str(out),
                   "--fusion", "harmonic", "--alpha", alpha] + TOY_ARGS)
        assert rc == 0
        outs.append([r["s_h"] for r in read_csv(out)])
    assert outs[0] == outs[1]


def test_evaluate_outputs(small_dataset, ref_json, tmp_path):
    out_json = tmp_path / "report.json"
    out_csv = tmp_path / "report.csv"
    rc = main(["evaluate", "--manifest", str(small_dataset),
               "--ref", str(ref_json), "--out-json", str(out_json),
               "--out-csv", str(out_csv)] + TOY_ARGS)
    assert rc == 0
    doc = json.loads(out_json.read_text())
    assert doc["detection"]["auc"] is not None
    assert len(doc["per_sample"]) == 10
    assert len(read_csv(out_csv)) == 10


def test_sweep_row_count(small_dataset, ref_json, tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main(["sweep", "--manifest", str(small_dataset),
               "--ref", str(ref_json), "--out", str(out),
               "--alpha-min", "0.0", "--alpha-max", "1.0",
               "--alpha-step", "0.1"] + TOY_ARGS)
    assert rc == 0
    rows = read_csv(out)
    assert len(rows) == 22
    assert sum(1 for r in rows if r["mode"] == "weighted") == 11
    harmonic_f1 = {r["f1"] for r in rows if r["mode"] == "harmonic"}
    assert len(harmonic_f1) == 1


def test_render_selected_id(small_dataset, ref_json, tmp_path):
    out_dir = tmp_path / "renders"
    rc = main(["render", "--manifest", str(small_dataset),
               "--ref", str(ref_json), "--out-dir", str(out_dir),
               "--id", "tamp_000"] + TOY_ARGS)
    assert rc == 0
    files = sorted(p.name for p in out_dir.iterdir())
    assert files == ["render_tamp_000.png"]


def test_render_unknown_id(small_dataset, ref_json, tmp_path):
    rc = main(["render", "--manifest", str(small_dataset),
               "--ref", str(ref_json), "--out-dir", str(tmp_path / "r"),
               "--id", "ghost"] + TOY_ARGS)
    assert rc == 1


def test_selfcheck_passes(capsys):
    rc = main(["selfcheck"])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [l for l in out.splitlines() if l]
    assert len(lines) == 5
    assert all(l.startswith("PASS ") for l in lines)


def test_make_synthetic_then_score(tmp_path):
    rc = main(["make-synthetic", "--out-dir", str(tmp_path / "ds"),
               "--authentic", "3", "--tampered", "1", "--seed", "7"])
    assert rc == 0
    manifest = tmp_path / "ds" / "manifest.json"
    assert manifest.exists()
    rc = main(["calibrate", "--manifest", str(manifest),
               "--out", str(tmp_path / "ref.json")] + TOY_ARGS)
    assert rc == 0


def test_determinism_byte_identical(small_dataset, tmp_path):
    """Two full calibrate -> score -> evaluate -> render runs must agree
    byte for byte."""
    digests = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(["calibrate", "--manifest", str(small_dataset),
                     "--out", str(d / "ref.json")] + TOY_ARGS) == 0
        assert main(["score", "--manifest", str(small_dataset),
                     "--ref", str(d / "ref.json"),
                     "--out", str(d / "scores.csv")] + TOY_ARGS) == 0
        assert main(["evaluate", "--manifest", str(small_dataset),
                     "--ref", str(d / "ref.json"),
                     "--out-json", str(d / "report.json")] + TOY_ARGS) == 0
        assert main(["render", "--manifest", str(small_dataset),
                     "--ref", str(d / "ref.json"),
                     "--out-dir", str(d / "renders"),
                     "--id", "tamp_001"] + TOY_ARGS) == 0
        digests.append({
            "ref": (d / "ref.json").read_bytes(),
            "scores": (d / "scores.csv").read_bytes(),
            "report": (d / "report.json").read_bytes(),
            "render": (d / "renders" / "render_tamp_001.png").read_bytes(),
        })
    assert digests[0] == digests[1]
