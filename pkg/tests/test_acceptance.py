"""Top-level acceptance gate.

Each test covers one release criterion and records a single PASS/FAIL
verdict line; the conftest terminal-summary hook echoes them after the
run so the whole gate can be read at a glance.
"""

import io
import math
import time

import numpy as np
import pytest

from vaas.attention_score import aggregate_attention, calibrate, summarise
from vaas.cli import main
from vaas.evaluation import (ConfusionCounts, confusion, detection_auc,
                             evaluate_dataset, metrics)
from vaas.fusion import (FusionConfig, SweepSample, fuse_harmonic,
                         fuse_weighted, sweep_alpha)
from vaas.losses import (AlignmentFeatures, alignment_loss, bce_loss,
                         dice_loss, focal_loss)
from vaas.patch_consistency import PatchGridConfig, local_score
from vaas.providers import fetch_features
from vaas.rng import fill_signed_unit, fill_u64
from vaas.selfcheck import bruteforce_local, finite_difference
from vaas.synthetic import SYNTHETIC_TOY_CONFIG
from vaas.tensor_io import Tensor, TensorFormatError, read_tensor, write_tensor


def _verdict(log, name):
    """Record the criterion verdict, letting any failure propagate."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            status = "PASS" if exc_type is None else "FAIL"
            log.append(f"{status} {name}")
            return False
    return _Ctx()


def test_oracle_equivalence(acceptance_log):
    with _verdict(acceptance_log, "oracle-equivalence"):
        t0 = time.perf_counter()
        cfg8 = PatchGridConfig(patch_size=1)
        cfg4 = PatchGridConfig(patch_size=1, neighbourhood="4")
        # exhaustive geometry: every grid shape up to 8x8, both neighbourhoods
        for rows in range(1, 9):
            for cols in range(1, 9):
                if rows * cols < 2:
                    continue
                for cfg in (cfg8, cfg4):
                    emb = fill_signed_unit(rows * 100 + cols,
                                           rows * cols * 6).reshape(-1, 6)
                    got = local_score(emb, (rows, cols), cfg,
                                      (rows, cols)).per_patch
                    want = bruteforce_local(emb, (rows, cols), cfg)
                    assert np.abs(got - want).max() < 1e-6
        # 1000 random instances over the same size range
        dims = fill_u64(2025, 2000).reshape(1000, 2)
        for i, (a, b) in enumerate(dims):
            rows = int(a % 8) + 1
            cols = int(b % 8) + 1
            if rows * cols < 2:
                cols = 2
            emb = fill_signed_unit(5000 + i, rows * cols * 8).reshape(-1, 8)
            got = local_score(emb, (rows, cols), cfg8, (rows, cols)).per_patch
            want = bruteforce_local(emb, (rows, cols), cfg8)
            assert np.abs(got - want).max() < 1e-6
        assert time.perf_counter() - t0 < 10.0


def test_gradient_suite(acceptance_log):
    with _verdict(acceptance_log, "gradient-suite"):
        rng = np.random.Generator(np.random.PCG64(31))
        h, rel_tol = 1e-4, 1e-4
        checked = {"bce": 0, "dice": 0, "focal": 0, "align": 0}
        for _ in range(4):
            pred = rng.uniform(0.05, 0.95, 32)
            target = (rng.random(32) < 0.5).astype(np.float64)
            cases = (
                ("bce", lambda p: bce_loss(p, target)),
                ("dice", lambda p: dice_loss(p, target, 1.0)),
                ("focal", lambda p: focal_loss(p, target, 2.0)),
            )
            for name, fn in cases:
                _, grad = fn(pred)
                fd = finite_difference(lambda p: fn(p)[0], pred.copy(), h)
                for g, d in zip(grad, fd):
                    scale = max(abs(g), abs(d), 1e-8)
                    assert abs(g - d) / scale < rel_tol, name
                    checked[name] += 1
            a = rng.standard_normal(32) + 2.0
            b = rng.standard_normal(32) + 2.0
            _, grad = alignment_loss(AlignmentFeatures(a, b))
            fd = finite_difference(
                lambda v: alignment_loss(AlignmentFeatures(v, b))[0], a.copy(), h)
            for g, d in zip(grad, fd):
                scale = max(abs(g), abs(d), 1e-8)
                assert abs(g - d) / scale < rel_tol, "alignment"
                checked["align"] += 1
        assert all(n >= 100 for n in checked.values())
        # focal at gamma 0 must coincide with plain cross-entropy
        for i in range(100):
            pred = np.clip((fill_signed_unit(700 + i, 16) + 1) / 2, 0.02, 0.98)
            target = (fill_signed_unit(900 + i, 16) > 0).astype(np.float64)
            fv, fg = focal_loss(pred, target, gamma=0.0)
            bv, bg = bce_loss(pred, target)
            assert abs(fv - bv) < 1e-9
            assert np.abs(fg - bg).max() < 1e-9


def test_fusion_properties(acceptance_log):
    with _verdict(acceptance_log, "fusion-properties"):
        pts = (fill_signed_unit(404, 20000) + 1.0) / 2.0
        for s_f, s_p in pts.reshape(10000, 2):
            w = fuse_weighted(s_f, s_p, 0.5)
            hm = fuse_harmonic(s_f, s_p)
            assert hm <= w + 1e-12
            assert min(s_f, s_p) - 1e-12 <= w <= max(s_f, s_p) + 1e-12
            assert fuse_weighted(s_f, s_f, s_p) == s_f   # s_p doubles as alpha
            assert fuse_harmonic(s_f, s_f) == s_f
            assert fuse_weighted(s_f, s_p, 1.0) == s_f
            assert fuse_weighted(s_f, s_p, 0.0) == s_p


def test_metric_identities(acceptance_log):
    with _verdict(acceptance_log, "metric-identities"):
        counts = fill_u64(505, 40000).reshape(10000, 4)
        sum_counts = ConfusionCounts(0, 0, 0, 0)
        for row in counts:
            c = ConfusionCounts(*(int(v % 500) for v in row))
            sum_counts = sum_counts + c
            _, _, f1, iou = metrics(c)
            assert math.isclose(f1, 2 * iou / (1 + iou),
                                rel_tol=1e-12, abs_tol=1e-12)
        # micro aggregation is exactly the metrics of the summed counts
        assert metrics(sum_counts) == metrics(ConfusionCounts(
            sum_counts.tp, sum_counts.fp, sum_counts.fn, sum_counts.tn))
        rng = np.random.Generator(np.random.PCG64(606))
        for _ in range(100):
            pred = (rng.random((64, 64)) < rng.uniform(0.2, 0.8)).astype(float)
            gt = (rng.random((64, 64)) < rng.uniform(0.2, 0.8)).astype(float)
            c = confusion(pred, gt)
            naive = [0, 0, 0, 0]
            for pv, gv in zip(pred.ravel(), gt.ravel()):
                naive[0 if pv and gv else 1 if pv else 2 if gv else 3] += 1
            assert (c.tp, c.fp, c.fn, c.tn) == tuple(naive)


def test_format_roundtrip_and_rejection(acceptance_log):
    with _verdict(acceptance_log, "format"):
        rng = np.random.Generator(np.random.PCG64(707))
        for _ in range(1000):
            ndim = int(rng.integers(1, 6))
            shape = tuple(int(rng.integers(1, 7)) for _ in range(ndim))
            t = Tensor(rng.standard_normal(shape).astype(np.float32))
            buf = io.BytesIO()
            n = write_tensor(t, buf)
            raw = buf.getvalue()
            assert len(raw) == n == 8 + 8 * ndim + 4 * t.data.size
            back = read_tensor(raw)
            assert back == t and back.data.tobytes() == t.data.tobytes()
        good = io.BytesIO()
        write_tensor(Tensor(np.arange(4, dtype=np.float32)), good)
        raw = bytearray(good.getvalue())
        for mutate in (
            lambda b: bytes(b"JUNK") + bytes(b[4:]),      # bad magic
            lambda b: bytes(b[:-3]),                       # truncated payload
            lambda b: bytes(b) + b"\x00",                  # trailing bytes
            lambda b: bytes(b[:5]) + b"\x07" + bytes(b[6:]),  # unknown dtype
        ):
            with pytest.raises(TensorFormatError):
                read_tensor(mutate(raw))


@pytest.fixture(scope="module")
def synth_eval(synth_dataset):
    t0 = time.perf_counter()
    summaries = [
        summarise(aggregate_attention(
            fetch_features(synth_dataset, s.id, "toy", SYNTHETIC_TOY_CONFIG)))
        for s in synth_dataset.samples if s.label == "authentic"]
    ref = calibrate(summaries)
    report = evaluate_dataset(
        synth_dataset, ref, toy_cfg=SYNTHETIC_TOY_CONFIG,
        fusion_cfg=FusionConfig(mode="weighted", alpha=0.6), threshold=0.5)
    return report, ref, time.perf_counter() - t0


def test_synthetic_end_to_end(synth_dataset, synth_eval, acceptance_log):
    with _verdict(acceptance_log, "synthetic-end-to-end"):
        report, ref, elapsed = synth_eval
        assert report.detection_auc >= 0.90
        tampered = [r for r in report.per_sample if r.label == "tampered"]
        assert len(tampered) == 20
        assert np.mean([r.iou for r in tampered]) >= 0.5
        # tampered-region patches must stand out against the background
        from vaas.images import load_mask
        wins = 0
        for entry in synth_dataset.samples:
            if entry.label != "tampered":
                continue
            bundle = fetch_features(synth_dataset, entry.id, "toy",
                                    SYNTHETIC_TOY_CONFIG)
            per_patch = local_score(bundle.embeddings, bundle.grid,
                                    PatchGridConfig(), bundle.image_size).per_patch
            gt = load_mask(synth_dataset.resolve(entry.mask_path))
            ps = 32
            gt_grid = gt.reshape(7, ps, 7, ps).mean(axis=(1, 3)) > 0.5
            if per_patch[gt_grid].mean() > per_patch[~gt_grid].mean():
                wins += 1
        assert wins >= 18
        assert elapsed < 60.0


def test_sweep_harness(synth_eval, acceptance_log):
    with _verdict(acceptance_log, "sweep-harness"):
        report, _, _ = synth_eval
        records = [SweepSample(s_f=r.s_f, s_p=r.s_p, label=r.label, iou=r.iou)
                   for r in report.per_sample]
        rows = sweep_alpha(records, 0.3, 0.8, 0.05)
        by_mode = {"weighted": [], "harmonic": []}
        for r in rows:
            by_mode[r.mode].append(r)
        assert len(by_mode["weighted"]) == 11
        assert len(by_mode["harmonic"]) == 11
        alphas = [r.alpha for r in by_mode["weighted"]]
        assert alphas == pytest.approx([0.3 + 0.05 * i for i in range(11)])
        # derived monotone case: one channel carries the signal, so f1 is a
        # step function of alpha with a single upward transition at 5/9
        step = [SweepSample(s_f=0.0, s_p=0.0, label="authentic"),
                SweepSample(s_f=0.9, s_p=0.0, label="tampered")]
        f1s = [r.f1 for r in sweep_alpha(step, 0.0, 1.0, 0.1,
                                         modes=("weighted",))]
        assert f1s == sorted(f1s)
        assert f1s[0] == 0.0 and f1s[-1] == 1.0


def test_determinism(synth_dataset, tmp_path, acceptance_log):
    with _verdict(acceptance_log, "determinism"):
        manifest = str(synth_dataset.base_dir / "manifest.json")
        toy_args = ["--seed", str(SYNTHETIC_TOY_CONFIG.seed),
                    "--tau", str(SYNTHETIC_TOY_CONFIG.temperature)]
        artifacts = []
        for run in ("one", "two"):
            d = tmp_path / run
            d.mkdir()
            assert main(["calibrate", "--manifest", manifest,
                         "--out", str(d / "ref.json")] + toy_args) == 0
            assert main(["score", "--manifest", manifest,
                         "--ref", str(d / "ref.json"),
                         "--out", str(d / "scores.csv")] + toy_args) == 0
            assert main(["evaluate", "--manifest", manifest,
                         "--ref", str(d / "ref.json"),
                         "--out-json", str(d / "report.json"),
                         "--out-csv", str(d / "report.csv")] + toy_args) == 0
            assert main(["render", "--manifest", manifest,
                         "--ref", str(d / "ref.json"),
                         "--out-dir", str(d / "renders"),
                         "--id", "auth_000", "--id", "tamp_000",
                         "--id", "tamp_019"] + toy_args) == 0
            blobs = {p.name: p.read_bytes()
                     for p in (d / "renders").iterdir()}
            for name in ("ref.json", "scores.csv", "report.json", "report.csv"):
                blobs[name] = (d / name).read_bytes()
            artifacts.append(blobs)
        assert artifacts[0].keys() == artifacts[1].keys()
        assert len(artifacts[0]) == 7  # 4 tables + 3 composites
        assert artifacts[0] == artifacts[1]
