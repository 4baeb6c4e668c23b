"""Built-in oracle suites: cheap, independent re-derivations of the core
numerics that the CLI can run anywhere to validate an installation."""

from __future__ import annotations

import io
import math

import numpy as np

from . import fusion, losses
from .evaluation import ConfusionCounts, confusion, metrics
from .patch_consistency import PatchGridConfig, local_score
from .rng import fill_signed_unit
from .tensor_io import Tensor, read_tensor, write_tensor


def bruteforce_local(embeddings: np.ndarray, grid: tuple,
                     cfg: PatchGridConfig) -> np.ndarray:
    """Naive double-loop per-patch anomaly; the reference the fast path
    must match."""
    rows, cols = grid
    emb = np.asarray(embeddings, dtype=np.float64)
    unit = emb / np.linalg.norm(emb, axis=1, keepdims=True)
    out = np.zeros((rows, cols))
    for r in range(rows):
        for c in range(cols):
            sims = []
            for dr, dc in cfg.offsets:
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    s = float(np.dot(unit[r * cols + c], unit[rr * cols + cc]))
                    if cfg.clamp_negative_sim:
                        s = min(max(s, 0.0), 1.0)
                    sims.append(s)
            out[r, c] = 1.0 - sum(sims) / len(sims)
    return out


def finite_difference(fn, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central finite differences of a scalar function over a flat vector."""
    g = np.zeros_like(x, dtype=np.float64)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp.flat[i] += h
        xm.flat[i] -= h
        g.flat[i] = (fn(xp) - fn(xm)) / (2 * h)
    return g


def _check_grad(analytic: np.ndarray, numeric: np.ndarray, tol: float,
                name: str) -> None:
    scale = max(float(np.abs(numeric).max()), 1e-12)
    err = float(np.abs(analytic - numeric).max()) / scale
    assert err < tol, f"{name} gradient mismatch: rel err {err:.3e} >= {tol}"


def suite_format_roundtrip(n_cases: int = 50) -> None:
    rng = np.random.Generator(np.random.PCG64(7))
    for _ in range(n_cases):
        ndim = int(rng.integers(1, 5))
        shape = tuple(int(rng.integers(1, 5)) for _ in range(ndim))
        t = Tensor(rng.standard_normal(shape).astype(np.float32))
        buf = io.BytesIO()
        n = write_tensor(t, buf)
        assert n == 8 + 8 * ndim + 4 * t.data.size
        assert read_tensor(buf.getvalue()) == t


def suite_gradient_checks(tol: float = 1e-4) -> None:
    rng = np.random.Generator(np.random.PCG64(13))
    pred = rng.uniform(0.05, 0.95, 64)
    target = (rng.random(64) < 0.4).astype(np.float64)
    for name, fn in (
        ("bce", lambda p: losses.bce_loss(p, target)),
        ("dice", lambda p: losses.dice_loss(p, target, 1.0)),
        ("focal", lambda p: losses.focal_loss(p, target, 2.0)),
    ):
        _, grad = fn(pred)
        _check_grad(grad, finite_difference(lambda p: fn(p)[0], pred), tol, name)
    a = rng.standard_normal(32)
    b = rng.standard_normal(32)
    _, grad = losses.alignment_loss(losses.AlignmentFeatures(a, b))
    numeric = finite_difference(
        lambda v: losses.alignment_loss(losses.AlignmentFeatures(v, b))[0], a)
    _check_grad(grad, numeric, tol, "alignment")


def suite_metric_identities(n_cases: int = 500) -> None:
    rng = np.random.Generator(np.random.PCG64(17))
    for _ in range(n_cases):
        c = ConfusionCounts(*(int(v) for v in rng.integers(0, 1000, 4)))
        _, _, f1, iou = metrics(c)
        assert math.isclose(f1, 2 * iou / (1 + iou), rel_tol=1e-12, abs_tol=1e-12)
    pred = (rng.random((32, 32)) < 0.5).astype(float)
    gt = (rng.random((32, 32)) < 0.5).astype(float)
    c = confusion(pred, gt)
    naive = [0, 0, 0, 0]
    for pv, gv in zip(pred.ravel(), gt.ravel()):
        if pv and gv:
            naive[0] += 1
        elif pv:
            naive[1] += 1
        elif gv:
            naive[2] += 1
        else:
            naive[3] += 1
    assert (c.tp, c.fp, c.fn, c.tn) == tuple(naive)


def suite_patch_bruteforce(n_cases: int = 20) -> None:
    cfg = PatchGridConfig(patch_size=1)
    for case in range(n_cases):
        vals = fill_signed_unit(1000 + case, 5 * 5 * 8).reshape(25, 8)
        result = local_score(vals, (5, 5), cfg, (5, 5))
        expected = bruteforce_local(vals, (5, 5), cfg)
        assert np.abs(result.per_patch - expected).max() < 1e-6


def suite_fusion_properties(n_cases: int = 2000) -> None:
    u = fill_signed_unit(99, 2 * n_cases) * 0.5 + 0.5
    for s_f, s_p in u.reshape(n_cases, 2):
        w = fusion.fuse_weighted(s_f, s_p, 0.5)
        h = fusion.fuse_harmonic(s_f, s_p)
        assert h <= w + 1e-12
        assert min(s_f, s_p) - 1e-12 <= w <= max(s_f, s_p) + 1e-12
        assert fusion.fuse_weighted(s_f, s_f, 0.3) == s_f
        assert fusion.fuse_harmonic(s_f, s_f) == s_f


SUITES = {
    "format_roundtrip": suite_format_roundtrip,
    "fusion_properties": suite_fusion_properties,
    "gradient_checks": suite_gradient_checks,
    "metric_identities": suite_metric_identities,
    "patch_bruteforce": suite_patch_bruteforce,
}


def run_selfcheck(grad_tol: float = 1e-4, out=print) -> bool:
    """Run every suite in sorted order; returns True when all pass."""
    all_ok = True
    for name in sorted(SUITES):
        try:
            if name == "gradient_checks":
                SUITES[name](tol=grad_tol)
            else:
                SUITES[name]()
            out(f"PASS {name}")
        except AssertionError as e:
            out(f"FAIL {name}: {e}")
            all_ok = False
    return all_ok
