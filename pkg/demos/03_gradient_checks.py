"""Analytic-versus-numeric gradient comparison for the loss functions.

Every loss in vaas.losses returns (value, gradient); here each gradient
is checked against central finite differences and the worst relative
error is reported.

    python3 demos/03_gradient_checks.py
"""

import numpy as np

from vaas.losses import (AlignmentFeatures, alignment_loss, bce_loss,
                         dice_loss, focal_loss)
from vaas.selfcheck import finite_difference


def worst_error(analytic, numeric):
    analytic = np.asarray(analytic).ravel()
    scale = np.maximum(np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale))


def main():
    rng = np.random.Generator(np.random.PCG64(2718))
    pred = rng.uniform(0.05, 0.95, 48)
    target = (rng.random(48) < 0.4).astype(np.float64)

    cases = [
        ("bce", lambda p: bce_loss(p, target)),
        ("dice", lambda p: dice_loss(p, target, 1.0)),
        ("focal g=0.5", lambda p: focal_loss(p, target, 0.5)),
        ("focal g=2", lambda p: focal_loss(p, target, 2.0)),
    ]
    print(f"{'loss':>12} {'value':>10} {'max rel err':>12}")
    for name, fn in cases:
        value, grad = fn(pred)
        numeric = finite_difference(lambda p: fn(p)[0], pred.copy())
        print(f"{name:>12} {value:10.6f} {worst_error(grad, numeric):12.3e}")

    a = rng.standard_normal(24) + 1.5
    b = rng.standard_normal(24) + 1.5
    value, grad = alignment_loss(AlignmentFeatures(a, b))
    numeric = finite_difference(
        lambda v: alignment_loss(AlignmentFeatures(v, b))[0], a.copy())
    print(f"{'alignment':>12} {value:10.6f} {worst_error(grad, numeric):12.3e}")

    # the focal loss collapses to plain cross-entropy at gamma zero
    fv, _ = focal_loss(pred, target, gamma=0.0)
    bv, _ = bce_loss(pred, target)
    print(f"\nfocal(gamma=0) - bce = {abs(fv - bv):.2e}")


if __name__ == "__main__":
    main()
