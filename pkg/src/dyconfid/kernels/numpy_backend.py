"""NumPy implementation of the encoder kernels (pure-Python fallback).

The compiled module in ``_speedups.pyx`` implements the same two functions
with identical semantics; ``dyconfid.kernels`` picks one at import time.

Shapes (float64 throughout):
    points  (batch, N, 3)   input clouds
    w1 (3, H)  b1 (H,)      first pointwise affine layer
    w2 (H, H)  b2 (H,)      second pointwise affine layer
Both layers use tanh; the point dimension is reduced by max-pooling, which
makes the encoding exactly permutation invariant. Because tanh is strictly
increasing, pooling is done on the second layer's pre-activations and tanh is
applied to the pooled values only (same result, N times fewer tanh calls).
"""

import numpy as np

BACKEND = "numpy"


def encoder_forward(points, w1, b1, w2, b2):
    """Run the pointwise encoder and max-pool.

    Returns (pooled, a1, argmax):
        pooled (batch, H)       per-cloud features: tanh(max over points of z2)
        a1     (batch, N, H)    first-layer activations (cached for backward)
        argmax (batch, H) int64 which point won each pooled channel
    """
    a1 = np.tanh(points @ w1 + b1)
    z2 = a1 @ w2 + b2
    argmax = z2.argmax(axis=1)
    pooled = np.tanh(np.take_along_axis(z2, argmax[:, None, :], axis=1)[:, 0, :])
    return pooled, a1, argmax.astype(np.int64)


def encoder_backward(points, a1, argmax, pooled, w1, w2, dpooled):
    """Backpropagate ``dpooled`` (batch, H) through pool and both layers.

    Only the winning point of each pooled channel receives gradient. Returns
    (dw1, db1, dw2, db2) with the same shapes as the parameters.
    """
    batch, N, H = a1.shape
    dz2 = dpooled * (1.0 - pooled * pooled)  # (batch, H), at winning points only

    # scatter dz2 back to per-point layout
    dz2_full = np.zeros((batch, N, H))
    np.put_along_axis(dz2_full, argmax[:, None, :], dz2[:, None, :], axis=1)

    a1_flat = a1.reshape(batch * N, H)
    dz2_flat = dz2_full.reshape(batch * N, H)
    dw2 = a1_flat.T @ dz2_flat
    db2 = dz2_flat.sum(axis=0)

    da1 = dz2_flat @ w2.T
    dz1 = da1 * (1.0 - a1_flat * a1_flat)
    pts_flat = points.reshape(batch * N, 3)
    dw1 = pts_flat.T @ dz1
    db1 = dz1.sum(axis=0)
    return dw1, db1, dw2, db2
