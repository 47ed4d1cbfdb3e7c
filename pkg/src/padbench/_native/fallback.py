"""Pure numpy implementation of the mini-batch SGD epoch.

Shares its exact contract with the compiled kernel: parameters live in one
flat float64 vector laid out per layer as the row-major weight matrix
followed by the bias, and the batch schedule is the caller-supplied
permutation sliced into consecutive chunks.  Results agree with the
compiled kernel to rounding (summation order differs), and are bitwise
reproducible within this backend.
"""

import numpy as np

NAME = "python"


def param_views(params, sizes):
    """(weights, bias) views into the flat parameter vector, per layer."""
    views = []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        fan_in = int(fan_in)
        fan_out = int(fan_out)
        w = params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset:offset + fan_out]
        offset += fan_out
        views.append((w, b))
    return views


def n_params(sizes):
    return sum(
        int(i) * int(o) + int(o) for i, o in zip(sizes[:-1], sizes[1:])
    )


def sgd_epoch(X, y, perm, params, sizes, lr, batch_size):
    """Run one epoch of mini-batch SGD in place on the flat parameters."""
    views = param_views(params, sizes)
    last = len(views) - 1
    for start in range(0, perm.shape[0], batch_size):
        idx = perm[start:start + batch_size]
        acts = [X[idx]]
        zs = []
        for li, (w, b) in enumerate(views):
            z = acts[-1] @ w + b
            zs.append(z)
            acts.append(z if li == last else np.maximum(z, 0.0))
        p = 1.0 / (1.0 + np.exp(-acts[-1][:, 0]))
        delta = ((p - y[idx]) / idx.shape[0])[:, None]
        grads = [None] * len(views)
        for li in range(last, -1, -1):
            grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
            if li > 0:
                delta = (delta @ views[li][0].T) * (zs[li - 1] > 0.0)
        for (w, b), (dw, db) in zip(views, grads):
            w -= lr * dw
            b -= lr * db
