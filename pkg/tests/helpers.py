"""Independent oracles used by the test suite.

These deliberately avoid the implementation's algorithms: the envelope oracle
is a naive O(L*r) window scan, the DTW oracle walks every warping path, the
gradient oracle is central finite differences, and the signed-rank oracle
enumerates all sign assignments.
"""

import itertools
import math

import numpy as np


def envelope_naive(x, r):
    L = len(x)
    u = np.array([x[max(0, k - r) : min(L, k + r + 1)].max() for k in range(L)])
    lo = np.array([x[max(0, k - r) : min(L, k + r + 1)].min() for k in range(L)])
    return u, lo


def dtw_enumerate(x, y, radius=None):
    """Minimum path cost over every monotone warping path (no DP, no pruning)."""
    L = len(x)
    best = [math.inf]

    def walk(i, j, acc):
        if radius is not None and abs(i - j) > radius:
            return
        acc += (x[i] - y[j]) ** 2
        if i == L - 1 and j == L - 1:
            if acc < best[0]:
                best[0] = acc
            return
        if i + 1 < L:
            walk(i + 1, j, acc)
        if j + 1 < L:
            walk(i, j + 1, acc)
        if i + 1 < L and j + 1 < L:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return math.sqrt(best[0])


def fd_gradient(loss_fn, arr, coords, h=1e-4):
    """Central finite differences of loss_fn with respect to arr[coord]."""
    grads = {}
    for c in coords:
        orig = arr[c]
        arr[c] = orig + h
        fp = loss_fn()
        arr[c] = orig - h
        fm = loss_fn()
        arr[c] = orig
        grads[c] = (fp - fm) / (2 * h)
    return grads


def activation_signature(model):
    """Bit pattern of every ReLU decision from the model's last forward pass."""
    parts = []
    for blk in model.blocks:
        parts += [blk._m1, blk._m2, blk._mo]
    parts += list(getattr(model, "_gcn_masks", []))
    return b"".join(np.packbits(p.ravel()).tobytes() for p in parts)


def fd_gradient_smooth(eval_fn, arr, n_coords, rng, h=1e-4):
    """Central differences restricted to coordinates where the secant does not
    cross a ReLU kink (activation pattern identical at theta+h and theta-h).

    eval_fn() -> (loss, activation signature).  Kink-crossing coordinates are
    resampled, so the requested number of honest comparisons is returned.
    """
    grads = {}
    order = rng.permutation(arr.size)
    for flat in order:
        if len(grads) >= n_coords:
            break
        c = np.unravel_index(int(flat), arr.shape)
        orig = arr[c]
        arr[c] = orig + h
        fp, sig_p = eval_fn()
        arr[c] = orig - h
        fm, sig_m = eval_fn()
        arr[c] = orig
        if sig_p != sig_m:
            continue
        grads[c] = (fp - fm) / (2 * h)
    return grads


def sample_coords(arr, n, rng):
    flat = arr.size
    take = min(n, flat)
    picks = rng.choice(flat, size=take, replace=False)
    return [np.unravel_index(int(p), arr.shape) for p in picks]


def midranks_naive(values):
    values = np.asarray(values, dtype=float)
    out = np.empty(len(values))
    for i, v in enumerate(values):
        less = np.sum(values < v)
        equal = np.sum(values == v)
        out[i] = less + (equal + 1) / 2.0
    return out


def wilcoxon_bruteforce(diffs, side):
    """Exact p by enumerating all 2^n sign assignments over the midranks."""
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0.0]
    ranks = midranks_naive(np.abs(d))
    w_obs = ranks[d > 0].sum()
    n = len(d)
    ws = np.array(
        [sum(r for r, s in zip(ranks, signs) if s) for signs in itertools.product([0, 1], repeat=n)]
    )
    p_ge = np.mean(ws >= w_obs - 1e-12)
    p_le = np.mean(ws <= w_obs + 1e-12)
    if side == "one_sided_b_greater":
        return float(p_ge)
    return float(min(1.0, 2.0 * min(p_ge, p_le)))
