"""Pure-numpy chain sweeps; fallback twin of the compiled _kernels module.

Same contracts as _kernels.pyx: backward_sweep returns the degenerate step
index (or -1) instead of raising, forward_sweep renormalizes each marginal,
and sample_sweep inverts the cumulative rows against pre-drawn uniforms so
both backends walk identical paths.
"""

import numpy as np

DEGENERATE_FLOOR = 1e-300


def backward_sweep(phi):
    """Max-rescaled backward recursion over the potential stack.

    Returns (beta, log_scale, bad) where beta[n] is the backward vector of
    site n rescaled to max entry 1, log_scale[n] the accumulated log of the
    removed factors, and bad the first site whose vector vanished (-1 if
    none did).
    """
    phi = np.asarray(phi, dtype=np.float64)
    nsteps, m = phi.shape[0], phi.shape[1]
    beta = np.empty((nsteps + 1, m))
    log_scale = np.empty(nsteps + 1)
    beta[nsteps] = 1.0
    log_scale[nsteps] = 0.0
    for n in range(nsteps - 1, -1, -1):
        v = phi[n] @ beta[n + 1]
        c = v.max()
        if not c > DEGENERATE_FLOOR:
            return beta, log_scale, n
        beta[n] = v / c
        log_scale[n] = log_scale[n + 1] + np.log(c)
    return beta, log_scale, -1


def forward_sweep(initial, trans):
    """Forward marginal recursion, renormalizing at every site."""
    trans = np.asarray(trans, dtype=np.float64)
    nsteps = trans.shape[0]
    marg = np.empty((nsteps + 1, trans.shape[1]))
    marg[0] = initial / np.sum(initial)
    for n in range(nsteps):
        v = marg[n] @ trans[n]
        marg[n + 1] = v / v.sum()
    return marg


def sample_sweep(initial, trans, uniforms):
    """Walk the chain, inverting each row's cumulative sums at a uniform."""
    trans = np.asarray(trans, dtype=np.float64)
    nsteps = trans.shape[0]
    path = np.empty(nsteps + 1, dtype=np.int64)
    path[0] = _invert(initial, uniforms[0])
    for n in range(nsteps):
        path[n + 1] = _invert(trans[n, path[n]], uniforms[n + 1])
    return path


def _invert(probs, u):
    cdf = np.cumsum(probs)
    j = int(np.searchsorted(cdf, u, side="right"))
    return min(j, probs.size - 1)
