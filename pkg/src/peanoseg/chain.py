"""Exact inference on finite chains given per-step nonnegative potentials.

A chain over M states and N sites is specified, up to a global constant,
by N-1 nonnegative M x M matrices whose product over any state path is
proportional to the path's probability.  The backward sweep turns the
stack into an explicit Markov representation (initial law, row-stochastic
transitions, per-site marginals); sampling and marginal-mode decoding then
operate on that representation.  The global normalizing constant is never
materialized: every backward vector is rescaled to max entry 1 and the
removed factors are only tracked as accumulated exponents, which leaves
all the ratios the representation is made of unchanged.

The sequential sweeps run in the compiled kernel when it is available
(see peanoseg._backend).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend


class DegenerateChain(ValueError):
    """A backward vector vanished: the potentials admit no positive path."""


@dataclass(frozen=True)
class PotentialChain:
    """Stack of N-1 nonnegative M x M step potentials."""

    potentials: np.ndarray

    def __post_init__(self):
        pots = np.ascontiguousarray(np.asarray(self.potentials, dtype=np.float64))
        if pots.ndim != 3 or pots.shape[1] != pots.shape[2]:
            raise ValueError("potentials must have shape (N-1, M, M)")
        if pots.shape[0] < 1 or pots.shape[1] < 1:
            raise ValueError("a chain needs at least two sites and one state")
        if not np.all(np.isfinite(pots)) or np.any(pots < 0.0):
            raise ValueError("potentials must be finite and nonnegative")
        if np.any(pots.max(axis=(1, 2)) <= 0.0):
            raise DegenerateChain("a step potential is identically zero")
        object.__setattr__(self, "potentials", pots)

    @property
    def n_sites(self) -> int:
        return self.potentials.shape[0] + 1

    @property
    def n_states(self) -> int:
        return self.potentials.shape[1]


@dataclass(frozen=True)
class PosteriorChain:
    """Markov representation of a normalized potential chain.

    ``initial`` is the law of the first site, ``transitions[n]`` the
    row-stochastic step matrix from site n to n+1 (rows of states carrying
    zero probability are uniform by convention), ``marginals[n]`` the law
    of site n, and ``log_scale`` the accumulated backward rescaling
    exponents (bookkeeping for the unmaterialized constant).
    """

    initial: np.ndarray
    transitions: np.ndarray
    marginals: np.ndarray
    log_scale: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.marginals.shape[0]

    @property
    def n_states(self) -> int:
        return self.marginals.shape[1]


def backward_pass(chain: PotentialChain) -> tuple[np.ndarray, np.ndarray]:
    """Backward vectors of every site, rescaled to max entry 1.

    Returns (beta, log_scale): beta[n] is proportional to the summed
    potential products over all path suffixes starting in each state of
    site n; log_scale[n] accumulates the logs of the removed factors.
    """
    beta, log_scale, bad = _backend.kernels.backward_sweep(chain.potentials)
    if bad >= 0:
        raise DegenerateChain(f"backward vector vanished at site {bad + 1}")
    return beta, log_scale


def chain_from_potentials(chain: PotentialChain) -> PosteriorChain:
    """Explicit Markov representation of the normalized chain."""
    beta, log_scale = backward_pass(chain)
    m = chain.n_states
    initial = beta[0] / beta[0].sum()
    numer = chain.potentials * beta[1:, None, :]
    row = numer.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        trans = np.where(row > 0.0, numer / np.where(row > 0.0, row, 1.0), 1.0 / m)
    trans = np.ascontiguousarray(trans)
    marginals = _backend.kernels.forward_sweep(initial, trans)
    return PosteriorChain(initial=initial, transitions=trans,
                          marginals=marginals, log_scale=log_scale)


def sample_path(posterior: PosteriorChain, rng) -> np.ndarray:
    """Draw one state path; deterministic given the seed.

    ``rng`` is a numpy Generator or anything np.random.default_rng accepts.
    """
    rng = np.random.default_rng(rng)
    uniforms = rng.random(posterior.n_sites)
    return _backend.kernels.sample_sweep(posterior.initial, posterior.transitions, uniforms)


def mpm_decode(marginals) -> np.ndarray:
    """Per-site argmax states (0-based); ties go to the smallest index."""
    return np.argmax(np.asarray(marginals), axis=-1)
