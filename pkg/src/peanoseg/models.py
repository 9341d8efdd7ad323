"""Segmentation models over the scan, expressed as potential chains.

Three models share Gaussian per-class emissions and orientation-specific
joint transition matrices:

* the plain hidden chain on the scan, each site contributing its own
  emission density only;
* the contextual hidden chain, where each site's emission is further
  multiplied by one mixture density per off-scan neighbor (the mixture
  weights being the transition conditional of the neighbor's orientation);
* the evidential contextual chain, whose hidden state couples the class
  with a hypothesis ranging over the class singletons plus the full class
  set, the contextual mixtures then being driven by the hypothesis alone.

All builders take observations in scan order and return a PotentialChain
for the chain engine.  Emissions are assembled in log space and rescaled
to max 0 per site before exponentiation, which changes every potential by
a positive per-site factor only and therefore leaves the normalized chain
untouched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import DegenerateChain, PotentialChain
from .scan import HORIZONTAL, VERTICAL, ContextMap, ScanLayout

VARIANCE_FLOOR = 1e-6
_SUM_TOL = 1e-12


class ZeroRow(ValueError):
    """A transition row needed in normalized form has zero mass."""


def _as_float(params, names):
    for name in names:
        object.__setattr__(params, name, np.asarray(getattr(params, name), dtype=np.float64))


def _check_emissions(means, variances):
    if means.shape != variances.shape or means.ndim != 1:
        raise ValueError("means and variances must be matching vectors")
    if np.any(variances < VARIANCE_FLOOR * (1.0 - 1e-9)):
        raise ValueError(f"variances must be >= {VARIANCE_FLOOR}")


def _check_joint(joint, size, name):
    if joint.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}")
    if np.any(joint < 0.0) or abs(joint.sum() - 1.0) > _SUM_TOL:
        raise ValueError(f"{name} must be nonnegative and sum to 1")


@dataclass(frozen=True)
class HmcParams:
    """K-class chain parameters.

    joint_h[i, j] (resp. joint_v) is the joint probability of classes
    (i, j) on a horizontally (vertically) oriented scan step; means and
    variances define the per-class Gaussian emissions.
    """

    joint_h: np.ndarray
    joint_v: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        _as_float(self, ("joint_h", "joint_v", "means", "variances"))
        _check_emissions(self.means, self.variances)
        k = self.means.size
        _check_joint(self.joint_h, k, "joint_h")
        _check_joint(self.joint_v, k, "joint_v")

    @property
    def n_classes(self) -> int:
        return self.means.size


@dataclass(frozen=True)
class EvidentialParams:
    """Evidential chain parameters.

    The joints live on the hypothesis alphabet: indices 0..K-1 are the
    class singletons, index K the full class set.  Emissions are per class,
    exactly as in HmcParams.
    """

    joint_h: np.ndarray
    joint_v: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        _as_float(self, ("joint_h", "joint_v", "means", "variances"))
        _check_emissions(self.means, self.variances)
        k = self.means.size
        _check_joint(self.joint_h, k + 1, "joint_h")
        _check_joint(self.joint_v, k + 1, "joint_v")

    @property
    def n_classes(self) -> int:
        return self.means.size

    @property
    def n_hypotheses(self) -> int:
        return self.means.size + 1


@dataclass(frozen=True)
class EvidentialStateSpace:
    """Compound states (class, hypothesis) with class-given-hypothesis weights.

    The 2K states come singletons first: (i, {i}) for each class i, then
    (i, full set).  ``weight`` is the conditional probability of the class
    given the hypothesis, i.e. 1 on a singleton and 1/K on the full set.
    """

    n_classes: int
    class_of: np.ndarray
    hyp_of: np.ndarray
    weight: np.ndarray

    @property
    def n_states(self) -> int:
        return 2 * self.n_classes

    @property
    def omega(self) -> int:
        """Hypothesis index of the full class set."""
        return self.n_classes


def evidential_states(n_classes: int) -> EvidentialStateSpace:
    """Canonical compound state space for K classes."""
    if n_classes < 1:
        raise ValueError("need at least one class")
    k = n_classes
    class_of = np.concatenate([np.arange(k), np.arange(k)])
    hyp_of = np.concatenate([np.arange(k), np.full(k, k)])
    weight = np.concatenate([np.ones(k), np.full(k, 1.0 / k)])
    return EvidentialStateSpace(n_classes=k, class_of=class_of,
                                hyp_of=hyp_of, weight=weight)


# ---------------------------------------------------------------------------
# emission helpers

def _log_gauss(obs: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Log Gaussian density table: one row per observation, one column per class."""
    d = obs[:, None] - means[None, :]
    v = variances[None, :]
    return -0.5 * (np.log(2.0 * np.pi * v) + d * d / v)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.exp(a - safe).sum(axis=axis))
    return out + np.squeeze(safe, axis=axis)


def _row_normalize(joint: np.ndarray, allow_zero: bool = False) -> np.ndarray:
    """Row-normalized copy of a joint matrix.

    With allow_zero, rows without mass come back as zero rows (hypotheses
    that are never entered keep zero conditionals); otherwise any zero row
    raises ZeroRow.
    """
    sums = joint.sum(axis=1)
    zero = sums <= 0.0
    if np.any(zero) and not allow_zero:
        raise ZeroRow(f"joint matrix row {int(np.flatnonzero(zero)[0])} has zero mass")
    return np.where(zero[:, None], 0.0, joint / np.where(zero, 1.0, sums)[:, None])


def gaussian_density(y: float, i: int, params) -> float:
    """Gaussian emission density of class i (0-based) at observation y."""
    m = params.means[i]
    v = params.variances[i]
    return float(np.exp(-0.5 * (y - m) ** 2 / v) / np.sqrt(2.0 * np.pi * v))


def contextual_likelihood(y: float, orient: int, i: int, params: HmcParams) -> float:
    """Mixture density of an off-scan neighbor observation given class i.

    The weights are row i of the orientation's transition conditional (the
    row-normalized joint), the components the class Gaussians; raises
    ZeroRow when the row carries no mass.
    """
    joint = params.joint_h if orient == HORIZONTAL else params.joint_v
    row = joint[i]
    total = row.sum()
    if total <= 0.0:
        raise ZeroRow(f"joint matrix row {i} has zero mass")
    dens = np.exp(_log_gauss(np.array([float(y)]), params.means, params.variances))[0]
    return float(row @ dens / total)


def site_emission_cps(rank: int, observations, context: ContextMap, i: int,
                      params: HmcParams) -> float:
    """Contextual emission factor at a scan point (1-based rank).

    The point's own density times one contextual mixture per off-scan
    neighbor; observations are in scan order.
    """
    obs = np.asarray(observations, dtype=np.float64)
    out = gaussian_density(float(obs[rank - 1]), i, params)
    sel = context.site == rank - 1
    for extra, orient in zip(context.extra_rank[sel], context.orient[sel]):
        out *= contextual_likelihood(float(obs[extra]), int(orient), i, params)
    return out


# ---------------------------------------------------------------------------
# potential-chain builders

def _check_observations(obs: np.ndarray, layout: ScanLayout):
    if obs.ndim != 1 or obs.size != layout.n_sites:
        raise ValueError("observations must be a scan-ordered vector of length N")
    if layout.n_sites < 2:
        raise ValueError("chain models need a grid of order k >= 1")


def _emission_weights(log_emit: np.ndarray) -> np.ndarray:
    """Per-site rescale of log emissions to max 0, exponentiated."""
    return np.exp(log_emit - log_emit.max(axis=1, keepdims=True))


def _assemble(joint0: np.ndarray, cond: np.ndarray, step_orient: np.ndarray,
              emit: np.ndarray) -> PotentialChain:
    """Stack the potentials: the first step carries the joint and both of
    its endpoint emissions, every later step the orientation's conditional
    times the arrival-site emission."""
    nsteps = step_orient.size
    m = emit.shape[1]
    phi = np.empty((nsteps, m, m))
    phi[0] = joint0 * emit[0][:, None] * emit[1][None, :]
    if nsteps > 1:
        phi[1:] = cond[step_orient[1:]] * emit[2:, None, :]
    return PotentialChain(phi)


def build_hmc_ps(params: HmcParams, observations, layout: ScanLayout) -> PotentialChain:
    """Potential chain of the plain scan model (own emissions only)."""
    obs = np.asarray(observations, dtype=np.float64)
    _check_observations(obs, layout)
    emit = _emission_weights(_log_gauss(obs, params.means, params.variances))
    joints = np.stack([params.joint_h, params.joint_v])
    cond = np.stack([_row_normalize(params.joint_h), _row_normalize(params.joint_v)])
    return _assemble(joints[layout.step_orient[0]], cond, layout.step_orient, emit)


def build_hmc_cps(params: HmcParams, observations, layout: ScanLayout,
                  context: ContextMap) -> PotentialChain:
    """Potential chain of the contextual scan model.

    Each site's log emission picks up one mixture term per extra in the
    context map; sites without extras degrade to the plain emission.
    """
    obs = np.asarray(observations, dtype=np.float64)
    _check_observations(obs, layout)
    logg = _log_gauss(obs, params.means, params.variances)
    cond = np.stack([_row_normalize(params.joint_h), _row_normalize(params.joint_v)])
    with np.errstate(divide="ignore"):
        logcond = np.log(cond)
    log_emit = logg.copy()
    for orient in (HORIZONTAL, VERTICAL):
        sel = context.orient == orient
        if not np.any(sel):
            continue
        src = context.extra_rank[sel]
        contrib = _logsumexp(logcond[orient][None, :, :] + logg[src][:, None, :], axis=2)
        np.add.at(log_emit, context.site[sel], contrib)
    emit = _emission_weights(log_emit)
    joints = np.stack([params.joint_h, params.joint_v])
    return _assemble(joints[layout.step_orient[0]], cond, layout.step_orient, emit)


def build_hemc_cps(params: EvidentialParams, observations, layout: ScanLayout,
                   context: ContextMap) -> PotentialChain:
    """Potential chain of the evidential contextual model (2K compound states).

    Transitions factor as hypothesis conditional times class-given-
    hypothesis weight; the own emission depends on the class alone, while
    the contextual mixtures depend on the hypothesis alone (averaging the
    class densities uniformly under the full set).  Joint rows without
    mass keep zero conditionals: the corresponding hypotheses are simply
    never entered, so dropping all full-set mass degrades the model to the
    K-class contextual chain.
    """
    obs = np.asarray(observations, dtype=np.float64)
    _check_observations(obs, layout)
    k = params.n_classes
    space = evidential_states(k)
    logg = _log_gauss(obs, params.means, params.variances)
    cond = np.stack([_row_normalize(params.joint_h, allow_zero=True),
                     _row_normalize(params.joint_v, allow_zero=True)])
    with np.errstate(divide="ignore"):
        logcond = np.log(cond)
    # per-hypothesis density: the class density on a singleton, the uniform
    # average of the class densities on the full set
    logg_hyp = np.concatenate(
        [logg, (_logsumexp(logg, axis=1) - np.log(k))[:, None]], axis=1)
    log_ctx = np.zeros((obs.size, k + 1))
    for orient in (HORIZONTAL, VERTICAL):
        sel = context.orient == orient
        if not np.any(sel):
            continue
        src = context.extra_rank[sel]
        contrib = _logsumexp(logcond[orient][None, :, :] + logg_hyp[src][:, None, :], axis=2)
        np.add.at(log_ctx, context.site[sel], contrib)
    log_emit = logg[:, space.class_of] + log_ctx[:, space.hyp_of]
    emit = _emission_weights(log_emit)
    hz = space.hyp_of
    cond_z = cond[:, hz[:, None], hz[None, :]] * space.weight[None, None, :]
    joints = np.stack([params.joint_h, params.joint_v])
    joint0 = (joints[layout.step_orient[0]][hz[:, None], hz[None, :]]
              * space.weight[:, None] * space.weight[None, :])
    return _assemble(joint0, cond_z, layout.step_orient, emit)


def marginalize_evidential(compound_marginals, space: EvidentialStateSpace) -> np.ndarray:
    """Class marginals from compound-state marginals.

    Sums the singleton and full-set blocks classwise, then renormalizes;
    accepts one marginal vector or a stack of them.
    """
    cm = np.asarray(compound_marginals, dtype=np.float64)
    k = space.n_classes
    out = cm[..., :k] + cm[..., k:]
    return out / out.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# evidential prior chain from a belief assignment

@dataclass(frozen=True)
class Bba:
    """Belief assignment on the singleton-plus-full-set hypothesis alphabet.

    ``init`` is the mass of the first hypothesis, ``trans[k, l]`` the
    conditional mass of hypothesis l after hypothesis k; rows are
    probability vectors (no mass outside the restricted alphabet).
    """

    init: np.ndarray
    trans: np.ndarray

    def __post_init__(self):
        _as_float(self, ("init", "trans"))
        L = self.init.size
        if self.trans.shape != (L, L):
            raise ValueError("trans must be square and match init")
        if np.any(self.init < 0.0) or abs(self.init.sum() - 1.0) > _SUM_TOL:
            raise ValueError("init must be a probability vector")
        if np.any(self.trans < 0.0) or np.any(np.abs(self.trans.sum(axis=1) - 1.0) > _SUM_TOL):
            raise ValueError("trans rows must be probability vectors")

    @property
    def n_classes(self) -> int:
        return self.init.size - 1


@dataclass(frozen=True)
class EmcChain:
    """Markov form of the evidential prior chain built from a belief
    assignment.

    ``initial_xu[x, u]`` is the joint law of the first class and
    hypothesis; ``transitions_u[n][u, u']`` the hypothesis transition of
    step n.  The class given the hypothesis is uniform on its members at
    every site, so the compound transition is
    transitions_u[n][u, u'] * 1[x' in u'] / |u'|.
    """

    initial_xu: np.ndarray
    transitions_u: np.ndarray


def emc_from_bba(bba: Bba, n_classes: int, n_sites: int) -> EmcChain:
    """Normalize the indicator-weighted belief product into Markov form.

    Runs the hypothesis-level backward recursion with cardinality-weighted
    mass matrices, then reads off the initial law and the per-step
    hypothesis transitions.
    """
    if n_sites < 2:
        raise ValueError("need at least two sites")
    if bba.n_classes != n_classes:
        raise ValueError("belief assignment does not match the class count")
    k = n_classes
    sizes = np.concatenate([np.ones(k), [float(k)]])
    weighted = bba.trans * sizes[None, :]
    bstar = np.empty((n_sites, k + 1))
    bstar[-1] = 1.0
    for n in range(n_sites - 2, -1, -1):
        v = weighted @ bstar[n + 1]
        c = v.max()
        if not c > 0.0:
            raise DegenerateChain("hypothesis backward vector vanished")
        bstar[n] = v / c
    numer = weighted[None, :, :] * bstar[1:, None, :]
    rows = numer.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        trans_u = np.where(rows > 0.0, numer / np.where(rows > 0.0, rows, 1.0),
                           1.0 / (k + 1))
    init_u = sizes * bba.init * bstar[0]
    total = init_u.sum()
    if not total > 0.0:
        raise DegenerateChain("initial hypothesis law vanished")
    init_u /= total
    initial_xu = np.zeros((k, k + 1))
    initial_xu[np.arange(k), np.arange(k)] = init_u[:k]
    initial_xu[:, k] = init_u[k] / k
    return EmcChain(initial_xu=initial_xu, transitions_u=np.ascontiguousarray(trans_u))
