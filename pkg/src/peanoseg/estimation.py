"""Unsupervised parameter estimation: scalar k-means start, stochastic EM.

The exact likelihood of the contextual models is only known up to a
constant, so classic EM is out; instead each iteration samples one label
path from the current conditional chain and refits the parameters by
counting on the sample.  All functions take observations in scan order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import chain_from_potentials, sample_path
from .models import (VARIANCE_FLOOR, EvidentialParams, HmcParams,
                     build_hemc_cps, build_hmc_cps, build_hmc_ps)
from .scan import HORIZONTAL, VERTICAL, ContextMap, ScanLayout


class InsufficientData(ValueError):
    """Too few distinct observation values for the requested class count."""


@dataclass
class SemConfig:
    """Stochastic-EM run settings.

    The run stops after max_iters steps or as soon as the largest absolute
    parameter change drops below tol.  approx_mode samples from the plain
    (context-free) chain instead of the contextual one, leaving the update
    equations untouched.
    """

    max_iters: int = 100
    tol: float = 1e-4
    seed: int = 0
    variance_floor: float = VARIANCE_FLOOR
    approx_mode: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol < 0.0:
            raise ValueError("tol must be >= 0")
        if self.variance_floor <= 0.0:
            raise ValueError("variance_floor must be positive")


# ---------------------------------------------------------------------------
# k-means initialization

def _lloyd_1d(values: np.ndarray, k: int) -> np.ndarray:
    """Labels of a quantile-seeded Lloyd iteration, classes by ascending center."""
    centers = np.quantile(values, np.arange(1, k + 1) / (k + 1))
    labels = None
    for _ in range(100):
        new_labels = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        for i in range(k):
            if not np.any(new_labels == i):
                # re-seed an emptied cluster at the worst-fit point
                far = np.argmax(np.abs(values - centers[new_labels]))
                new_labels[far] = i
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for i in range(k):
            sel = labels == i
            if np.any(sel):
                centers[i] = values[sel].mean()
    order = np.argsort(centers, kind="stable")
    remap = np.empty(k, dtype=np.int64)
    remap[order] = np.arange(k)
    return remap[labels]


def _pair_counts(labels: np.ndarray, layout: ScanLayout, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-orientation joint frequencies of consecutive scan labels."""
    code = labels[:-1] * k + labels[1:]
    out = []
    for orient in (HORIZONTAL, VERTICAL):
        sel = layout.step_orient == orient
        counts = np.bincount(code[sel], minlength=k * k).reshape(k, k)
        out.append(counts / sel.sum())
    return out[0], out[1]


def _moments(obs: np.ndarray, labels: np.ndarray, k: int, floor: float,
             prev_means=None, prev_variances=None):
    """Per-class mean/variance; empty classes keep their previous moments."""
    means = np.zeros(k) if prev_means is None else prev_means.copy()
    variances = np.full(k, floor) if prev_variances is None else prev_variances.copy()
    for i in range(k):
        sel = labels == i
        if np.any(sel):
            means[i] = obs[sel].mean()
            variances[i] = max(obs[sel].var(), floor)
    return means, variances


def kmeans_init(observations, n_classes: int, layout: ScanLayout, seed=None) -> HmcParams:
    """Initial chain parameters from a scalar clustering of the observations.

    Quantile-seeded Lloyd iteration on the values; emission moments per
    cluster, joints from the co-occurrence frequencies of the cluster
    labels over the scan steps of each orientation.  Deterministic (the
    seed is accepted for interface parity and unused).
    """
    obs = np.asarray(observations, dtype=np.float64)
    if np.unique(obs).size < n_classes:
        raise InsufficientData(
            f"need at least {n_classes} distinct observation values")
    labels = _lloyd_1d(obs, n_classes)
    means, variances = _moments(obs, labels, n_classes, VARIANCE_FLOOR)
    joint_h, joint_v = _pair_counts(labels, layout, n_classes)
    return HmcParams(joint_h=joint_h, joint_v=joint_v, means=means, variances=variances)


def kmeans_init_evidential(observations, n_classes: int, layout: ScanLayout,
                           seed=None, omega_mass: float = 0.1) -> EvidentialParams:
    """Evidential variant of kmeans_init.

    The singleton block carries the class co-occurrence joints scaled by
    1 - omega_mass; the remaining mass is spread uniformly over every
    entry involving the full class set.
    """
    base = kmeans_init(observations, n_classes, layout, seed)
    return EvidentialParams(joint_h=_embed_joint(base.joint_h, omega_mass),
                            joint_v=_embed_joint(base.joint_v, omega_mass),
                            means=base.means, variances=base.variances)


def _embed_joint(joint: np.ndarray, rho: float) -> np.ndarray:
    k = joint.shape[0]
    out = np.zeros((k + 1, k + 1))
    out[:k, :k] = (1.0 - rho) * joint
    if rho > 0.0:
        edge = rho / (2 * k + 1)
        out[k, :] = edge
        out[:k, k] = edge
    return out


# ---------------------------------------------------------------------------
# stochastic EM

def sem_step_hmc(params: HmcParams, observations, layout: ScanLayout,
                 context: ContextMap | None, rng, *,
                 variance_floor: float = VARIANCE_FLOOR) -> HmcParams:
    """One stochastic-EM step of the K-class model.

    Samples a label path from the conditional chain (contextual when a
    context map is given, plain otherwise), then refits the joints from
    the per-orientation pair counts and the emission moments from the
    sampled classes.  Empty classes and empty joint rows keep their
    previous values.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if context is not None:
        pots = build_hmc_cps(params, obs, layout, context)
    else:
        pots = build_hmc_ps(params, obs, layout)
    path = sample_path(chain_from_potentials(pots), rng)
    k = params.n_classes
    joint_h, joint_v = _pair_counts(path, layout, k)
    joint_h = _repair_rows(joint_h, params.joint_h)
    joint_v = _repair_rows(joint_v, params.joint_v)
    means, variances = _moments(obs, path, k, variance_floor,
                                params.means, params.variances)
    return HmcParams(joint_h=joint_h, joint_v=joint_v, means=means, variances=variances)


def sem_step_evidential(params: EvidentialParams, observations, layout: ScanLayout,
                        context: ContextMap, rng, *,
                        variance_floor: float = VARIANCE_FLOOR) -> EvidentialParams:
    """One stochastic-EM step of the evidential model.

    Samples a compound path, counts hypothesis pairs per orientation for
    the joints (each sampled site carries exactly one class, so the class
    sums collapse), and refits the emission moments from the sampled
    classes.
    """
    obs = np.asarray(observations, dtype=np.float64)
    pots = build_hemc_cps(params, obs, layout, context)
    zpath = sample_path(chain_from_potentials(pots), rng)
    k = params.n_classes
    x = zpath % k
    u = np.where(zpath < k, zpath, k)
    joint_h, joint_v = _pair_counts(u, layout, k + 1)
    joint_h = _repair_rows(joint_h, params.joint_h)
    joint_v = _repair_rows(joint_v, params.joint_v)
    means, variances = _moments(obs, x, k, variance_floor,
                                params.means, params.variances)
    return EvidentialParams(joint_h=joint_h, joint_v=joint_v,
                            means=means, variances=variances)


def _repair_rows(counts: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Zero count rows inherit the previous row; matrix renormalized."""
    zero = counts.sum(axis=1) == 0.0
    if np.any(zero):
        counts = counts.copy()
        counts[zero] = prev[zero]
        counts /= counts.sum()
    return counts


def sem_run(init_params, observations, layout: ScanLayout,
            context: ContextMap | None = None,
            config: SemConfig | None = None):
    """Iterate SEM from the given start; returns (params, trace).

    The trace holds one name-to-value dict per iterate, the start
    included.  With approx_mode the sampling chain drops the context
    (plain scan model; empty context map for the evidential model), while
    the returned parameters still belong to the contextual model.
    """
    config = config or SemConfig()
    obs = np.asarray(observations, dtype=np.float64)
    rng = np.random.default_rng(config.seed)
    evidential = isinstance(init_params, EvidentialParams)
    if evidential:
        step_context = context if context is not None else ContextMap.empty(layout)
        if config.approx_mode:
            step_context = ContextMap.empty(layout)
    else:
        step_context = None if config.approx_mode else context
    params = init_params
    trace = [param_values(params)]
    for _ in range(config.max_iters):
        if evidential:
            new = sem_step_evidential(params, obs, layout, step_context, rng,
                                      variance_floor=config.variance_floor)
        else:
            new = sem_step_hmc(params, obs, layout, step_context, rng,
                               variance_floor=config.variance_floor)
        delta = _max_change(params, new)
        params = new
        trace.append(param_values(params))
        if delta < config.tol:
            break
    return params, trace


def _flatten(params) -> np.ndarray:
    return np.concatenate([params.joint_h.ravel(), params.joint_v.ravel(),
                           params.means, params.variances])


def _max_change(old, new) -> float:
    return float(np.max(np.abs(_flatten(old) - _flatten(new))))


def param_values(params) -> dict[str, float]:
    """Flat name-to-value view of a parameter set (trace/CSV friendly)."""
    out: dict[str, float] = {}
    for name in ("joint_h", "joint_v"):
        mat = getattr(params, name)
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                out[f"{name}[{i},{j}]"] = float(mat[i, j])
    for i, v in enumerate(params.means):
        out[f"mean[{i}]"] = float(v)
    for i, v in enumerate(params.variances):
        out[f"var[{i}]"] = float(v)
    return out


def trace_to_csv(trace, path_or_file) -> None:
    """Write an iteration trace as CSV rows (iteration, parameter, value)."""
    import csv

    def _write(fh):
        writer = csv.writer(fh)
        writer.writerow(["iteration", "parameter", "value"])
        for it, values in enumerate(trace):
            for name, value in values.items():
                writer.writerow([it, name, repr(value)])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)
