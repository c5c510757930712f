"""Grid transfer and the error norms used to compare estimators."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError


def restrict(field: np.ndarray, n_target: int) -> np.ndarray:
    """Conservative block averaging onto a coarser nested grid."""
    n = field.shape[-1]
    if n == n_target:
        return field
    if n % n_target:
        raise ConfigError(f"cannot restrict {n} cells onto {n_target}")
    factor = n // n_target
    return field.reshape(*field.shape[:-1], n_target, factor).mean(axis=-1)


def prolong(field: np.ndarray, n_target: int) -> np.ndarray:
    """Piecewise-constant injection onto a finer nested grid."""
    n = field.shape[-1]
    if n == n_target:
        return field
    if n_target % n:
        raise ConfigError(f"cannot prolong {n} cells onto {n_target}")
    return np.repeat(field, n_target // n, axis=-1)


def l2_norm(field: np.ndarray, domain_length: float = 1.0) -> float:
    dx = domain_length / field.shape[-1]
    return float(np.sqrt(np.sum(field**2) * dx))


def err_global(runs, ref: np.ndarray, domain_length: float = 1.0) -> float:
    """RMS-over-runs of the spatial L2 distance to the reference.

    The reference is restricted onto each run's grid by conservative
    averaging before differencing.
    """
    runs = [np.asarray(r) for r in runs]
    acc = 0.0
    for r in runs:
        d = r - restrict(ref, r.shape[-1])
        acc += l2_norm(d, domain_length) ** 2
    return float(np.sqrt(acc / len(runs)))


def err_pointwise(runs, ref: np.ndarray) -> np.ndarray:
    """Per-cell RMS deviation from the reference over the runs."""
    runs = [np.asarray(r) for r in runs]
    acc = np.zeros_like(runs[0])
    for r in runs:
        acc += (r - restrict(ref, r.shape[-1])) ** 2
    return np.sqrt(acc / len(runs))


def err_mean_l2(hi_fields, approx_fields, domain_length: float = 1.0) -> float:
    """Mean spatial L2 distance between paired high-fidelity and surrogate
    solutions on a held-out sample set."""
    if len(hi_fields) != len(approx_fields):
        raise ConfigError("held-out sets must pair up")
    tot = 0.0
    for h, a in zip(hi_fields, approx_fields):
        tot += l2_norm(np.asarray(h) - np.asarray(a), domain_length)
    return tot / len(hi_fields)
