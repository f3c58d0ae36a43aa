"""Synthetic data from known generating models.

All samplers are pure functions of (parameters, n, seed); randomness comes
from :func:`netpred.rng.make_rng`.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from netpred.data import CATEGORICAL, CONTINUOUS, Dataset, VariableSpec
from netpred.rng import make_rng


class ModelError(ValueError):
    """Invalid generating-model parameters."""


def _names(p, names):
    return list(names) if names is not None else [f"X{j + 1}" for j in range(p)]


def _spd(precision) -> np.ndarray:
    theta = np.asarray(precision, dtype=float)
    theta = np.atleast_2d(theta)
    if theta.shape[0] != theta.shape[1] or not np.allclose(theta, theta.T):
        raise ModelError("precision matrix must be square and symmetric")
    try:
        np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        raise ModelError("precision matrix is not positive definite") from None
    return theta


def chain_precision(p: int, partial_corr: float) -> np.ndarray:
    """Unit-diagonal tridiagonal precision whose neighbors have the given partial correlation."""
    theta = np.eye(p)
    i = np.arange(p - 1)
    theta[i, i + 1] = theta[i + 1, i] = -partial_corr
    return theta


def partial_correlations(precision) -> np.ndarray:
    theta = _spd(precision)
    s = np.sqrt(np.diag(theta))
    pc = -theta / np.outer(s, s)
    np.fill_diagonal(pc, 1.0)
    return pc


def sample_ggm(precision, n: int, seed: int = 0, names: Optional[Sequence[str]] = None) -> Dataset:
    """``n`` draws from the zero-mean Gaussian with the given precision matrix."""
    theta = _spd(precision)
    cov = np.linalg.inv(theta)
    L = np.linalg.cholesky((cov + cov.T) / 2)
    z = make_rng(seed).standard_normal((n, theta.shape[0]))
    spec = [VariableSpec(nm, CONTINUOUS) for nm in _names(theta.shape[0], names)]
    return Dataset(spec, z @ L.T)


def population_r2(precision) -> np.ndarray:
    """Explained variance of each node given all others under a Gaussian model."""
    theta = _spd(precision)
    cov = np.linalg.inv(theta)
    return 1.0 - (1.0 / np.diag(theta)) / np.diag(cov)


def ising_energy_terms(weights, thresholds):
    w = np.asarray(weights, dtype=float)
    th = np.asarray(thresholds, dtype=float)
    p = len(th)
    if w.shape != (p, p) or not np.allclose(w, w.T):
        raise ModelError("weights must be a symmetric p x p matrix")
    if np.any(np.diag(w) != 0):
        raise ModelError("weights must have a zero diagonal")
    return w, th


def sample_ising_gibbs(weights, thresholds, n: int, burn_in: int = 1000, thin: int = 10,
                       seed: int = 0, names: Optional[Sequence[str]] = None) -> Dataset:
    """Gibbs sampler for the binary pairwise model
    ``P(x) ~ exp(sum_i t_i x_i + sum_{i<j} w_ij x_i x_j)``, ``x_i in {0, 1}``.

    One sweep updates every variable in order from its full conditional
    ``P(x_i = 1 | rest) = logistic(t_i + sum_j w_ij x_j)``. After ``burn_in``
    sweeps every ``thin``-th sweep is recorded. States 0/1 are returned as
    category codes 1/2.
    """
    w, th = ising_energy_terms(weights, thresholds)
    p = len(th)
    rng = make_rng(seed)
    x = (rng.random(p) < 0.5).astype(float)
    out = np.empty((n, p))
    total = burn_in + n * thin
    chunk = 1024
    done = 0
    while done < total:
        m = min(chunk, total - done)
        u = rng.random((m, p))
        for s in range(m):
            for i in range(p):
                field = th[i] + w[i] @ x
                x[i] = 1.0 if u[s, i] < 1.0 / (1.0 + np.exp(-field)) else 0.0
            step = done + s + 1 - burn_in
            if step > 0 and step % thin == 0:
                out[step // thin - 1] = x
        done += m
    spec = [VariableSpec(nm, CATEGORICAL, 2) for nm in _names(p, names)]
    return Dataset(spec, out + 1.0)


def simulate_var(coefficients, noise_sds, n: int, seed: int = 0, burn_in: int = 500,
                 names: Optional[Sequence[str]] = None) -> Dataset:
    """Simulate ``x_t = B x_{t-1} + e_t`` with independent Gaussian noise."""
    B = np.atleast_2d(np.asarray(coefficients, dtype=float))
    sds = np.broadcast_to(np.asarray(noise_sds, dtype=float), (B.shape[0],))
    if B.shape[0] != B.shape[1]:
        raise ModelError("coefficient matrix must be square")
    rho = np.max(np.abs(np.linalg.eigvals(B)))
    if rho >= 1:
        raise ModelError(f"unstable VAR: spectral radius {rho:.3f} >= 1")
    p = B.shape[0]
    eps = make_rng(seed).standard_normal((burn_in + n, p)) * sds
    x = np.zeros(p)
    out = np.empty((n, p))
    for t in range(burn_in + n):
        x = B @ x + eps[t]
        if t >= burn_in:
            out[t - burn_in] = x
    spec = [VariableSpec(nm, CONTINUOUS) for nm in _names(p, names)]
    return Dataset(spec, out)


def random_stable_var(p: int, spectral_radius: float, density: float = 0.4, seed: int = 0) -> np.ndarray:
    """Sparse random coefficient matrix rescaled to the given spectral radius."""
    rng = make_rng(seed)
    B = rng.uniform(0.2, 1.0, (p, p)) * rng.choice([-1.0, 1.0], (p, p))
    mask = rng.random((p, p)) < density
    np.fill_diagonal(mask, True)
    B = B * mask
    return B * (spectral_radius / np.max(np.abs(np.linalg.eigvals(B))))
