"""Random valid models for property tests and sweeps."""

from __future__ import annotations

import numpy as np

from .model import ModelSpec, SirPhSpec, embed


def _log_uniform(rng, lo, hi) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def random_subgenerator(rng, n: int, coxian: bool | None = None):
    """``(A, exits)`` with ``A`` a sub-generator whose exit rates
    ``exits = -A 1`` are all positive (so ``-A`` is a nonsingular M-matrix)."""
    if coxian is None:
        coxian = bool(rng.integers(2))
    exits = rng.uniform(0.05, 1.0, n)
    off = np.zeros((n, n))
    if coxian:
        for k in range(n - 1):
            off[k, k + 1] = rng.uniform(0.1, 2.0)
    else:
        off = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < 0.6)
        np.fill_diagonal(off, 0.0)
    A = off - np.diag(off.sum(axis=1) + exits)
    return A, exits


def random_demography(rng):
    lam = rng.uniform(0.01, 0.3)
    return lam, lam


def random_sirph(rng, n: int | None = None, nu_r: float | None = None,
                 r0_range=(0.2, 5.0), coxian: bool | None = None) -> SirPhSpec:
    """Random valid SIR-PH model; ``b`` is scaled so that ``s_dfe R`` is
    log-uniform in ``r0_range`` (exactly when ``nu_r = 0``)."""
    if n is None:
        n = int(rng.integers(1, 6))
    A, _ = random_subgenerator(rng, n, coxian)
    alpha = rng.dirichlet(np.ones(n))
    nu = rng.uniform(0.0, 0.5, n) * (rng.random(n) < 0.7)
    lam, mu = random_demography(rng)
    gamma_s = rng.uniform(0.0, 0.5)
    gamma_r = rng.uniform(0.0, 0.5)
    if nu_r is None:
        nu_r = 0.0 if rng.random() < 0.5 else rng.uniform(1e-3, 0.05)
    b = rng.uniform(0.1, 1.0, n)
    V = np.diag(nu + lam) - A
    R = float(alpha @ np.linalg.solve(V, b))
    s_dfe = (lam + gamma_r) / (lam + gamma_r + gamma_s)
    target = _log_uniform(rng, *r0_range)
    b = b * target / (s_dfe * R)
    return SirPhSpec(alpha=alpha, A=A, b=b, nu=nu, nu_r=nu_r, gamma_s=gamma_s,
                     gamma_r=gamma_r, lam=lam, mu=mu)


def random_rank_one_model(rng, **kw) -> ModelSpec:
    return embed(random_sirph(rng, **kw))


def random_model(rng, n: int | None = None, p: int | None = None, nu_r_zero: bool = False,
                 r0_range=(0.2, 5.0)) -> ModelSpec:
    """Random valid general model with dense ``B`` and ``p`` removed classes.

    ``B`` is scaled so that ``rho(s_dfe B V^{-1})`` (ignoring the ``nu_r``
    term) is log-uniform in ``r0_range``.
    """
    if n is None:
        n = int(rng.integers(1, 5))
    if p is None:
        p = int(rng.integers(1, 4))
    A, exits = random_subgenerator(rng, n)
    W = exits[:, None] * rng.dirichlet(np.ones(p), size=n)
    # recompute the diagonal so that [A W] rows sum to zero in floating point
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -(A.sum(axis=1) + W.sum(axis=1)))
    lam, mu = random_demography(rng)
    nu = rng.uniform(0.0, 0.5, n) * (rng.random(n) < 0.7)
    nu_r = np.zeros(p) if nu_r_zero else rng.uniform(0.0, 0.05, p) * (rng.random(p) < 0.5)
    gamma_s = rng.uniform(0.0, 0.3, p) * (rng.random(p) < 0.8)
    gamma_r = rng.uniform(0.0, 0.5, p)
    B = rng.uniform(0.0, 1.0, (n, n))
    model = ModelSpec(n=n, p=p, lam=lam, mu=mu, A=A, B=B, W=W, nu=nu, nu_r=nu_r,
                      gamma_s=gamma_s, gamma_r=gamma_r)
    from .equilibria import disease_free_state
    from .linalg import spectral_radius

    s = disease_free_state(model, "sm").s
    rho = spectral_radius(s * B @ np.linalg.inv(model.transition_matrix()))
    return model.replace(B=B * _log_uniform(rng, *r0_range) / rho)


def random_simplex_point(rng, dim: int, interior: bool = True) -> np.ndarray:
    x = rng.dirichlet(np.ones(dim))
    if interior:
        x = 0.98 * x + 0.02 / dim
    return x
