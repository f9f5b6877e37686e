"""Right-hand sides of the scaled variants and of the unscaled system.

State vectors are laid out as ``x = (s, i_1..i_n, r_1..r_p)`` for the
scaled systems and ``y = (S, I_1..I_n, R_1..R_p, N, D, D_e)`` for the
unscaled one.

The scaled model (SM) is exact for any birth/death pair: the natural death
rate cancels when counts are divided by ``N``. The first approximation (FA)
is the classic constant-population system, written with the birth rate
``lam`` as inflow and ``mu`` as the natural death rate; it coincides with
the all-zero-flag member of the family when ``lam == mu``.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .model import ModelError, ModelSpec, ScaledState, UnscaledState


class Variant(Enum):
    """The three admissible flag combinations ``(phi_s, phi_i, phi_r)``."""

    SM = (1, 1, 1)
    FA = (0, 0, 0)
    IA = (1, 0, 1)

    @property
    def phi_s(self) -> int:
        return self.value[0]

    @property
    def phi_i(self) -> int:
        return self.value[1]

    @property
    def phi_r(self) -> int:
        return self.value[2]

    @classmethod
    def parse(cls, v) -> "Variant":
        if isinstance(v, Variant):
            return v
        if isinstance(v, str):
            try:
                return cls[v.upper()]
            except KeyError:
                pass
        else:
            flags = tuple(int(f) for f in v)
            for member in cls:
                if member.value == flags:
                    return member
        raise ValueError(f"unsupported variant {v!r}; expected one of sm, fa, ia "
                         "or flags (1,1,1), (0,0,0), (1,0,1)")

    def dilution(self, model: ModelSpec) -> float:
        """Per-capita outflow rate applied to every compartment."""
        return model.mu if self is Variant.FA else model.lam


VariantFlags = Variant


def _split(model: ModelSpec, x):
    x = np.asarray(x, dtype=float)
    n = model.n
    return x[0], x[1 : 1 + n], x[1 + n :]


def rhs_scaled(model: ModelSpec, variant, x) -> np.ndarray:
    """Time derivative of ``x = (s, i, r)`` under ``variant``.

    ``x`` may be a :class:`ScaledState` or a flat vector.
    """
    v = Variant.parse(variant)
    if isinstance(x, ScaledState):
        x = x.as_vector()
    s, i, r = _split(model, x)
    d = v.dilution(model)
    extra = i @ model.nu + r @ model.nu_r

    ds = (model.lam - (d + model.gamma_s_total) * s + r @ model.gamma_r
          - s * (i @ model.b) + v.phi_s * s * extra)
    di = i @ (s * model.B + model.A) - i * (model.nu + d) + v.phi_i * extra * i
    dr = (s * model.gamma_s + i @ model.W
          - r * (model.gamma_r + model.nu_r + d) + v.phi_r * extra * r)
    return np.concatenate(([ds], di, dr))


def jacobian_scaled(model: ModelSpec, variant, x) -> np.ndarray:
    """Analytic Jacobian ``J[k, l] = d f_k / d x_l`` of :func:`rhs_scaled`."""
    v = Variant.parse(variant)
    if isinstance(x, ScaledState):
        x = x.as_vector()
    s, i, r = _split(model, x)
    n, p = model.n, model.p
    d = v.dilution(model)
    nu, nu_r = model.nu, model.nu_r
    b = model.b
    extra = i @ nu + r @ nu_r

    J = np.empty((1 + n + p, 1 + n + p))
    si, sr = slice(1, 1 + n), slice(1 + n, 1 + n + p)

    J[0, 0] = -(d + model.gamma_s_total) - i @ b + v.phi_s * extra
    J[0, si] = -s * b + v.phi_s * s * nu
    J[0, sr] = model.gamma_r + v.phi_s * s * nu_r

    J[si, 0] = i @ model.B
    J[si, si] = (s * model.B + model.A - np.diag(nu + d)).T
    J[si, sr] = 0.0
    if v.phi_i:
        J[si, si] += np.outer(i, nu) + extra * np.eye(n)
        J[si, sr] = np.outer(i, nu_r)

    J[sr, 0] = model.gamma_s
    J[sr, si] = model.W.T
    J[sr, sr] = -np.diag(model.gamma_r + nu_r + d)
    if v.phi_r:
        J[sr, si] += np.outer(r, nu)
        J[sr, sr] += np.outer(r, nu_r) + extra * np.eye(p)
    return J


def simplex_tangent_basis(dim: int) -> np.ndarray:
    """Orthonormal basis (columns) of ``{dx : sum(dx) = 0}``."""
    Q, _ = np.linalg.qr(np.eye(dim) - 1.0 / dim)
    return Q[:, : dim - 1]


def removed_nullcline(model: ModelSpec, variant, s: float, i) -> np.ndarray:
    """The ``r`` solving ``r' = 0`` for given ``(s, i)``.

    With ``phi_r = 1`` the outflow depends on ``c = r.nu_r``; the smallest
    fixed point of the monotone map ``c -> sum(nu_r q / (g - i.nu - c))``
    is taken. Returns NaNs when no nonnegative solution exists.
    """
    v = Variant.parse(variant)
    i = np.asarray(i, dtype=float)
    q = s * model.gamma_s + i @ model.W
    g = model.gamma_r + model.nu_r + v.dilution(model)
    nan = np.full(model.p, np.nan)
    if not v.phi_r:
        return q / g if np.all(g > 0) else nan
    y = float(i @ model.nu)
    c = 0.0
    for _ in range(10_000):
        den = g - y - c
        if np.any(den <= 0):
            return nan
        c_new = float(model.nu_r @ (q / den))
        if abs(c_new - c) <= 1e-15 * max(1.0, c_new):
            c = c_new
            break
        c = c_new
    else:
        return nan
    den = g - y - c
    return q / den if np.all(den > 0) else nan


def rhs_unscaled(model: ModelSpec, y) -> np.ndarray:
    """Time derivative of ``(S, I, R, N, D, D_e)``."""
    if isinstance(y, UnscaledState):
        y = y.as_vector()
    y = np.asarray(y, dtype=float)
    n, p = model.n, model.p
    S, I, R = y[0], y[1 : 1 + n], y[1 + n : 1 + n + p]
    N = y[1 + n + p]
    if not N > 0:
        raise ModelError(f"population extinct (N = {N})")
    mu = model.mu
    excess = I @ model.nu + R @ model.nu_r

    dS = (model.lam * N - S / N * (I @ model.b) - (model.gamma_s_total + mu) * S
          + R @ model.gamma_r)
    dI = I @ (S / N * model.B + model.A) - I * (model.nu + mu)
    dR = I @ model.W + model.gamma_s * S - R * (model.gamma_r + model.nu_r + mu)
    dN = (model.lam - mu) * N - excess
    dD = mu * (S + I.sum() + R.sum())
    return np.concatenate(([dS], dI, dR, [dN, dD, excess]))


def lyapunov_y(spec, i, dilution: float | None = None) -> float:
    """Linear Lyapunov candidate ``Y = i V^{-1} b`` for the disease-free point.

    ``spec`` may be a :class:`SirPhSpec` or a :class:`ModelSpec`, in which
    case ``b = B 1``.
    """
    b = spec.b
    V = spec.transition_matrix(dilution)
    i = np.asarray(i, dtype=float)
    return float(i @ np.linalg.solve(V, b))


def lyapunov_weights(spec, dilution: float | None = None) -> np.ndarray:
    """``V^{-1} b``: the vector that :func:`lyapunov_y` contracts ``i`` with."""
    return np.linalg.solve(spec.transition_matrix(dilution), spec.b)


__all__ = [
    "Variant", "VariantFlags", "rhs_scaled", "jacobian_scaled", "rhs_unscaled",
    "lyapunov_y", "lyapunov_weights", "simplex_tangent_basis", "removed_nullcline",
]
