"""Next-generation split, reproduction numbers and critical vaccination."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dynamics import Variant
from .linalg import spectral_radius
from .model import ModelError, ModelSpec, ScaledState, SirPhSpec, as_model, validate

#: condition number above which V is treated as singular
COND_LIMIT = 1e12


class SingularTransitionError(ArithmeticError):
    """The transition matrix V is numerically singular."""


class UnsupportedCaseError(ValueError):
    """A closed form was requested outside the case where it holds."""


@dataclass(frozen=True)
class NgmDecomposition:
    F: np.ndarray
    V: np.ndarray
    V_inv: np.ndarray
    r0: float
    r_rank_one: float | None = None

    @property
    def ngm(self) -> np.ndarray:
        return self.F @ self.V_inv

    __hash__ = None


def _inverse(V) -> np.ndarray:
    if np.linalg.cond(V) > COND_LIMIT:
        raise SingularTransitionError(f"transition matrix is singular (cond = {np.linalg.cond(V):.3g})")
    return np.linalg.inv(V)


def is_rank_one(B) -> bool:
    """``B = b alpha`` for some vectors (the zero matrix included)."""
    return np.linalg.matrix_rank(B) <= 1


def ngm_split(model: ModelSpec, dfe: ScaledState, variant=Variant.SM) -> NgmDecomposition:
    """Transmission/transition split of the disease equations at ``dfe``.

    For the scaled and intermediate models ``F = s B (+ (r.nu_r) I)``; the
    ``nu_r`` term appears only when the disease equations carry the
    population-shrinkage factor (SM). ``V = Diag(nu + d) - A`` with ``d``
    the variant's dilution rate.
    """
    v = Variant.parse(variant)
    if np.any(np.asarray(dfe.i) != 0):
        raise ValueError("ngm_split expects a disease-free state (i = 0)")
    model = as_model(model)
    n = model.n
    F = dfe.s * model.B
    if v.phi_i:
        F = F + float(dfe.r @ model.nu_r) * np.eye(n)
    V = model.transition_matrix(v.dilution(model))
    V_inv = _inverse(V)
    r0 = spectral_radius(F @ V_inv)
    R = None
    if is_rank_one(model.B) and (not v.phi_i or not np.any(model.nu_r)):
        R = float(np.trace(model.B @ V_inv))
    return NgmDecomposition(F, V, V_inv, r0, R)


class AdmissibilityReport(NamedTuple):
    admissible: bool
    violations: list

    def __bool__(self):
        return self.admissible


def check_admissible_splitting(model: ModelSpec, dfe: ScaledState | None = None,
                               n_samples: int = 1000, seed: int = 0,
                               tol: float = 1e-12) -> AdmissibilityReport:
    """Sample the splitting conditions over the simplex.

    The splitting used is ``F(s, i) = i (s B + (i.nu) I + (r.nu_r) I)`` and
    ``V(i) = i (Diag(nu + lam) - A)``. Checked: both vanish at ``i = 0``;
    ``F >= 0``; ``V_j <= 0`` wherever ``i_j = 0``; ``sum_j V_j >= 0``. The
    exit-rate condition ``-A 1 >= 0`` is verified exactly, and the signs of
    ``B`` and ``W`` (which feed the two conditions above) are reported too.
    ``dfe`` is accepted for API symmetry and added to the sample set.
    """
    model = as_model(model)
    n, p = model.n, model.p
    rng = np.random.default_rng(seed)
    bad: list[str] = []

    exits = -model.A.sum(axis=1)
    for k in np.flatnonzero(exits < -tol):
        bad.append(f"-A 1 >= 0 fails in row {k} ({exits[k]:.3g})")
    if np.any(model.B < 0):
        bad.append("B has negative entries (new infections not >= 0)")
    if np.any(model.W < 0):
        bad.append("W has negative entries (removal flows not >= 0)")

    pts = rng.dirichlet(np.ones(1 + n + p), size=n_samples)
    if dfe is not None:
        pts = np.vstack([pts, dfe.as_vector()])
    Vmat = model.transition_matrix()
    conds = {"F(0,z) = V(0,z) = 0": 0, "F >= 0": 0, "V_j <= 0 when i_j = 0": 0,
             "sum V_j >= 0": 0}
    for x in pts:
        s, i, r = x[0], x[1 : 1 + n], x[1 + n :]
        Fm = s * model.B + (i @ model.nu + r @ model.nu_r) * np.eye(n)
        zero = np.zeros(n)
        if np.any(zero @ Fm != 0) or np.any(zero @ Vmat != 0):
            conds["F(0,z) = V(0,z) = 0"] += 1
        if np.any(i @ Fm < -tol):
            conds["F >= 0"] += 1
        for j in range(n):
            ij = i.copy()
            ij[j] = 0.0
            if (ij @ Vmat)[j] > tol:
                conds["V_j <= 0 when i_j = 0"] += 1
                break
        if (i @ Vmat).sum() < -tol:
            conds["sum V_j >= 0"] += 1
    for name, count in conds.items():
        if count:
            bad.append(f"{name} violated at {count} of {len(pts)} sampled states")
    return AdmissibilityReport(not bad, bad)


def _sirph_checks(spec: SirPhSpec):
    if spec.nu_r != 0:
        raise UnsupportedCaseError(
            "closed-form R needs nu_r = 0; use ngm_split for the general case")


def r_rank_one(spec: SirPhSpec, dilution: float | None = None) -> float:
    """``R = alpha V^{-1} b`` with ``V = Diag(nu + lam) - A``."""
    _sirph_checks(spec)
    V = spec.transition_matrix(dilution)
    return float(spec.alpha @ np.linalg.solve(V, spec.b))


class CriticalVaccination(NamedTuple):
    rate: float
    needed: bool


def critical_vaccination(spec) -> CriticalVaccination:
    """Vaccination rate at which the reproduction number equals one:
    ``(lam + gamma_r)(R - 1)``.

    Accepts a :class:`SirPhSpec` or a rank-one :class:`ModelSpec` with a
    single removed class. When ``R <= 1`` no vaccination is needed and the
    rate is 0.
    """
    if isinstance(spec, SirPhSpec):
        R = r_rank_one(spec)
        lam, gamma_r = spec.lam, spec.gamma_r
    else:
        if spec.p != 1 or not is_rank_one(spec.B):
            raise UnsupportedCaseError("critical vaccination needs p = 1 and rank-one B")
        if np.any(spec.nu_r):
            raise UnsupportedCaseError("critical vaccination closed form needs nu_r = 0")
        R = float(np.trace(spec.B @ np.linalg.inv(spec.transition_matrix())))
        lam, gamma_r = spec.lam, float(spec.gamma_r[0])
    if R <= 1:
        return CriticalVaccination(0.0, False)
    return CriticalVaccination((lam + gamma_r) * (R - 1.0), lam + gamma_r > 0)


def basic_reproduction_number(model, variant=Variant.SM) -> float:
    """``R0`` of ``variant`` at its disease-free equilibrium."""
    from .equilibria import disease_free_state

    model = as_model(model)
    bad = validate(model)
    if bad:
        raise ModelError("invalid model: " + "; ".join(map(str, bad)))
    dfe = disease_free_state(model, variant)
    return ngm_split(model, dfe, variant).r0
