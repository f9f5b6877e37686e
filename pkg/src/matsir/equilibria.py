"""Disease-free and endemic equilibria of the scaled variants.

Closed forms are used where they exist (disease-free points of every
variant, endemic points of FA and IA); :func:`find_equilibria_numeric`
runs a damped multi-start Newton search for anything else, in particular
the endemic points of the scaled model. Every emitted report carries the
max-norm residual of the variant's right-hand side and is rejected if that
residual exceeds ``RESIDUAL_TOL``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .dynamics import Variant, jacobian_scaled, rhs_scaled, simplex_tangent_basis
from .linalg import NumericalDegeneracy, left_null_vector, spectral_radius
from .model import ModelError, ModelSpec, ScaledState, as_model, require_valid
from .reproduction import UnsupportedCaseError, ngm_split

RESIDUAL_TOL = 1e-9
STABILITY_MARGIN = 1e-9
DEDUP_RADIUS = 1e-6


class ExcludedConfigurationError(ModelError):
    """lam = gamma_r = 0 with nu_r >= gamma_s: a second disease-free point
    sits at s = 0 and the next-generation method does not apply."""


class DegenerateDemographyError(ModelError):
    """The disease-free linear system has no unique solution."""


class NoEndemicEquilibrium(ArithmeticError):
    """No admissible endemic point although one was requested."""


@dataclass(frozen=True)
class EquilibriumReport:
    variant: Variant
    kind: str
    point: ScaledState
    residual: float
    jacobian_eigenvalues: np.ndarray
    stability: str
    r0_context: float

    @property
    def stable(self) -> bool:
        return self.stability == "stable"

    @property
    def max_real(self) -> float:
        return float(self.jacobian_eigenvalues.real.max())

    __hash__ = None


# -- disease-free points -----------------------------------------------------

def _sm_dfe_p1(model: ModelSpec) -> tuple[float, float]:
    lam = model.lam
    gr, gs, nr = float(model.gamma_r[0]), float(model.gamma_s[0]), float(model.nu_r[0])
    if nr == 0.0:
        denom = lam + gr + gs
        if denom == 0.0:
            raise DegenerateDemographyError("lam + gamma_r + gamma_s = 0: every s is disease-free")
        s = (lam + gr) / denom
    else:
        if lam == 0.0 and gr == 0.0 and nr >= gs:
            raise ExcludedConfigurationError(
                "lam = gamma_r = 0 with nu_r >= gamma_s has a second disease-free point at s = 0")
        # positive root of nu_r s^2 + (lam + gr + gs - nu_r) s - (lam + gr) = 0
        c0 = lam + gr
        bq = lam + gr + gs - nr
        sq = np.sqrt(bq * bq + 4.0 * nr * c0)
        s = 2.0 * c0 / (bq + sq) if bq > 0 else (sq - bq) / (2.0 * nr)
    return s, 1.0 - s


def _sm_dfe_linear(model: ModelSpec) -> tuple[float, np.ndarray]:
    # nu_r = 0: r = s gamma_s Diag(gamma_r + lam)^-1 and s + r.1 = 1
    D = model.gamma_r + model.lam
    gs = model.gamma_s
    if np.any((D <= 0) & (gs > 0)):
        raise DegenerateDemographyError("a vaccinated class has no outflow (gamma_r + lam = 0)")
    w = np.divide(gs, D, out=np.zeros_like(gs), where=D > 0)
    s = 1.0 / (1.0 + w.sum())
    return s, s * w


def _sm_dfe_general(model: ModelSpec) -> tuple[float, np.ndarray]:
    """Newton on the removed-class equations with ``s = 1 - r.1``."""
    lam, nr = model.lam, model.nu_r
    c = model.gamma_r + nr + lam
    gs = model.gamma_s

    def g(r):
        s = 1.0 - r.sum()
        return s * gs - r * c + (r @ nr) * r

    def jac(r):
        p = r.size
        return (-np.outer(np.ones(p), gs).T - np.diag(c)
                + np.outer(r, nr) + (r @ nr) * np.eye(p))

    try:
        _, r = _sm_dfe_linear(model.replace(nu_r=np.zeros(model.p)))
    except DegenerateDemographyError:
        r = np.zeros(model.p)
    for _ in range(100):
        gr_ = g(r)
        if np.abs(gr_).max() < 1e-15:
            break
        step = np.linalg.lstsq(jac(r), -gr_, rcond=None)[0]
        t = 1.0
        while t > 1e-10 and np.sum(g(r + t * step) ** 2) > (1 - 1e-4 * t) * np.sum(gr_ ** 2):
            t *= 0.5
        r = r + t * step
    s = 1.0 - r.sum()
    if s < 0 or np.any(r < -1e-12) or np.abs(g(r)).max() > RESIDUAL_TOL:
        raise DegenerateDemographyError("no disease-free point found in the simplex")
    return s, r


def disease_free_state(model: ModelSpec, variant=Variant.SM) -> ScaledState:
    """Raw disease-free point of ``variant`` (no certification)."""
    v = Variant.parse(variant)
    model = as_model(model)
    zero_i = np.zeros(model.n)
    if v is Variant.FA:
        D = model.gamma_r + model.nu_r + model.mu
        if np.any(D <= 0):
            raise DegenerateDemographyError("Diag(gamma_r + nu_r + mu) is singular")
        denom = model.mu + model.gamma_s_total - model.gamma_s @ (model.gamma_r / D)
        if denom <= 0:
            raise DegenerateDemographyError(
                f"disease-free denominator mu + gamma_s - ... = {denom:.3g} <= 0")
        s = model.lam / denom
        return ScaledState(s, zero_i, s * model.gamma_s / D)
    # SM and IA share the disease-free subsystem
    if model.p == 1:
        s, r = _sm_dfe_p1(model)
        return ScaledState(s, zero_i, [r])
    if not np.any(model.nu_r):
        s, r = _sm_dfe_linear(model)
    else:
        s, r = _sm_dfe_general(model)
    return ScaledState(s, zero_i, r)


def _dfe_report(model, variant):
    model = require_valid(as_model(model))
    point = disease_free_state(model, variant)
    return classify(model, variant, point)


def dfe_sm(model: ModelSpec) -> EquilibriumReport:
    """Disease-free equilibrium of the scaled model."""
    return _dfe_report(model, Variant.SM)


def dfe_ia(model: ModelSpec) -> EquilibriumReport:
    """Disease-free equilibrium of the intermediate approximation (the
    disease-free subsystem is the same as for SM)."""
    return _dfe_report(model, Variant.IA)


def dfe_fa(model: ModelSpec) -> EquilibriumReport:
    """Disease-free equilibrium of the first approximation:
    ``s = lam / (mu + gamma_s.1 - gamma_s D^{-1} gamma_r)``,
    ``r = s gamma_s D^{-1}`` with ``D = Diag(gamma_r + nu_r + mu)``."""
    return _dfe_report(model, Variant.FA)


# -- endemic points ----------------------------------------------------------

def endemic_fa(model: ModelSpec) -> list[EquilibriumReport]:
    """Endemic equilibrium of the first approximation.

    ``1/s`` is the Perron eigenvalue of ``B V^{-1}`` (``V`` built with
    ``mu``), ``i`` is proportional to the nonnegative left null vector of
    ``s B - V``, and the multiplier solves the linear balance obtained by
    eliminating ``r`` from the susceptible equation. Returns an empty list
    when the FA reproduction number is at most one.
    """
    model = require_valid(as_model(model))
    v = Variant.FA
    dfe = disease_free_state(model, v)
    ngm = ngm_split(model, dfe, v)
    if ngm.r0 <= 1.0:
        return []
    rho = spectral_radius(model.B @ ngm.V_inv)
    s = 1.0 / rho
    if not 0.0 < s < 1.0:
        raise NoEndemicEquilibrium(f"s_ee = {s:.6g} is outside (0, 1)")
    vec = left_null_vector(s * model.B - ngm.V)

    D = model.gamma_r + model.nu_r + model.mu
    coef = vec @ (s * model.b - model.W @ (model.gamma_r / D))
    rhs = model.lam - (model.mu + model.gamma_s_total) * s + s * model.gamma_s @ (model.gamma_r / D)
    if abs(coef) < 1e-12:
        raise NumericalDegeneracy("degenerate normalization: coefficient of i vanishes")
    c = rhs / coef
    if c <= 0:
        raise NoEndemicEquilibrium(f"normalization gives non-positive scale {c:.3g}")
    i = c * vec
    r = (i @ model.W + s * model.gamma_s) / D
    return [_certified(model, v, ScaledState(s, i, r), ngm.r0)]


def endemic_ia(model: ModelSpec) -> list[EquilibriumReport]:
    """Endemic equilibrium of the intermediate approximation (``nu_r = 0``).

    ``s = 1/R`` as for FA but with ``V`` built from ``lam``; the scale of
    ``i`` enters the removed-class outflow through ``y = i.nu``, so it is
    found by a bracketed scalar root search on ``y`` in ``[0, lam)``.
    """
    model = require_valid(as_model(model))
    if np.any(model.nu_r):
        raise UnsupportedCaseError("endemic_ia requires nu_r = 0")
    v = Variant.IA
    dfe = disease_free_state(model, v)
    ngm = ngm_split(model, dfe, v)
    if ngm.r0 <= 1.0:
        return []
    R = spectral_radius(model.B @ ngm.V_inv)
    s = 1.0 / R
    if not 0.0 < s < 1.0:
        raise NoEndemicEquilibrium(f"s_ee = {s:.6g} is outside (0, 1)")
    vec = left_null_vector(s * model.B - ngm.V)
    lam, gr, gs = model.lam, model.gamma_r, model.gamma_s
    vnu = float(vec @ model.nu)
    vW = vec @ model.W

    def scale(y):
        Dinv = 1.0 / (gr + (lam - y))
        rhs = lam * (R - 1.0) - model.gamma_s_total + gs @ (Dinv * gr)
        coef = vec @ (model.b - model.nu) - R * vW @ (Dinv * gr)
        if abs(coef) < 1e-12:
            raise NumericalDegeneracy("degenerate normalization: coefficient of i vanishes")
        return rhs / coef

    if vnu == 0.0:
        y = 0.0
        c = scale(0.0)
    else:
        hi = lam - 1e-12
        g = lambda y: scale(y) * vnu - y  # noqa: E731
        if hi <= 0 or np.sign(g(0.0)) == np.sign(g(hi)):
            raise NoEndemicEquilibrium("no sign change of the normalization on [0, lam)")
        y = brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
        c = scale(y)
    if c <= 0:
        raise NoEndemicEquilibrium(f"normalization gives non-positive scale {c:.3g}")
    i = c * vec
    r = (s * gs + i @ model.W) / (gr + (lam - i @ model.nu))
    return [_certified(model, v, ScaledState(s, i, r), ngm.r0)]


# -- classification ----------------------------------------------------------

def _eigenvalues(model, v, x):
    J = jacobian_scaled(model, v, x)
    if v is Variant.SM:
        # the simplex is invariant under SM; drop the transverse direction
        Q = simplex_tangent_basis(J.shape[0])
        J = Q.T @ J @ Q
    return np.linalg.eigvals(J)


def _verdict(eigs, margin=STABILITY_MARGIN) -> str:
    top = eigs.real.max() if eigs.size else -np.inf
    if top < -margin:
        return "stable"
    if top > margin:
        return "unstable"
    return "marginal"


def _r0_or_nan(model, v):
    try:
        return ngm_split(model, disease_free_state(model, v), v).r0
    except (ModelError, ArithmeticError):
        return float("nan")


def classify(model: ModelSpec, variant, point, r0: float | None = None) -> EquilibriumReport:
    """Evaluate residual and local stability of ``point``.

    For SM the spectrum is that of the Jacobian restricted to the simplex
    tangent space (the simplex is invariant); FA and IA use the full
    Jacobian.
    """
    v = Variant.parse(variant)
    model = as_model(model)
    if not isinstance(point, ScaledState):
        point = ScaledState.from_vector(point, model.n, model.p)
    x = point.as_vector()
    residual = float(np.abs(rhs_scaled(model, v, x)).max())
    if residual > RESIDUAL_TOL:
        raise ValueError(f"point is not an equilibrium (residual {residual:.3g})")
    eigs = _eigenvalues(model, v, x)
    kind = "disease-free" if not np.any(point.i) else "endemic"
    if r0 is None:
        r0 = _r0_or_nan(model, v)
    return EquilibriumReport(v, kind, point, residual, eigs, _verdict(eigs), float(r0))


def _certified(model, v, point, r0):
    residual = float(np.abs(rhs_scaled(model, v, point.as_vector())).max())
    if residual > RESIDUAL_TOL:
        raise NumericalDegeneracy(f"{v.name} equilibrium residual {residual:.3g} exceeds tolerance")
    return classify(model, v, point, r0)


# -- numeric search ----------------------------------------------------------

def _newton(G, JG, x, max_iter=100, tol=1e-15):
    g = G(x)
    for _ in range(max_iter):
        phi = g @ g
        if np.abs(g).max() <= tol:
            break
        Jx = JG(x)
        try:
            step = np.linalg.solve(Jx, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Jx, -g, rcond=None)[0]
        t = 1.0
        while t > 1e-12:
            xn = x + t * step
            gn = G(xn)
            if np.all(np.isfinite(gn)) and gn @ gn <= (1.0 - 1e-4 * t) * phi:
                break
            t *= 0.5
        else:
            break
        x, g = xn, gn
        if np.abs(x).max() > 1e6:
            break
    return x


def simplex_starts(dim: int, count: int = 64, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points spread over the open unit simplex."""
    m = int(np.ceil(np.log2(max(count, 1))))
    u = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:count]
    e = -np.log(np.clip(u, 1e-300, 1.0))
    return e / e.sum(axis=1, keepdims=True)


def _warm_starts(model, v):
    out = []
    for f in (endemic_fa, endemic_ia):
        try:
            out += [rep.point.as_vector() for rep in f(model)]
        except (ModelError, ArithmeticError, UnsupportedCaseError):
            pass
    try:
        out.append(disease_free_state(model, v).as_vector())
    except (ModelError, ArithmeticError):
        pass
    if v is Variant.SM:
        out = [x / x.sum() for x in out if x.sum() > 0]
    return out


def find_equilibria_numeric(model: ModelSpec, variant, n_starts: int = 64, seed: int = 0,
                            extra_starts=None) -> list[EquilibriumReport]:
    """Multi-start damped Newton search for equilibria of ``variant``.

    For SM the susceptible equation is replaced by ``s + i.1 + r.1 = 1``
    (equivalent on the invariant simplex, and it rules out spurious roots
    off it). Roots with a negative coordinate, or with total mass above 1
    (outside the forward-invariant region), are discarded; roots within
    ``DEDUP_RADIUS`` of each other are merged. The result is sorted by
    ``s``.
    """
    v = Variant.parse(variant)
    model = require_valid(as_model(model))
    n = model.n
    si = slice(1, 1 + n)

    if v is Variant.SM:
        def G(x):
            f = rhs_scaled(model, v, x)
            f[0] = x.sum() - 1.0
            return f

        def JG(x):
            J = jacobian_scaled(model, v, x)
            J[0] = 1.0
            return J
    else:
        def G(x):
            return rhs_scaled(model, v, x)

        def JG(x):
            return jacobian_scaled(model, v, x)

    starts = list(simplex_starts(model.dim, n_starts, seed))
    starts += _warm_starts(model, v)
    if extra_starts is not None:
        starts += [np.asarray(x, dtype=float) for x in extra_starts]

    roots = []
    for x0 in starts:
        x = _newton(G, JG, np.array(x0, dtype=float))
        if not np.all(np.isfinite(x)):
            continue
        if np.abs(x[si]).max() < 1e-8:
            # on the disease-free face: pin i to exactly zero and re-polish
            x[si] = 0.0
            x = _newton(G, JG, x)
            # the face i = 0 is invariant; the polish may leak roundoff into i
            x[si] = 0.0
        res = float(np.abs(rhs_scaled(model, v, x)).max())
        if res > RESIDUAL_TOL or np.any(x < -1e-12):
            continue
        if v is Variant.SM and abs(x.sum() - 1.0) > 1e-9:
            continue
        if x.sum() > 1.0 + 1e-9:
            continue
        for k, (y, ry) in enumerate(roots):
            if np.abs(x - y).max() < DEDUP_RADIUS:
                if res < ry:
                    roots[k] = (x, res)
                break
        else:
            roots.append((x, res))

    roots.sort(key=lambda xr: (xr[0][0], xr[0][1:].tolist()))
    r0 = _r0_or_nan(model, v)
    return [classify(model, v, x, r0) for x, _ in roots]
