"""Parameter bundles, state types and structural validation.

All row/column conventions follow the "state vector pre-multiplies the
matrix" layout: the disease vector ``i`` is a row, ``i @ A`` moves mass
between disease classes and ``i @ W`` moves it into the removed classes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

#: absolute tolerance for structural equalities (row sums, probability sums)
STRUCT_TOL = 1e-12
#: tolerance on s + i.1 + r.1 = 1
SIMPLEX_TOL = 1e-9


class ModelError(ValueError):
    """Base class for invalid model input."""


class DimensionError(ModelError):
    """A parameter array does not have the shape implied by (n, p)."""

    def __init__(self, field_name: str, expected, got):
        self.field = field_name
        super().__init__(f"{field_name}: expected shape {expected}, got {got}")


class Violation(NamedTuple):
    field: str
    index: tuple
    message: str

    def __str__(self):
        where = f"[{','.join(map(str, self.index))}]" if self.index else ""
        return f"{self.field}{where}: {self.message}"


def _frozen(a, shape, name, ndim=None):
    arr = np.array(a, dtype=float)
    if arr.shape != shape:
        # allow scalars and flat lists where the shape is unambiguous
        if arr.size == int(np.prod(shape)) and (arr.ndim <= 1 or ndim == 1):
            arr = arr.reshape(shape)
        else:
            raise DimensionError(name, shape, arr.shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelSpec:
    """Matrix SIR/V+S model of type (1, n, p).

    Parameters
    ----------
    n, p : int
        Number of disease and removed compartments.
    lam, mu : float
        Birth rate and natural death rate.
    A : (n, n) array
        Transitions among disease classes (Markovian sub-generator).
    B : (n, n) array
        Infection-force matrix; ``B[k, j]`` is the force of class ``k``
        feeding new infections into class ``j``.
    W : (n, p) array
        Disease to removed transfer rates.
    nu, nu_r : (n,), (p,) arrays
        Extra (disease / removed) death rates.
    gamma_s : (p,) array
        Vaccination rates (row vector).
    gamma_r : (p,) array
        Loss-of-immunity rates (column vector).
    """

    n: int
    p: int
    lam: float
    mu: float
    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    nu: np.ndarray
    nu_r: np.ndarray
    gamma_s: np.ndarray
    gamma_r: np.ndarray
    name: str = ""

    def __post_init__(self):
        n, p = int(self.n), int(self.p)
        if n < 1:
            raise DimensionError("n", ">= 1", n)
        if p < 1:
            raise DimensionError("p", ">= 1", p)
        set_ = object.__setattr__
        set_(self, "n", n)
        set_(self, "p", p)
        set_(self, "lam", float(self.lam))
        set_(self, "mu", float(self.mu))
        set_(self, "A", _frozen(self.A, (n, n), "A"))
        set_(self, "B", _frozen(self.B, (n, n), "B"))
        set_(self, "W", _frozen(self.W, (n, p), "W"))
        for name, size in (("nu", n), ("nu_r", p), ("gamma_s", p), ("gamma_r", p)):
            set_(self, name, _frozen(getattr(self, name), (size,), name, ndim=1))

    @property
    def b(self) -> np.ndarray:
        """Row sums of ``B``."""
        return self.B.sum(axis=1)

    @property
    def gamma_s_total(self) -> float:
        return float(self.gamma_s.sum())

    @property
    def dim(self) -> int:
        return 1 + self.n + self.p

    def transition_matrix(self, dilution: float | None = None) -> np.ndarray:
        """``Diag(nu + d) - A`` with ``d`` defaulting to the birth rate."""
        d = self.lam if dilution is None else dilution
        return np.diag(self.nu + d) - self.A

    def replace(self, **changes) -> "ModelSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return ModelSpec(**kw)

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in self.__dataclass_fields__
        )

    __hash__ = None


@dataclass(frozen=True)
class SirPhSpec:
    """Rank-one SIR-PH model: infections enter class j with probability
    ``alpha[j]``; disease time is phase-type ``(alpha, A)``; one removed
    class fed by the exit vector ``(-A) @ 1``."""

    alpha: np.ndarray
    A: np.ndarray
    b: np.ndarray
    nu: np.ndarray
    nu_r: float = 0.0
    gamma_s: float = 0.0
    gamma_r: float = 0.0
    lam: float = 0.0
    mu: float = 0.0
    name: str = ""

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).ravel()
        n = alpha.size
        set_ = object.__setattr__
        set_(self, "alpha", _frozen(alpha, (n,), "alpha", ndim=1))
        set_(self, "A", _frozen(self.A, (n, n), "A"))
        set_(self, "b", _frozen(self.b, (n,), "b", ndim=1))
        set_(self, "nu", _frozen(self.nu, (n,), "nu", ndim=1))
        for name in ("nu_r", "gamma_s", "gamma_r", "lam", "mu"):
            set_(self, name, float(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.alpha.size

    @property
    def exit_vector(self) -> np.ndarray:
        return -self.A.sum(axis=1)

    def transition_matrix(self, dilution: float | None = None) -> np.ndarray:
        d = self.lam if dilution is None else dilution
        return np.diag(self.nu + d) - self.A

    def replace(self, **changes) -> "SirPhSpec":
        kw = {f: getattr(self, f) for f in self.__dataclass_fields__}
        kw.update(changes)
        return SirPhSpec(**kw)

    def __eq__(self, other):
        if not isinstance(other, SirPhSpec):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in self.__dataclass_fields__
        )

    __hash__ = None


@dataclass(frozen=True)
class ScaledState:
    """Population fractions ``(s, i, r)``.

    The simplex constraint is not enforced on construction: the first and
    intermediate approximations do not conserve ``s + i.1 + r.1``. Use
    :meth:`check_simplex` where membership is a precondition.
    """

    s: float
    i: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", float(self.s))
        for name in ("i", "r"):
            arr = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_vector(cls, x, n: int, p: int | None = None) -> "ScaledState":
        x = np.asarray(x, dtype=float)
        if p is None:
            p = x.size - 1 - n
        if x.size != 1 + n + p:
            raise DimensionError("state", (1 + n + p,), x.shape)
        return cls(x[0], x[1 : 1 + n].copy(), x[1 + n :].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.s], self.i, self.r))

    @property
    def total(self) -> float:
        return self.s + float(self.i.sum()) + float(self.r.sum())

    def simplex_violations(self, tol: float = SIMPLEX_TOL) -> list[str]:
        out = []
        if self.s < -tol:
            out.append(f"s = {self.s} < 0")
        for name, arr in (("i", self.i), ("r", self.r)):
            for k in np.flatnonzero(arr < -tol):
                out.append(f"{name}[{k}] = {arr[k]} < 0")
        if abs(self.total - 1.0) > tol:
            out.append(f"s + i.1 + r.1 = {self.total!r} != 1")
        return out

    def check_simplex(self, tol: float = SIMPLEX_TOL) -> "ScaledState":
        bad = self.simplex_violations(tol)
        if bad:
            raise ModelError("state off the simplex: " + "; ".join(bad))
        return self

    __hash__ = None


@dataclass(frozen=True)
class UnscaledState:
    """Compartment counts plus total population and cumulative deaths."""

    S: float
    I: np.ndarray
    R: np.ndarray
    N: float
    D: float = 0.0
    D_e: float = 0.0

    def __post_init__(self):
        for name in ("S", "N", "D", "D_e"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("I", "R"):
            arr = np.atleast_1d(np.array(getattr(self, name), dtype=float))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_fractions(cls, x: ScaledState, N: float) -> "UnscaledState":
        return cls(x.s * N, x.i * N, x.r * N, N)

    @classmethod
    def from_vector(cls, y, n: int, p: int) -> "UnscaledState":
        y = np.asarray(y, dtype=float)
        return cls(y[0], y[1 : 1 + n].copy(), y[1 + n : 1 + n + p].copy(), *y[1 + n + p :])

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.S], self.I, self.R, [self.N, self.D, self.D_e]))

    def fractions(self) -> ScaledState:
        return ScaledState(self.S / self.N, self.I / self.N, self.R / self.N)

    def check(self, rtol: float = SIMPLEX_TOL) -> "UnscaledState":
        total = self.S + self.I.sum() + self.R.sum()
        if abs(total - self.N) > rtol * max(abs(self.N), 1.0):
            raise ModelError(f"N = {self.N} but S + I.1 + R.1 = {total}")
        return self

    __hash__ = None


def _negative_entries(field_name, arr, what="must be >= 0"):
    return [
        Violation(field_name, tuple(int(k) for k in np.atleast_1d(idx)), what)
        for idx in zip(*np.nonzero(arr < 0))
    ]


def validate(model: ModelSpec, tol: float = STRUCT_TOL) -> list[Violation]:
    """Return every violated structural invariant of ``model``.

    An empty list means the model is valid. Shape problems are raised as
    :class:`DimensionError` when the model is constructed, so only value
    conditions are reported here.
    """
    A = model.A
    out: list[Violation] = []

    off = A - np.diag(np.diag(A))
    out += _negative_entries("A", off, "off-diagonal entry must be >= 0")
    for k in np.flatnonzero(np.diag(A) > 0):
        out.append(Violation("A", (int(k), int(k)), "diagonal entry must be <= 0"))
    row = A.sum(axis=1)
    for k in np.flatnonzero(row > tol):
        out.append(Violation("A", (int(k),), f"row sum {row[k]:.3g} > 0"))
    if not np.any(row < -tol):
        out.append(Violation("A", (), "A not a sub-generator: no row with negative sum"))
    else:
        eig = np.linalg.eigvals(-A)
        if eig.real.min() <= 1e-10:
            out.append(Violation("A", (), "-A is not a nonsingular M-matrix "
                                          f"(min Re eig = {eig.real.min():.3g})"))

    cons = A.sum(axis=1) + model.W.sum(axis=1)
    for k in np.flatnonzero(np.abs(cons) > tol):
        out.append(Violation("W", (int(k),),
                             f"mass conservation: row {k} of [A W] sums to {cons[k]:.3g}"))

    out += _negative_entries("B", model.B)
    out += _negative_entries("W", model.W)
    for name in ("nu", "nu_r", "gamma_s", "gamma_r"):
        out += _negative_entries(name, getattr(model, name))
    for name in ("lam", "mu"):
        if getattr(model, name) < 0:
            out.append(Violation(name, (), "must be >= 0"))
    return out


def validate_sirph(spec: SirPhSpec, tol: float = STRUCT_TOL) -> list[Violation]:
    """``alpha`` must be a probability vector; the rest is checked on the
    embedded general model."""
    out = _negative_entries("alpha", spec.alpha)
    if abs(spec.alpha.sum() - 1.0) > tol:
        out.append(Violation("alpha", (), f"entries sum to {spec.alpha.sum()!r}, not 1"))
    out += _negative_entries("b", spec.b)
    return out + validate(embed(spec, check=False), tol)


def embed(spec: SirPhSpec, check: bool = True) -> ModelSpec:
    """Map a SIR-PH model to the general (1, n, 1) form: ``B = b alpha``,
    ``W = (-A) 1``."""
    bad = validate_sirph(spec) if check else []
    if bad:
        raise ModelError("invalid SIR-PH model: " + "; ".join(map(str, bad)))
    n = spec.n
    return ModelSpec(
        n=n, p=1, lam=spec.lam, mu=spec.mu,
        A=spec.A,
        B=np.outer(spec.b, spec.alpha),
        W=spec.exit_vector.reshape(n, 1),
        nu=spec.nu,
        nu_r=[spec.nu_r],
        gamma_s=[spec.gamma_s],
        gamma_r=[spec.gamma_r],
        name=spec.name,
    )


def require_valid(model: ModelSpec) -> ModelSpec:
    bad = validate(model)
    if bad:
        raise ModelError("invalid model: " + "; ".join(map(str, bad)))
    return model


def as_model(spec) -> ModelSpec:
    """Accept either parameter bundle and return the general form."""
    return embed(spec) if isinstance(spec, SirPhSpec) else spec
