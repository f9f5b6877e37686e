"""Explicit Runge-Kutta integration with step diagnostics.

The adaptive integrator is the Dormand-Prince 5(4) pair with local
extrapolation; samples between accepted steps come from its 4th-order
continuous extension (cubic Hermite for the fixed-step RK4 fallback). Trajectories are
never renormalized, so the recorded conservation drift is an honest
integrator diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import Variant, rhs_scaled, rhs_unscaled
from .model import ModelError, ModelSpec, ScaledState, UnscaledState, require_valid


class StiffnessError(RuntimeError):
    """Step size fell below the underflow threshold."""


_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4
# continuous extension: y(t + th h) = y + h K^T (_P @ [th, th^2, th^3, th^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Trajectory:
    """Sampled solution plus the accepted-step record.

    ``states`` rows are flat state vectors at ``times``; ``step_times`` /
    ``step_states`` hold every accepted integrator step (including the
    initial point).
    """

    times: np.ndarray
    states: np.ndarray
    variant: Variant | None
    n: int
    p: int
    step_times: np.ndarray = field(repr=False, default=None)
    step_states: np.ndarray = field(repr=False, default=None)
    accepted: int = 0
    rejected: int = 0
    max_drift: float = 0.0

    @property
    def unscaled(self) -> bool:
        return self.variant is None

    def state(self, k: int):
        if self.unscaled:
            return UnscaledState.from_vector(self.states[k], self.n, self.p)
        return ScaledState.from_vector(self.states[k], self.n, self.p)

    def fractions(self) -> np.ndarray:
        """Rows ``(s, i, r)``; divides by ``N`` for unscaled runs."""
        k = 1 + self.n + self.p
        if not self.unscaled:
            return self.states[:, :k]
        return self.states[:, :k] / self.states[:, k : k + 1]


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    th = (t - t0) / h
    h00 = (1 + 2 * th) * (1 - th) ** 2
    h10 = th * (1 - th) ** 2
    h01 = th * th * (3 - 2 * th)
    h11 = th * th * (th - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _initial_step(f, t0, y0, f0, rtol, atol, direction_span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, direction_span)


def dopri5(f: Callable, t_span, y0, t_eval=None, rtol=1e-8, atol=1e-10,
           monitor: Callable | None = None, max_steps: int = 1_000_000):
    """Integrate ``y' = f(t, y)`` over ``t_span``.

    Returns ``(t_eval, Y_eval, step_t, step_y, accepted, rejected)``. The
    optional ``monitor(y)`` is called on every accepted state. ``atol`` may
    be a callable ``atol(y)`` returning a scalar or per-component array.
    """
    atol_of = atol if callable(atol) else (lambda y: atol)
    t0, t1 = map(float, t_span)
    if not (np.isfinite(t0) and np.isfinite(t1)) or t1 <= t0:
        raise ValueError(f"t_span must be finite and increasing, got {t_span}")
    span = t1 - t0
    y = np.array(y0, dtype=float)
    t_eval = np.array([t0, t1] if t_eval is None else t_eval, dtype=float)
    if np.any(np.diff(t_eval) <= 0) or t_eval[0] < t0 or t_eval[-1] > t1:
        raise ValueError("sample times must be strictly increasing inside t_span")

    out = np.empty((t_eval.size, y.size))
    k_out = 0
    while k_out < t_eval.size and t_eval[k_out] == t0:
        out[k_out] = y
        k_out += 1

    t = t0
    fy = f(t, y)
    h = _initial_step(f, t, y, fy, rtol, atol_of(y), span)
    h_min = 1e-14 * span
    step_t, step_y = [t], [y.copy()]
    if monitor:
        monitor(y)
    accepted = rejected = 0
    K = np.empty((7, y.size))

    while t < t1:
        if accepted + rejected >= max_steps:
            raise StiffnessError(f"exceeded {max_steps} steps at t = {t}")
        if h < h_min:
            raise StiffnessError(
                f"step size {h:.3g} underflowed at t = {t:.6g}; "
                "the system may be stiff, try looser tolerances")
        h = min(h, t1 - t)
        K[0] = fy
        for s in range(1, 7):
            K[s] = f(t + _C[s] * h, y + h * (np.dot(_A[s], K[:s])))
        y_new = y + h * (_B5[:6] @ K[:6])
        # K[6] was evaluated at y_new (FSAL)
        err_vec = h * (_E @ K)
        scale = atol_of(y) + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        if not np.isfinite(err):
            rejected += 1
            h *= 0.2
            continue
        if err <= 1.0:
            t_new = t + h if t1 - (t + h) > 1e-15 * span else t1
            f_new = K[6]
            if k_out < t_eval.size and t_eval[k_out] <= t_new:
                Q = K.T @ _P
            while k_out < t_eval.size and t_eval[k_out] <= t_new:
                te = t_eval[k_out]
                if te == t_new:
                    out[k_out] = y_new
                else:
                    th = (te - t) / h
                    out[k_out] = y + h * (Q @ (th ** np.arange(1, 5)))
                k_out += 1
            t, y, fy = t_new, y_new, f_new
            accepted += 1
            step_t.append(t)
            step_y.append(y.copy())
            if monitor:
                monitor(y)
            fac = 10.0 if err == 0 else min(10.0, 0.9 * err ** -0.2)
            h *= fac
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return t_eval, out, np.array(step_t), np.array(step_y), accepted, rejected


def rk4(f: Callable, t_span, y0, t_eval=None, n_steps: int = 10_000,
        monitor: Callable | None = None):
    """Classical fixed-step RK4; same return layout as :func:`dopri5`."""
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=float)
    t_eval = np.array([t0, t1] if t_eval is None else t_eval, dtype=float)
    h = (t1 - t0) / n_steps
    out = np.empty((t_eval.size, y.size))
    k_out = 0
    while k_out < t_eval.size and t_eval[k_out] == t0:
        out[k_out] = y
        k_out += 1
    t = t0
    fy = f(t, y)
    step_t, step_y = [t], [y.copy()]
    if monitor:
        monitor(y)
    for m in range(1, n_steps + 1):
        k1 = fy
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y_new = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_new = t0 + m * h if m < n_steps else t1
        f_new = f(t_new, y_new)
        while k_out < t_eval.size and t_eval[k_out] <= t_new:
            te = t_eval[k_out]
            out[k_out] = y_new if te == t_new else _hermite(t, y, fy, t_new, y_new, f_new, te)
            k_out += 1
        t, y, fy = t_new, y_new, f_new
        step_t.append(t)
        step_y.append(y.copy())
        if monitor:
            monitor(y)
    return t_eval, out, np.array(step_t), np.array(step_y), n_steps, 0


def integrate(model: ModelSpec, variant, x0, t_span, t_eval=None,
              rel_tol: float = 1e-8, abs_tol: float = 1e-10,
              method: str = "dopri5", n_steps: int = 10_000) -> Trajectory:
    """Integrate a scaled variant, or the unscaled system when ``variant`` is
    ``None`` / ``"unscaled"``.

    ``x0`` is a :class:`ScaledState` (scaled) or :class:`UnscaledState`.
    Conservation drift is ``|s + i.1 + r.1 - 1|`` for scaled runs and
    ``|S + I.1 + R.1 - N| / N`` for unscaled ones, maximized over accepted
    steps. For unscaled runs ``abs_tol`` is applied at the level of
    fractions, i.e. multiplied by the current ``N``: the system is
    homogeneous in the counts and ``N`` may decay by many orders of
    magnitude.
    """
    require_valid(model)
    n, p = model.n, model.p
    unscaled = variant is None or (isinstance(variant, str) and variant.lower() == "unscaled")
    if unscaled:
        if isinstance(x0, ScaledState):
            raise TypeError("unscaled integration needs an UnscaledState")
        x0.check()
        y0 = x0.as_vector()
        v = None
        k = 1 + n + p

        def f(t, y):
            # trial stages may overshoot N <= 0; a nan forces step rejection
            try:
                return rhs_unscaled(model, y)
            except ModelError:
                return np.full(y.size, np.nan)

        def drift(y):
            return abs(y[:k].sum() - y[k]) / abs(y[k])

        def atol(y):
            return abs_tol * abs(y[k])
    else:
        v = Variant.parse(variant)
        if not isinstance(x0, ScaledState):
            x0 = ScaledState.from_vector(x0, n, p)
        x0.check_simplex()
        y0 = x0.as_vector()

        def f(t, y):
            return rhs_scaled(model, v, y)

        def drift(y):
            return abs(y.sum() - 1.0)

        atol = abs_tol

    worst = [0.0]

    def monitor(y):
        worst[0] = max(worst[0], drift(y))

    if method == "dopri5":
        res = dopri5(f, t_span, y0, t_eval, rel_tol, atol, monitor=monitor)
    elif method == "rk4":
        res = rk4(f, t_span, y0, t_eval, n_steps=n_steps, monitor=monitor)
    else:
        raise ValueError(f"unknown method {method!r}")
    times, states, st, sy, acc, rej = res
    return Trajectory(times, states, v, n, p, st, sy, acc, rej, worst[0])
