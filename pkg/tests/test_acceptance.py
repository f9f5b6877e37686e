"""Exit criteria, one function each. Run standalone for a PASS/FAIL summary:

    python tests/test_acceptance.py
"""

import contextlib
import io
import re
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import MODELS, seirs, sir1, sir1_ph  # noqa: E402
from matsir import (ScaledState, UnscaledState, classify, critical_vaccination,  # noqa: E402
                    dfe_fa, dfe_ia, dfe_sm, disease_free_state, embed, endemic_fa, endemic_ia,
                    find_equilibria_numeric, integrate, jacobian_scaled, ngm_split, r_rank_one,
                    rhs_scaled)
from matsir.cli import main as cli_main  # noqa: E402
from matsir.dynamics import lyapunov_weights  # noqa: E402
from matsir.testing import (random_model, random_rank_one_model, random_simplex_point,  # noqa: E402
                            random_sirph)

VARIANTS = ("sm", "fa", "ia")


def r0_report():
    t = time.perf_counter()
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = cli_main(["report", str(MODELS / "sir1.yaml")])
    dt = time.perf_counter() - t
    m = re.search(r"^R0 = (\S+)", buf.getvalue(), re.M)
    r0 = float(m.group(1)) if m else float("nan")
    ok = code == 0 and abs(r0 - 3.213) <= 0.005 and dt < 1.0
    return ok, f"printed R0 = {m.group(1) if m else '?'}, {dt:.3f} s"


def immunity_threshold():
    t = time.perf_counter()
    (fa,), (ia,) = endemic_fa(sir1()), endemic_ia(sir1())
    R = r_rank_one(sir1_ph())
    dt = time.perf_counter() - t
    err = max(abs(fa.point.s - 0.3), abs(ia.point.s - 0.3), abs(fa.point.s - 1 / R))
    return err <= 1e-9 and dt < 1.0, f"max |s_ee - 0.3| = {err:.2e}, {dt:.3f} s"


def weak_alternative():
    rng = np.random.default_rng(2024)
    t = time.perf_counter()
    checked = mismatched = 0
    while checked < 500:
        m = embed(random_sirph(rng))
        rep = classify(m, "sm", disease_free_state(m, "sm"))
        if abs(rep.r0_context - 1) <= 0.05:
            continue
        checked += 1
        mismatched += (rep.r0_context < 1) != rep.stable
    dt = time.perf_counter() - t
    return mismatched == 0 and dt < 60, f"{checked} models, {mismatched} mismatches, {dt:.1f} s"


def rank_one_consistency():
    rng = np.random.default_rng(7)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        ph = random_sirph(rng, nu_r=0.0)
        m = embed(ph)
        dfe = disease_free_state(m)
        r0 = ngm_split(m, dfe).r0
        worst = max(worst, abs(r0 - dfe.s * r_rank_one(ph)) / (1 + r0))
    dt = time.perf_counter() - t
    return worst <= 1e-8 and dt < 30, f"max scaled gap {worst:.2e}, {dt:.1f} s"


def residual_certification():
    rng = np.random.default_rng(11)
    models = [sir1(), embed(seirs()), embed(seirs(b=[0.0, 3.0]))]
    models += [random_model(rng) for _ in range(40)]
    models += [random_rank_one_model(rng, nu_r=0.0, r0_range=(1.1, 5)) for _ in range(40)]
    worst = pf_worst = 0.0
    emitted = 0
    for m in models:
        reps = [dfe_sm(m), dfe_fa(m), dfe_ia(m)]
        reps += endemic_fa(m)
        if not np.any(m.nu_r):
            reps += endemic_ia(m)
        for v in VARIANTS:
            reps += find_equilibria_numeric(m, v)
        for rep in reps:
            res = np.abs(rhs_scaled(m, rep.variant, rep.point)).max()
            worst = max(worst, res)
            emitted += 1
        for rep in endemic_fa(m):
            M = rep.point.s * m.B + m.A - np.diag(m.nu + m.mu)
            pf_worst = max(pf_worst, abs(np.linalg.eigvals(M).real.max()))
    ok = worst <= 1e-9 and pf_worst <= 1e-8
    return ok, f"{emitted} equilibria, max residual {worst:.2e}, max |lambda_PF| {pf_worst:.2e}"


def dfe_coincidence():
    rng = np.random.default_rng(5)
    worst = closed = 0.0
    for k in range(200):
        m = (random_model(rng, nu_r_zero=True) if k % 2
             else random_rank_one_model(rng, nu_r=0.0))
        pts = [disease_free_state(m, v).as_vector() for v in VARIANTS]
        worst = max(worst, max(np.abs(a - b).max() for a in pts for b in pts))
        if m.p == 1:
            lam, gr, gs = m.lam, m.gamma_r[0], m.gamma_s[0]
            den = lam + gr + gs
            expect = np.r_[(lam + gr) / den, np.zeros(m.n), gs / den]
            closed = max(closed, np.abs(pts[0] - expect).max())
    ok = worst <= 1e-10 and closed <= 1e-10
    return ok, f"max cross-variant gap {worst:.2e}, max closed-form gap {closed:.2e}"


def jacobian_correctness():
    rng = np.random.default_rng(3)
    worst = 0.0
    for v in VARIANTS:
        for _ in range(100):
            m = random_model(rng)
            x = random_simplex_point(rng, m.dim)
            J = jacobian_scaled(m, v, x)
            h = 1e-6
            Jfd = np.column_stack([(rhs_scaled(m, v, x + h * e) - rhs_scaled(m, v, x - h * e))
                                   / (2 * h) for e in np.eye(m.dim)])
            worst = max(worst, np.abs(J - Jfd).max() / max(1.0, np.abs(J).max()))
    return worst <= 1e-6, f"300 points, max relative gap {worst:.2e}"


def conservation_and_consistency():
    rng = np.random.default_rng(9)
    models = [sir1(), embed(seirs())] + [random_model(rng) for _ in range(8)]
    drift = gap = 0.0
    ts = np.linspace(0, 400, 401)
    for k, m in enumerate(models):
        i0 = np.zeros(m.n)
        i0[0] = 1e-6
        r0 = np.zeros(m.p)
        x0 = ScaledState(1 - 1e-6, i0, r0)
        sm = integrate(m, "sm", x0, (0, 400), ts)
        drift = max(drift, sm.max_drift)
        if k < 5:
            # dual run, same tolerances for both; they must resolve i(0) = 1e-6
            # well enough that the epidemic timing agrees
            tol = dict(rel_tol=1e-10, abs_tol=1e-13)
            a = integrate(m, "sm", x0, (0, 400), ts, **tol)
            b = integrate(m, None, UnscaledState.from_fractions(x0, 1e6), (0, 400), ts, **tol)
            gap = max(gap, np.abs(b.fractions() - a.states).max())
    ok = drift <= 1e-7 and gap <= 1e-6
    return ok, f"max drift {drift:.2e}, max unscaled/SM gap {gap:.2e}"


def critical_vaccination_check():
    rng = np.random.default_rng(13)
    worst_r0 = worst_bis = 0.0
    done = 0
    while done < 200:
        ph = random_sirph(rng, nu_r=0.0, r0_range=(0.5, 6))
        if r_rank_one(ph) <= 1:
            continue
        done += 1
        rate = critical_vaccination(ph).rate

        def r0_at(gs):
            m = embed(ph.replace(gamma_s=gs))
            return ngm_split(m, disease_free_state(m)).r0

        worst_r0 = max(worst_r0, abs(r0_at(rate) - 1))
        lo, hi = 0.0, 1.0
        while r0_at(hi) > 1:
            hi *= 2
        while hi - lo > 1e-13:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if r0_at(mid) > 1 else (lo, mid)
        worst_bis = max(worst_bis, abs(0.5 * (lo + hi) - rate))
    ok = worst_r0 <= 1e-8 and worst_bis <= 1e-8
    return ok, f"200 models, max |R0 - 1| {worst_r0:.2e}, max bisection gap {worst_bis:.2e}"


def lyapunov_monotonicity():
    rng = np.random.default_rng(17)
    models = violations = 0
    abs_tol = 1e-10
    while models < 50:
        ph = random_sirph(rng, nu_r=0.0, r0_range=(0.05, 0.95))
        m = embed(ph)
        dfe = disease_free_state(m, "fa")
        if ngm_split(m, dfe, "fa").r0 > 0.95:
            continue
        models += 1
        w = lyapunov_weights(m, m.mu)
        # monotone up to the integrator's resolution of Y
        slack = 10 * abs_tol * np.abs(w).sum()
        for _ in range(20):
            # interior starts where the perturbation from linearity is
            # nonnegative (s <= s_dfe)
            s0 = dfe.s * rng.uniform(0.05, 0.999)
            rest = (1 - s0) * rng.dirichlet(np.ones(m.n + m.p))
            x0 = ScaledState(s0, rest[: m.n], rest[m.n:])
            tr = integrate(m, "fa", x0, (0, 100), abs_tol=abs_tol)
            Y = tr.step_states[:, 1:1 + m.n] @ w
            violations += bool(np.any(np.diff(Y) > slack))
    return violations == 0, f"{models} models x 20 starts, {violations} non-monotone runs"


CRITERIA = [
    ("R0 reproduction", r0_report),
    ("Immunity threshold", immunity_threshold),
    ("Weak R0 alternative", weak_alternative),
    ("Rank-one consistency", rank_one_consistency),
    ("Equilibrium residual certification", residual_certification),
    ("DFE coincidence", dfe_coincidence),
    ("Jacobian correctness", jacobian_correctness),
    ("Conservation and consistency", conservation_and_consistency),
    ("Critical vaccination", critical_vaccination_check),
    ("Lyapunov monotonicity", lyapunov_monotonicity),
]


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.acceptance
@pytest.mark.parametrize("name,fn", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print("\n" + _line(name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for name, fn in CRITERIA:
        ok, detail = fn()
        results.append(ok)
        print(_line(name, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
