"""Command line interface: ``matsir {validate,report,equilibria,simulate,phase}``.

Exit codes: 0 success, 1 validation failure (model or initial state),
2 parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .dynamics import Variant, removed_nullcline, rhs_scaled
from .equilibria import (ExcludedConfigurationError, classify, disease_free_state,
                         find_equilibria_numeric)
from .integrate import integrate
from .model import (ModelError, ModelSpec, ScaledState, SirPhSpec, UnscaledState, as_model,
                    validate, validate_sirph)
from .modelfile import ModelFileError, fmt, load_model, state_columns, write_csv
from .reproduction import critical_vaccination, is_rank_one, ngm_split

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _violations(spec) -> list:
    return validate_sirph(spec) if isinstance(spec, SirPhSpec) else validate(spec)


def _load_valid(path) -> tuple[ModelSpec | SirPhSpec, ModelSpec]:
    spec = load_model(path)
    bad = _violations(spec)
    if bad:
        raise CliError("invalid model:\n" + "\n".join(map(str, bad)), EXIT_INVALID)
    return spec, as_model(spec)


def _floats(text: str | None, what: str) -> np.ndarray | None:
    if text is None:
        return None
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise CliError(f"--{what}: expected comma-separated numbers, got {text!r}",
                       EXIT_INVALID) from None


def _fit(vals, size, what) -> np.ndarray:
    """Length ``size``; a single value goes into class 1."""
    out = np.zeros(size)
    if vals is None:
        return out
    if vals.size == size:
        return vals
    if vals.size == 1:
        out[0] = vals[0]
        return out
    raise CliError(f"--{what}: expected 1 or {size} values, got {vals.size}", EXIT_INVALID)


def initial_state(model: ModelSpec, s0=None, i0=None, r0=None) -> ScaledState:
    """Default: ``i = 1e-6`` in class 1, ``r = 0``, ``s`` balancing."""
    i = _fit(i0, model.n, "i0") if i0 is not None else _fit(np.array([1e-6]), model.n, "i0")
    r = _fit(r0, model.p, "r0")
    s = 1.0 - i.sum() - r.sum() if s0 is None else float(_fit(s0, 1, "s0")[0])
    x = ScaledState(s, i, r)
    bad = x.simplex_violations()
    if bad:
        raise CliError("initial state is off the simplex: " + "; ".join(bad), EXIT_INVALID)
    return x


def phase_grid(model: ModelSpec, variant, k: int, r_mode: str | None = None) -> list[tuple]:
    """Rows ``(s, i, ds/dt, di/dt)`` on a ``k x k`` grid of the ``(s, i)``
    face with ``s + i <= 1``; infection sits in class 1.

    ``r_mode`` "simplex" puts ``1 - s - i`` in removed class 1; "nullcline"
    uses the ``r`` with ``r' = 0``. The default is "simplex" for SM and
    "nullcline" for FA/IA, whose equilibria lie off the simplex.
    """
    v = Variant.parse(variant)
    if k < 2:
        raise CliError("--grid must be at least 2", EXIT_INVALID)
    mode = r_mode or ("simplex" if v is Variant.SM else "nullcline")
    axis = np.linspace(0.0, 1.0, k)
    rows = []
    for s in axis:
        for iv in axis:
            if s + iv > 1.0 + 1e-12:
                continue
            i = np.zeros(model.n)
            i[0] = iv
            if mode == "simplex":
                r = np.zeros(model.p)
                r[0] = max(0.0, 1.0 - s - iv)
            else:
                r = removed_nullcline(model, v, s, i)
            f = rhs_scaled(model, v, np.concatenate(([s], i, r)))
            rows.append((s, iv, f[0], f[1]))
    return rows


# -- subcommands -------------------------------------------------------------

def cmd_validate(args, out) -> int:
    spec = load_model(args.model)
    bad = _violations(spec)
    for v in bad:
        print(v, file=out)
    if bad:
        return EXIT_INVALID
    print("valid", file=out)
    return EXIT_OK


def cmd_report(args, out) -> int:
    spec, model = _load_valid(args.model)
    v = Variant.parse(args.variant)
    try:
        dfe = disease_free_state(model, v)
    except ExcludedConfigurationError as exc:
        print(f"excluded configuration: {exc}", file=out)
        return EXIT_NUMERIC
    ngm = ngm_split(model, dfe, v)
    report = classify(model, v, dfe, ngm.r0)
    label = model.name or str(args.model)
    print(f"model: {label} (n = {model.n}, p = {model.p}, variant = {v.name})", file=out)
    print(f"s_dfe = {fmt(dfe.s)}", file=out)
    for k, r in enumerate(dfe.r, 1):
        print(f"r_dfe_{k} = {fmt(r)}", file=out)
    if ngm.r_rank_one is not None:
        print(f"R = {fmt(ngm.r_rank_one)}", file=out)
    print(f"R0 = {ngm.r0:.4g} ({fmt(ngm.r0)})", file=out)
    if model.p == 1 and is_rank_one(model.B) and not np.any(model.nu_r):
        cv = critical_vaccination(model)
        note = "" if cv.needed else " (no vaccination needed)"
        print(f"gamma_s* = {fmt(cv.rate)}{note}", file=out)
    else:
        print("gamma_s* = n/a (needs rank-one B, p = 1, nu_r = 0)", file=out)
    print(f"DFE {report.stability} (max Re eig = {fmt(report.max_real)})", file=out)
    return EXIT_OK


def cmd_equilibria(args, out) -> int:
    _, model = _load_valid(args.model)
    v = Variant.parse(args.variant)
    reports = find_equilibria_numeric(model, v)
    header = ["kind"] + state_columns(model.n, model.p) + ["residual", "max_re_eig", "stable"]
    rows = [[r.kind, *r.point.as_vector(), r.residual, r.max_real, str(r.stable).lower()]
            for r in reports]
    write_csv(header, rows, out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    _, model = _load_valid(args.model)
    x0 = initial_state(model, _floats(args.s0, "s0"), _floats(args.i0, "i0"),
                       _floats(args.r0, "r0"))
    if args.samples < 2:
        raise CliError("--samples must be at least 2", EXIT_INVALID)
    ts = np.linspace(args.t0, args.t1, args.samples)
    if args.unscaled:
        y0 = UnscaledState.from_fractions(x0, args.N0)
        tr = integrate(model, None, y0, (args.t0, args.t1), ts, args.rel_tol, args.abs_tol)
        header = ["t"] + state_columns(model.n, model.p, unscaled=True) + ["N", "D", "D_e"]
        rows = [[t, *y] for t, y in zip(tr.times, tr.states)]
    else:
        v = Variant.parse(args.variant)
        tr = integrate(model, v, x0, (args.t0, args.t1), ts, args.rel_tol, args.abs_tol)
        header = ["t"] + state_columns(model.n, model.p) + ["drift"]
        rows = [[t, *x, abs(x.sum() - 1.0)] for t, x in zip(tr.times, tr.states)]
    write_csv(header, rows, out)
    return EXIT_OK


def cmd_phase(args, out) -> int:
    _, model = _load_valid(args.model)
    rows = phase_grid(model, args.variant, args.grid, args.r_mode)
    write_csv(["s", "i", "ds_dt", "di_dt"], rows, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matsir", description="Matrix SIR/V+S epidemic models.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("model", help="YAML model file")
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        sp.set_defaults(func=func)
        return sp

    def variant(sp):
        sp.add_argument("--variant", choices=["sm", "fa", "ia"], default="sm")

    add("validate", cmd_validate, "check structural invariants")
    variant(add("report", cmd_report, "disease-free point, reproduction numbers, verdict"))
    variant(add("equilibria", cmd_equilibria, "CSV of equilibria"))

    sim = add("simulate", cmd_simulate, "CSV trajectory")
    variant(sim)
    sim.add_argument("--t0", type=float, default=0.0)
    sim.add_argument("--t1", type=float, default=400.0)
    sim.add_argument("--samples", type=int, default=401)
    sim.add_argument("--rel-tol", type=float, default=1e-8)
    sim.add_argument("--abs-tol", type=float, default=1e-10)
    sim.add_argument("--s0", help="initial susceptible fraction (default: balance)")
    sim.add_argument("--i0", help="comma list, or one value for class 1 (default 1e-6)")
    sim.add_argument("--r0", help="comma list, or one value for class 1 (default 0)")
    sim.add_argument("--unscaled", action="store_true", help="integrate counts instead")
    sim.add_argument("--N0", type=float, default=1e6, help="initial population (--unscaled)")

    ph = add("phase", cmd_phase, "CSV vector field on the (s, i) face")
    variant(ph)
    ph.add_argument("--grid", type=int, default=21)
    ph.add_argument("--r-mode", choices=["simplex", "nullcline"], default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.output:
            with open(args.output, "w", newline="") as fh:
                return args.func(args, fh)
        return args.func(args, sys.stdout)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ModelFileError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ExcludedConfigurationError as exc:
        print(f"excluded configuration: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
