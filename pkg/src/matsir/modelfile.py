"""YAML model files and CSV emission.

A model file has five sections::

    meta:       {name: SIR-1}
    dims:       {n: 1, p: 1}
    demography: {lambda: 0.1, mu: 0.1}
    matrices:   {A: [[-0.5]], B: [[5]], W: [[0.5]]}
    vectors:    {nu: [0.9], nu_r: [0], gamma_s: [0.01], gamma_r: [1/6]}

``B`` may be replaced by ``alpha`` and ``b`` (rank-one infection, ``B =
b alpha``). ``W: auto`` is only allowed in that form and gives ``W =
(-A) 1`` with ``p = 1``; such files parse to a :class:`SirPhSpec`.
Scalars accept anything ``float`` does plus ratios such as ``1/6``.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .model import DimensionError, ModelSpec, SirPhSpec

SECTIONS = {
    "meta": ("name",),
    "dims": ("n", "p"),
    "demography": ("lambda", "mu"),
    "matrices": ("A", "B", "alpha", "b", "W"),
    "vectors": ("nu", "nu_r", "gamma_s", "gamma_r"),
}


class ModelFileError(ValueError):
    """Malformed model file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        where = source or "<model>"
        if line is not None:
            where += f", line {line}"
        super().__init__(f"{where}: {message}")


def _line(node) -> int:
    return node.start_mark.line + 1


def _number(node, what: str) -> float:
    if not isinstance(node, yaml.ScalarNode):
        raise ModelFileError(f"{what}: expected a number", _line(node))
    text = node.value.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(Fraction(text.replace(" ", "")))
    except (ValueError, ZeroDivisionError):
        raise ModelFileError(f"{what}: {text!r} is not a number", _line(node)) from None


def _integer(node, what: str) -> int:
    x = _number(node, what)
    if x != int(x) or x < 1:
        raise ModelFileError(f"{what}: expected a positive integer, got {node.value!r}", _line(node))
    return int(x)


def _vector(node, size: int, what: str) -> np.ndarray:
    if isinstance(node, yaml.ScalarNode):
        if size != 1:
            raise ModelFileError(f"{what}: expected a list of {size} numbers", _line(node))
        return np.array([_number(node, what)])
    if not isinstance(node, yaml.SequenceNode):
        raise ModelFileError(f"{what}: expected a list", _line(node))
    if len(node.value) != size:
        raise ModelFileError(f"{what}: expected {size} entries, got {len(node.value)}", _line(node))
    return np.array([_number(e, f"{what}[{k}]") for k, e in enumerate(node.value)])


def _matrix(node, rows: int, cols: int, what: str) -> np.ndarray:
    if not isinstance(node, yaml.SequenceNode):
        raise ModelFileError(f"{what}: expected a list of rows", _line(node))
    if len(node.value) != rows:
        raise ModelFileError(f"{what}: expected {rows} rows, got {len(node.value)}", _line(node))
    out = np.empty((rows, cols))
    for k, row in enumerate(node.value):
        if not isinstance(row, yaml.SequenceNode) or len(row.value) != cols:
            got = len(row.value) if isinstance(row, yaml.SequenceNode) else "a scalar"
            raise ModelFileError(f"{what} row {k}: expected {cols} entries, got {got}", _line(row))
        out[k] = [_number(e, f"{what}[{k}][{j}]") for j, e in enumerate(row.value)]
    return out


def _mapping(node, what: str, allowed) -> dict:
    if not isinstance(node, yaml.MappingNode):
        raise ModelFileError(f"{what}: expected a mapping", _line(node))
    out = {}
    for key, value in node.value:
        k = key.value
        if k not in allowed:
            raise ModelFileError(f"{what}: unknown key {k!r}", _line(key))
        if k in out:
            raise ModelFileError(f"{what}: duplicate key {k!r}", _line(key))
        out[k] = value
    return out


def parse_model(text: str, source: str | None = None) -> ModelSpec | SirPhSpec:
    """Parse model-file text."""
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        raise ModelFileError(f"YAML syntax: {exc.problem}", line, source) from None
    if root is None:
        raise ModelFileError("empty file", None, source)
    try:
        return _build(root)
    except ModelFileError as exc:
        raise ModelFileError(exc.message, exc.line, source) from None


def _build(root):
    top = _mapping(root, "model file", SECTIONS)
    for name in ("dims", "demography", "matrices", "vectors"):
        if name not in top:
            raise ModelFileError(f"missing section {name!r}", _line(root))
    sec = {name: _mapping(top[name], name, SECTIONS[name]) for name in top}

    def need(section, key):
        if key not in sec[section]:
            raise ModelFileError(f"{section}: missing {key!r}", _line(top[section]))
        return sec[section][key]

    name = ""
    if "meta" in sec and "name" in sec["meta"]:
        name = str(sec["meta"]["name"].value)
    n = _integer(need("dims", "n"), "n")
    p = _integer(need("dims", "p"), "p")
    lam = _number(need("demography", "lambda"), "lambda")
    mu = _number(need("demography", "mu"), "mu")

    mats = sec["matrices"]
    A = _matrix(need("matrices", "A"), n, n, "A")
    rank_one = "alpha" in mats or "b" in mats
    if rank_one and "B" in mats:
        raise ModelFileError("give either B or alpha + b, not both", _line(mats["B"]))
    if rank_one:
        alpha = _vector(need("matrices", "alpha"), n, "alpha")
        b = _vector(need("matrices", "b"), n, "b")
        B = np.outer(b, alpha)
    else:
        B = _matrix(need("matrices", "B"), n, n, "B")
    W_node = need("matrices", "W")
    auto_W = isinstance(W_node, yaml.ScalarNode) and W_node.value == "auto"
    if auto_W and not rank_one:
        raise ModelFileError("'W: auto' requires the alpha + b form", _line(W_node))
    if auto_W and p != 1:
        raise ModelFileError(f"'W: auto' needs p = 1, got p = {p}", _line(W_node))

    vec = {k: _vector(need("vectors", k), n if k == "nu" else p, k) for k in SECTIONS["vectors"]}
    try:
        if auto_W:
            return SirPhSpec(alpha=alpha, A=A, b=b, nu=vec["nu"], nu_r=vec["nu_r"][0],
                             gamma_s=vec["gamma_s"][0], gamma_r=vec["gamma_r"][0],
                             lam=lam, mu=mu, name=name)
        W = _matrix(W_node, n, p, "W")
        return ModelSpec(n=n, p=p, lam=lam, mu=mu, A=A, B=B, W=W, name=name, **vec)
    except DimensionError as exc:
        raise ModelFileError(str(exc), _line(root)) from None


def load_model(path) -> ModelSpec | SirPhSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelFileError(f"cannot read file ({exc.strerror})", None, str(path)) from None
    return parse_model(text, str(path))


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def _row(v) -> str:
    return "[" + ", ".join(fmt(x) for x in np.ravel(v)) + "]"


def _mat(M) -> str:
    return "[" + ", ".join(_row(r) for r in np.atleast_2d(M)) + "]"


def dump_model(model: ModelSpec | SirPhSpec) -> str:
    """Model-file text that :func:`parse_model` maps back to an identical spec."""
    # a JSON string is a valid YAML double-quoted scalar
    lines = ["meta:", f"  name: {json.dumps(model.name)}"]
    if isinstance(model, SirPhSpec):
        lines += ["dims:", f"  n: {model.n}", "  p: 1"]
        lines += ["demography:", f"  lambda: {fmt(model.lam)}", f"  mu: {fmt(model.mu)}"]
        lines += ["matrices:", f"  A: {_mat(model.A)}", f"  alpha: {_row(model.alpha)}",
                  f"  b: {_row(model.b)}", "  W: auto"]
        lines += ["vectors:", f"  nu: {_row(model.nu)}", f"  nu_r: {_row([model.nu_r])}",
                  f"  gamma_s: {_row([model.gamma_s])}", f"  gamma_r: {_row([model.gamma_r])}"]
    else:
        lines += ["dims:", f"  n: {model.n}", f"  p: {model.p}"]
        lines += ["demography:", f"  lambda: {fmt(model.lam)}", f"  mu: {fmt(model.mu)}"]
        lines += ["matrices:", f"  A: {_mat(model.A)}", f"  B: {_mat(model.B)}",
                  f"  W: {_mat(model.W)}"]
        lines += ["vectors:"] + [f"  {k}: {_row(getattr(model, k))}" for k in SECTIONS["vectors"]]
    return "\n".join(lines) + "\n"


def save_model(model, path) -> None:
    Path(path).write_text(dump_model(model))


def state_columns(n: int, p: int, unscaled: bool = False) -> list[str]:
    if unscaled:
        return ["S"] + [f"I_{k}" for k in range(1, n + 1)] + [f"R_{k}" for k in range(1, p + 1)]
    return ["s"] + [f"i_{k}" for k in range(1, n + 1)] + [f"r_{k}" for k in range(1, p + 1)]


def write_csv(header, rows, stream=None) -> str | None:
    """Write rows (numbers formatted with :func:`fmt`, other cells as str).

    Returns the text when ``stream`` is None.
    """
    buf = io.StringIO() if stream is None else stream
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(c) if isinstance(c, (float, np.floating, int, np.integer))
                    and not isinstance(c, bool) else str(c) for c in row])
    return buf.getvalue() if stream is None else None
