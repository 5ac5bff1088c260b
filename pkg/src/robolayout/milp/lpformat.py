"""LP-style plain text export/import and solution text IO.

The dialect is a small subset of the CPLEX LP format: one ``name: expr op rhs``
line per row, explicit bounds for every column, and a ``Binaries`` /
``Generals`` section. Files written here always read back to an identical
model.
"""
from __future__ import annotations

import re

import numpy as np

from .model import EQ, GE, LE, ModelBuilder, MilpModel


def _fmt(v: float) -> str:
    return repr(float(v))


def _expr(coefs) -> str:
    parts = []
    for name, v in coefs:
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(v))} {name}")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def write_lp(model: MilpModel) -> str:
    names = model.var_names
    out = ["\\ robolayout MILP", "Minimize"]
    obj = [(names[j], model.c[j]) for j in np.flatnonzero(model.c)]
    out.append(f" obj: {_expr(obj)}")
    out.append("Subject To")
    A = model.A.tocsr()
    for i, rname in enumerate(model.row_names):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        terms = [(names[j], v) for j, v in zip(A.indices[lo:hi], A.data[lo:hi])]
        out.append(f" {rname}: {_expr(terms)} {model.sense[i]} {_fmt(model.rhs[i])}")
    out.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = model.lb[j], model.ub[j]
        if lo == hi:
            out.append(f" {name} = {_fmt(lo)}")
        else:
            out.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    ints = [names[j] for j in np.flatnonzero(model.is_int)]
    if ints:
        out.append("Generals")
        for k in range(0, len(ints), 8):
            out.append(" " + " ".join(ints[k:k + 8]))
    out.append("End")
    return "\n".join(out) + "\n"


_NUM = r"[+-]?(?:inf|[0-9.]+(?:[eE][+-]?\d+)?)"


def _parse_expr(text: str):
    text = text.strip()
    if text == "0":
        return []
    tokens = text.split()
    terms, sign, coef = [], 1.0, None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms.append((tok, sign * (1.0 if coef is None else coef)))
        sign, coef = 1.0, None
    return terms


def read_lp(text: str) -> MilpModel:
    section = None
    objective: list = []
    rows: list = []
    bounds: dict[str, tuple[float, float]] = {}
    ints: set[str] = set()
    order: list[str] = []
    seen: set[str] = set()

    def note(name):
        if name not in seen:
            seen.add(name)
            order.append(name)

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "generals", "binaries", "end"):
            section = low
            continue
        if section == "minimize":
            _, expr = line.split(":", 1)
            objective = _parse_expr(expr)
            for n, _ in objective:
                note(n)
        elif section == "subject to":
            name, body = line.split(":", 1)
            m = re.match(rf"(.*)\s(<=|>=|=)\s*({_NUM})\s*$", body)
            if not m:
                raise ValueError(f"cannot parse row {line!r}")
            terms = _parse_expr(m.group(1))
            for n, _ in terms:
                note(n)
            rows.append((name.strip(), terms, m.group(2), float(m.group(3))))
        elif section == "bounds":
            m = re.match(rf"({_NUM})\s*<=\s*(\S+)\s*<=\s*({_NUM})$", line)
            if m:
                note(m.group(2))
                bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
                continue
            m = re.match(rf"(\S+)\s*=\s*({_NUM})$", line)
            if not m:
                raise ValueError(f"cannot parse bound {line!r}")
            note(m.group(1))
            bounds[m.group(1)] = (float(m.group(2)), float(m.group(2)))
        elif section in ("generals", "binaries"):
            for n in line.split():
                note(n)
                ints.add(n)
                if section == "binaries":
                    bounds.setdefault(n, (0.0, 1.0))

    # Bounds list every column in declaration order; keep that order.
    order = list(bounds) + [n for n in order if n not in bounds]
    b = ModelBuilder()
    cost = dict(objective)
    index = {}
    for name in order:
        lo, hi = bounds.get(name, (0.0, np.inf))
        index[name] = b.add_var(name, cost.get(name, 0.0), lo, hi, name in ints)
    for name, terms, sense, rhs in rows:
        assert sense in (LE, EQ, GE)
        b.add_row(name, [(index[n], v) for n, v in terms], sense, rhs)
    return b.build()


def write_solution(names, x, objective=None, status=None) -> str:
    lines = []
    if status is not None:
        lines.append(f"# status {status}")
    if objective is not None:
        lines.append(f"# objective {float(objective)!r}")
    lines += [f"{n} {float(v)!r}" for n, v in zip(names, x)]
    return "\n".join(lines) + "\n"


def read_solution(text: str, names) -> np.ndarray:
    index = {n: j for j, n in enumerate(names)}
    x = np.zeros(len(names))
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        n, v = line.split()
        x[index[n]] = float(v)
    return x
