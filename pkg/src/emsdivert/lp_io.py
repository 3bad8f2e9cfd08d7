"""LP-format model export/import and name=value solution files.

The writer emits the conventional LP text format (Maximize / Subject To /
Bounds / Binaries / End) with deterministic ordering and shortest
round-trip float formatting, so identical models produce byte-identical
files.  The reader parses the same subset back; variable keys of a
re-read model are the LP names themselves, so round-trip comparisons are
structural (bounds, kinds, coefficients), not key-for-key.

Solution files are plain ``name value`` lines; ``#`` starts a comment.
Variables omitted from a solution file default to zero, matching the
convention of solvers that drop zero entries.
"""
from __future__ import annotations

import math
from typing import Iterable, TextIO

import numpy as np

from .model import BINARY, CONTINUOUS, Constraint, MipModel, Variable, VariableIndex


def _fmt(value: float) -> str:
    value = float(value)  # numpy scalars repr as np.float64(...)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _terms_text(terms: Iterable[tuple[int, float]], names: list[str]) -> str:
    parts: list[str] = []
    for vid, coef in terms:
        if coef == 0.0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if parts:
            parts.append(f"{sign} {_fmt(mag)} {names[vid]}")
        else:
            lead = "- " if sign == "-" else ""
            parts.append(f"{lead}{_fmt(mag)} {names[vid]}")
    if not parts:
        return "0 " + names[0]
    return " ".join(parts)


def write_lp(model: MipModel, index: VariableIndex, fh: TextIO) -> None:
    names = [index.lp_name(i) for i in range(len(index))]
    fh.write("\\ extensive-form model export\n")
    fh.write("Maximize\n")
    fh.write(f" obj: {_terms_text(model.objective, names)}\n")
    fh.write("Subject To\n")
    for con in model.constraints:
        cname = con.name.replace(":", "_")
        sense = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        fh.write(
            f" {cname}: {_terms_text(con.terms, names)} {sense} {_fmt(con.rhs)}\n"
        )
    fh.write("Bounds\n")
    for i, v in enumerate(model.variables):
        default = (0.0, 1.0) if v.kind == BINARY else (0.0, math.inf)
        if (v.lower, v.upper) == default:
            continue
        if v.lower == v.upper:
            fh.write(f" {names[i]} = {_fmt(v.lower)}\n")
        elif math.isinf(v.upper):
            fh.write(f" {names[i]} >= {_fmt(v.lower)}\n")
        else:
            fh.write(f" {_fmt(v.lower)} <= {names[i]} <= {_fmt(v.upper)}\n")
    binaries = [names[i] for i, v in enumerate(model.variables) if v.kind == BINARY]
    if binaries:
        fh.write("Binaries\n")
        for start in range(0, len(binaries), 8):
            fh.write(" " + " ".join(binaries[start : start + 8]) + "\n")
    fh.write("End\n")


def write_lp_file(model: MipModel, index: VariableIndex, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_lp(model, index, fh)


class LpParseError(ValueError):
    pass


def _tokenize_expr(text: str) -> list[str]:
    # make signs and comparison operators standalone tokens; two-character
    # operators go through placeholders so the bare "=" pass cannot split
    # an already-isolated "<=" or ">="
    text = text.replace("<=", " \x00 ").replace(">=", " \x01 ")
    text = text.replace("=", " = ")
    text = text.replace("\x00", "<=").replace("\x01", ">=")
    text = text.replace("+", " + ").replace("-", " - ")
    # repair exponent notation split by the sign handling (1e - 06)
    toks = text.split()
    out: list[str] = []
    i = 0
    while i < len(toks):
        tok = toks[i]
        if (
            i + 2 <= len(toks) - 1
            and tok
            and (tok[-1] in "eE")
            and tok[:-1].replace(".", "").isdigit()
            and toks[i + 1] in ("+", "-")
        ):
            out.append(tok + toks[i + 1] + toks[i + 2])
            i += 3
        else:
            out.append(tok)
            i += 1
    return out


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _parse_terms(
    tokens: list[str], name_to_id: dict[str, int], grow
) -> list[tuple[int, float]]:
    terms: list[tuple[int, float]] = []
    sign = 1.0
    coef: float | None = None
    for tok in tokens:
        if tok == "+":
            sign = 1.0
        elif tok == "-":
            sign = -sign
        elif _is_number(tok):
            coef = (coef if coef is not None else 1.0) * float(tok)
        else:
            vid = name_to_id.get(tok)
            if vid is None:
                vid = grow(tok)
            value = sign * (coef if coef is not None else 1.0)
            terms.append((vid, value))
            sign = 1.0
            coef = None
    if coef is not None and coef != 0.0:
        raise LpParseError(f"dangling coefficient {coef!r} in expression")
    return terms


def read_lp(fh: TextIO) -> tuple[MipModel, VariableIndex]:
    """Parse an LP file produced by write_lp (same section subset)."""
    section = None
    objective: list[tuple[int, float]] = []
    constraints: list[Constraint] = []
    index = VariableIndex()
    name_to_id: dict[str, int] = {}
    bounds: dict[int, tuple[float, float]] = {}
    binaries: set[int] = set()

    def grow(name: str) -> int:
        vid = index.add(name)
        name_to_id[name] = vid
        return vid

    for raw in fh:
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("maximize", "minimize", "max", "min"):
            if low.startswith("min"):
                raise LpParseError("only maximization models are supported")
            section = "obj"
            continue
        if low in ("subject to", "st", "s.t.", "such that"):
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary", "bin"):
            section = "bin"
            continue
        if low in ("general", "generals", "integers"):
            raise LpParseError("general integer variables are not supported")
        if low == "end":
            break

        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            objective.extend(_parse_terms(_tokenize_expr(body), name_to_id, grow))
        elif section == "rows":
            if ":" in line:
                cname, body = line.split(":", 1)
                cname = cname.strip()
            else:
                cname, body = f"c{len(constraints)}", line
            toks = _tokenize_expr(body)
            sense_pos = [i for i, t in enumerate(toks) if t in ("<=", ">=", "=")]
            if len(sense_pos) != 1:
                raise LpParseError(f"constraint {cname!r} needs one comparison")
            pos = sense_pos[0]
            lhs = _parse_terms(toks[:pos], name_to_id, grow)
            rhs_toks = toks[pos + 1 :]
            if len(rhs_toks) == 2 and rhs_toks[0] == "-":
                rhs = -float(rhs_toks[1])
            elif len(rhs_toks) == 1:
                rhs = float(rhs_toks[0])
            else:
                raise LpParseError(f"constraint {cname!r} has a non-constant rhs")
            constraints.append(
                Constraint(cname, tuple(lhs), toks[pos], rhs, "imported")
            )
        elif section == "bounds":
            toks = _tokenize_expr(line)
            names = [t for t in toks if not _is_number(t) and t not in ("<=", ">=", "=", "+", "-")]
            if len(names) != 1:
                raise LpParseError(f"cannot parse bounds line {line!r}")
            name = names[0]
            vid = name_to_id.get(name)
            if vid is None:
                vid = grow(name)
            if "=" in toks and "<=" not in toks and ">=" not in toks:
                val = float(toks[-1]) * (-1.0 if toks[-2] == "-" else 1.0)
                bounds[vid] = (val, val)
            elif toks.count("<=") == 2:
                lo = float(toks[0])
                hi = float(toks[-1])
                bounds[vid] = (lo, hi)
            elif ">=" in toks:
                val = float(toks[-1]) * (-1.0 if toks[-2] == "-" else 1.0)
                bounds[vid] = (val, math.inf)
            elif "<=" in toks:
                val = float(toks[-1])
                bounds[vid] = (0.0, val)
            else:
                raise LpParseError(f"cannot parse bounds line {line!r}")
        elif section == "bin":
            for name in line.split():
                vid = name_to_id.get(name)
                if vid is None:
                    vid = grow(name)
                binaries.add(vid)
        elif section is None:
            raise LpParseError(f"content before any section header: {line!r}")

    variables: list[Variable] = []
    for vid in range(len(index)):
        kind = BINARY if vid in binaries else CONTINUOUS
        default = (0.0, 1.0) if kind == BINARY else (0.0, math.inf)
        lo, hi = bounds.get(vid, default)
        variables.append(Variable(index.key_of(vid), kind, lo, hi))

    # merge duplicate objective entries for a canonical form
    merged: dict[int, float] = {}
    for vid, coef in objective:
        merged[vid] = merged.get(vid, 0.0) + coef
    model = MipModel(
        variables=variables,
        constraints=constraints,
        objective=tuple(sorted(merged.items())),
    )
    return model, index


def read_lp_file(path: str) -> tuple[MipModel, VariableIndex]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_lp(fh)


# ---- solution files -----------------------------------------------------

def write_solution_text(
    model: MipModel, index: VariableIndex, assignment: np.ndarray
) -> str:
    lines = [f"# objective {repr(float(model.objective_value(assignment)))}"]
    for vid in range(len(index)):
        lines.append(f"{index.lp_name(vid)} {repr(float(assignment[vid]))}")
    return "\n".join(lines) + "\n"


def read_solution_text(text: str) -> dict[str, float]:
    """Parse name=value solution lines into a dict (zeros may be omitted)."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("\\"):
            continue
        if line.startswith("=obj="):  # objective marker used by some solvers
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LpParseError(
                f"line {lineno}: expected 'name value', got {line!r}"
            )
        name, value = parts
        try:
            values[name] = float(value)
        except ValueError as exc:
            raise LpParseError(
                f"line {lineno}: bad numeric value {value!r}"
            ) from exc
    return values
