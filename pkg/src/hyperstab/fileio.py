"""Line-oriented text formats for hypergroups, groups and circuits."""

from __future__ import annotations

import os
from fractions import Fraction
from pathlib import Path

import numpy as np

from .frames import TAGS, Carrier
from .gates import Automorphism, GlobalQFT, PartialQFT, PauliX, PauliZ, QuadraticPhase
from .groups import FiniteGroup
from .hypergroup import HypergroupTable


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or '<text>'}:{line}: " if line is not None else ""
        super().__init__(where + message)


def _lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _read_text(source) -> tuple[str, str | None, Path | None]:
    """Accept a path or literal text; return the text, a display name and the base directory."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and os.path.exists(source)):
        path = Path(source)
        return path.read_text(), str(path), path.parent
    return str(source), None, None


# -- numbers ----------------------------------------------------------------------------------------


def parse_scalar(token: str) -> Fraction | float:
    """``p/q`` or an integer becomes exact; anything else is a float."""
    if "/" in token or token.lstrip("-").isdigit():
        return Fraction(token)
    return float(token)


def format_scalar(value, digits: int | None = None) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if digits is None:
        return repr(float(value))
    return f"{float(value):.{digits}g}"


def format_complex(z: complex, digits: int | None = 12) -> str:
    """``re+imi`` (``re-imi`` for negative imaginary parts)."""
    z = complex(z)
    re_part = format_scalar(z.real + 0.0, digits)
    im = z.imag + 0.0
    sign = "-" if im < 0 or (im == 0 and np.signbit(im)) else "+"
    return f"{re_part}{sign}{format_scalar(abs(im), digits)}i"


def parse_complex(token: str) -> complex:
    token = token.strip()
    if token.endswith("i") and not token.endswith("j"):
        token = token[:-1] + "j"
    return complex(token.replace("+-", "-"))


# -- hypergroups ---------------------------------------------------------------------------------------


def write_hypergroup(table: HypergroupTable, name: str | None = None) -> str:
    name = name or table.name or "hypergroup"
    out = [f"hypergroup {name} {table.size}", f"identity {table.identity}"]
    out.append("involution " + " ".join(str(int(x)) for x in table.involution))
    if all(label and not any(ch.isspace() for ch in label) for label in table.labels):
        out.append("labels " + " ".join(table.labels))
    if table._explicit_weights is not None:
        out.append("weights " + " ".join(repr(float(w)) for w in table._explicit_weights))
    a, b, c, values = table.entries
    if table.is_exact:
        fractions = table.entry_fractions()
        out += [f"n {x} {y} {z} {f}" for x, y, z, f in zip(a.tolist(), b.tolist(), c.tolist(), fractions)]
    else:
        out += [f"n {x} {y} {z} {repr(float(v))}" for x, y, z, v in zip(a.tolist(), b.tolist(), c.tolist(), values)]
    return "\n".join(out) + "\n"


def read_hypergroup(source) -> HypergroupTable:
    text, where, _ = _read_text(source)
    header = None
    identity = 0
    involution = labels = weights = None
    constants: dict[tuple[int, int, int], object] = {}
    for number, tokens in _lines(text):
        key = tokens[0]
        try:
            if key == "hypergroup":
                if len(tokens) != 3:
                    raise ParseError("expected 'hypergroup <name> <size>'", number, where)
                header = (tokens[1], int(tokens[2]))
            elif key == "identity":
                identity = int(tokens[1])
            elif key == "involution":
                involution = [int(t) for t in tokens[1:]]
            elif key == "labels":
                labels = tokens[1:]
            elif key == "weights":
                weights = [float(t) for t in tokens[1:]]
            elif key == "n":
                if len(tokens) != 5:
                    raise ParseError("expected 'n a b c value'", number, where)
                triple = (int(tokens[1]), int(tokens[2]), int(tokens[3]))
                if triple in constants:
                    raise ParseError(f"duplicate constant {triple}", number, where)
                constants[triple] = parse_scalar(tokens[4])
            else:
                raise ParseError(f"unknown directive {key!r}", number, where)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), number, where) from exc
    if header is None:
        raise ParseError("missing 'hypergroup' header", None, where)
    name, size = header
    kwargs = dict(identity=identity, involution=involution, labels=labels, weights=weights, name=name)
    if constants and all(isinstance(v, Fraction) for v in constants.values()):
        return HypergroupTable.from_fractions(size, constants, **kwargs)
    keys = list(constants)
    entries = tuple(np.array([k[i] for k in keys], dtype=np.int64) for i in range(3))
    values = np.array([float(constants[k]) for k in keys], dtype=float)
    return HypergroupTable(size, (*entries, values), **kwargs)


# -- groups ---------------------------------------------------------------------------------------------


def write_group(group: FiniteGroup, name: str | None = None) -> str:
    if group.table is None:
        raise ValueError("law-backed groups have no table to write")
    out = [f"group {name or group.name or 'group'} {group.order}"]
    out += [" ".join(str(int(x)) for x in row) for row in group.table]
    return "\n".join(out) + "\n"


def read_group(source) -> FiniteGroup:
    text, where, _ = _read_text(source)
    lines = list(_lines(text))
    if not lines or lines[0][1][0] != "group" or len(lines[0][1]) != 3:
        raise ParseError("expected 'group <name> <order>' first", lines[0][0] if lines else None, where)
    name, order = lines[0][1][1], int(lines[0][1][2])
    rows = [[int(t) for t in tokens] for _, tokens in lines[1:]]
    if len(rows) != order or any(len(r) != order for r in rows):
        raise ParseError(f"expected {order} rows of {order} entries", None, where)
    table = np.array(rows, dtype=np.int64)
    ids = [x for x in range(order) if np.array_equal(table[x], np.arange(order))]
    if not ids:
        raise ParseError("no identity row", None, where)
    return FiniteGroup(table, identity=ids[0], name=name)


# -- circuits ----------------------------------------------------------------------------------------------


def _resolve_register(token: str, base: Path | None) -> Carrier:
    from .catalog import get_carrier

    for candidate in ([base / token] if base is not None else []) + [Path(token)]:
        if candidate.is_file():
            return Carrier.build(read_hypergroup(candidate))
    return get_carrier(token)


def _read_list(token: str, base: Path | None, parse) -> list:
    path = (base / token) if base is not None else Path(token)
    if not path.is_file():
        path = Path(token)
    return [parse(t) for _, tokens in _lines(path.read_text()) for t in tokens]


def _registers(token: str) -> tuple[int, ...]:
    return tuple(int(x) for x in token.split(","))


def read_circuit(source):
    from .circuits import Circuit

    text, where, base = _read_text(source)
    registers, names = None, None
    tags = labels = None
    gates = []
    seen_header = False
    for number, tokens in _lines(text):
        key, args = tokens[0], tokens[1:]
        try:
            if key == "circuit":
                seen_header = True
            elif key == "registers":
                names = tuple(args)
                registers = tuple(_resolve_register(t, base) for t in args)
            elif key == "input":
                basis = args[0].split(",")
                if any(b not in TAGS for b in basis):
                    raise ParseError(f"basis must be element or dual, got {args[0]!r}", number, where)
                labels = tuple(int(x) for x in args[1:])
                tags = tuple(basis * len(labels)) if len(basis) == 1 else tuple(basis)
            elif key == "qft":
                gates.append(GlobalQFT())
            elif key == "pqft":
                gates.append(PartialQFT(int(args[0])))
            elif key == "px":
                gates.append(PauliX(int(args[0]), int(args[1])))
            elif key == "pz":
                gates.append(PauliZ(int(args[0]), int(args[1])))
            elif key == "auto":
                mapping = tuple(_read_list(args[1], base, int))
                gates.append(Automorphism(_registers(args[0]), mapping, Path(args[1]).stem))
            elif key == "quad":
                values = np.array(_read_list(args[1], base, parse_complex), dtype=complex)
                gates.append(QuadraticPhase(_registers(args[0]), values, Path(args[1]).stem))
            else:
                raise ParseError(f"unknown directive {key!r}", number, where)
        except ParseError:
            raise
        except (ValueError, IndexError, OSError, KeyError) as exc:
            raise ParseError(f"{key}: {exc}", number, where) from exc
    if not seen_header:
        raise ParseError("missing 'circuit' header", None, where)
    if registers is None or tags is None:
        raise ParseError("circuit needs 'registers' and 'input' lines", None, where)
    return Circuit(registers, tags, labels, gates, names)


def write_circuit(circuit, directory, stem: str = "circuit") -> Path:
    """Write ``<stem>.circ`` plus register, map and phase files into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for r, carrier in enumerate(circuit.registers):
        fname = f"{stem}.reg{r}.hg"
        (directory / fname).write_text(write_hypergroup(carrier.table))
        names.append(fname)
    basis = circuit.input_tags[0] if len(set(circuit.input_tags)) == 1 else ",".join(circuit.input_tags)
    out = ["circuit", "registers " + " ".join(names), f"input {basis} " + " ".join(str(x) for x in circuit.input_labels)]
    for k, g in enumerate(circuit.gates):
        regs = ",".join(str(r) for r in getattr(g, "registers", ()))
        if isinstance(g, GlobalQFT):
            out.append("qft")
        elif isinstance(g, PartialQFT):
            out.append(f"pqft {g.register}")
        elif isinstance(g, PauliX):
            out.append(f"px {g.register} {g.element}")
        elif isinstance(g, PauliZ):
            out.append(f"pz {g.register} {g.param}")
        elif isinstance(g, Automorphism):
            fname = f"{stem}.g{k}.map"
            (directory / fname).write_text(" ".join(str(int(x)) for x in g.mapping) + "\n")
            out.append(f"auto {regs} {fname}")
        elif isinstance(g, QuadraticPhase):
            fname = f"{stem}.g{k}.xi"
            (directory / fname).write_text("\n".join(format_complex(z, None) for z in g.values) + "\n")
            out.append(f"quad {regs} {fname}")
    path = directory / f"{stem}.circ"
    path.write_text("\n".join(out) + "\n")
    return path


def circuits_equal(first, second) -> bool:
    if len(first.registers) != len(second.registers):
        return False
    if any(a.table != b.table for a, b in zip(first.registers, second.registers)):
        return False
    if (first.input_tags, first.input_labels) != (second.input_tags, second.input_labels):
        return False
    if len(first.gates) != len(second.gates):
        return False
    for g, h in zip(first.gates, second.gates):
        if type(g) is not type(h):
            return False
        if isinstance(g, QuadraticPhase):
            if g.registers != h.registers or not np.allclose(g.values, h.values, rtol=0, atol=1e-15):
                return False
        elif isinstance(g, Automorphism):
            if (g.registers, tuple(g.mapping)) != (h.registers, tuple(h.mapping)):
                return False
        elif g != h:
            return False
    return True
