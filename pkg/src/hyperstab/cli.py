"""Command-line interface: ``hg``, ``group``, ``circuit`` and ``hshp`` subcommands.

Exit status is 0 on success, 1 when a validation or check fails, 2 on usage
errors (bad flags, unknown names, unreadable files).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .catalog import GroupEntry, UnknownName, get_group, get_hypergroup
from .fileio import ParseError, format_complex, read_circuit, read_group, read_hypergroup, write_hypergroup
from .hypergroup import HypergroupError, validate

DIGITS = 12


class UsageError(Exception):
    pass


# -- output helpers -------------------------------------------------------------------------------


def rational(x: float, max_denominator: int = 100000) -> str | None:
    """``p/q`` when ``x`` is that fraction to 1e-12, else None."""
    f = Fraction(float(x)).limit_denominator(max_denominator)
    return str(f) if abs(float(f) - float(x)) <= 1e-12 else None


def num(x: float):
    return float(f"{float(x):.{DIGITS}g}")


def emit_json(doc) -> str:
    return json.dumps(doc, sort_keys=True)


def tsv(rows) -> str:
    return "\n".join("\t".join(str(c) for c in r) for r in rows) + "\n"


# -- resolution of names and files ---------------------------------------------------------------


def load_hypergroup(ref: str):
    if Path(ref).is_file():
        return read_hypergroup(Path(ref))
    try:
        return get_hypergroup(ref)
    except (UnknownName, KeyError):
        pass
    try:
        return get_group(ref).table
    except (UnknownName, KeyError):
        raise UsageError(f"no hypergroup file or catalog name {ref!r}") from None


def load_group(ref: str) -> GroupEntry:
    if Path(ref).is_file():
        group = read_group(Path(ref))
        return GroupEntry(group.name or Path(ref).stem, group)
    try:
        return get_group(ref)
    except (UnknownName, KeyError):
        raise UsageError(f"no group file or catalog name {ref!r}") from None


def parse_classes(spec: str, table) -> tuple[int, ...]:
    """Comma list of class indices or labels; ``e`` is the identity.  Commas inside parentheses belong to labels."""
    out = []
    for token in re.split(r",(?![^()]*\))", spec):
        token = token.strip()
        if not token:
            continue
        if token == "e":
            out.append(table.identity)
        elif token.lstrip("-").isdigit() and token not in table.labels:
            out.append(int(token))
        elif token in table.labels:
            out.append(table.labels.index(token))
        else:
            raise UsageError(f"unknown class {token!r}")
    if any(not 0 <= x < table.size for x in out):
        raise UsageError("class index out of range")
    return tuple(sorted(set(out) | {table.identity}))


# -- hg ---------------------------------------------------------------------------------------------


def cmd_hg(args) -> int:
    table = load_hypergroup(args.file)
    if args.action == "validate":
        report = validate(table)
        sys.stdout.write(report.to_tsv())
        return 0 if report.passed else 1
    from .characters import compute_characters, dual_hypergroup

    chars = compute_characters(table, seed=args.seed)
    if args.action == "chars":
        rows = [["character", "weight"] + list(table.labels)]
        for mu in range(chars.size):
            rows.append([chars.labels[mu], f"{chars.weights[mu]:.{DIGITS}g}"] + [format_complex(z, DIGITS) for z in chars.values[mu]])
        sys.stdout.write(tsv(rows))
        return 0
    dual = dual_hypergroup(table, chars, seed=args.seed)
    if dual.signed_flag:
        print("dual has negative structure constants", file=sys.stderr)
        return 1
    text = write_hypergroup(dual.table, name=f"{table.name or 'T'}-dual")
    _write_or_print(text, args.out)
    return 0


def _write_or_print(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- group --------------------------------------------------------------------------------------------


def cmd_group(args) -> int:
    entry = load_group(args.file)
    table, part = entry.table, entry.partition
    if args.action == "classes":
        rows = [["class", "label", "size", "representative", "members"]]
        for k, members in enumerate(part.classes):
            rows.append([k, table.labels[k], len(members), int(members[0]), ",".join(str(int(m)) for m in members)])
        sys.stdout.write(tsv(rows))
        text = write_hypergroup(table, name=f"conj-{entry.name}")
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write("\n" + text)
        return 0
    from .hypergroup import enumerate_subhypergroups

    subs = enumerate_subhypergroups(table)
    rows = [["index", "order", "classes"]]
    for k, sub in enumerate(subs):
        order = int(part.sizes[list(sub.members)].sum())
        rows.append([k, order, ",".join(table.labels[m] for m in sub.members)])
    sys.stdout.write(tsv(rows))
    return 0


# -- circuit ------------------------------------------------------------------------------------------


def _outcome_labels(circuit, outcome, tags):
    from .frames import frame_of

    out = []
    for r, x in enumerate(outcome):
        f = frame_of((circuit.registers[r],), (tags[r],))
        out.append(f.basis.labels[x])
    return out


def cmd_circuit(args) -> int:
    from . import circuits as C

    circuit = read_circuit(Path(args.file)) if Path(args.file).is_file() else None
    if circuit is None:
        raise UsageError(f"no circuit file {args.file!r}")
    report = C.validate_circuit(circuit)
    if args.action == "validate":
        if args.format == "json":
            print(emit_json({"ok": report.ok, "issues": report.issues, "final_tags": list(report.final_tags)}))
        else:
            sys.stdout.write(tsv([["ok", str(report.ok).lower()], ["final_tags", ",".join(report.final_tags)]] + [["issue", i] for i in report.issues]))
        return 0 if report.ok else 1
    if not report.ok:
        for issue in report.issues:
            print(issue, file=sys.stderr)
        return 1
    if args.action == "run":
        state = C.simulate_dense(circuit)
        entries = []
        for k in np.flatnonzero(np.abs(state.amplitudes) > 1e-12):
            outcome = tuple(int(x) for x in np.unravel_index(k, state.dims))
            z = state.amplitudes[k]
            entries.append({"outcome": list(outcome), "labels": _outcome_labels(circuit, outcome, state.tags), "re": num(z.real), "im": num(z.imag)})
        if args.format == "json":
            print(emit_json({"tags": list(state.tags), "dims": list(state.dims), "amplitudes": entries}))
        else:
            rows = [["outcome", "labels", "amplitude"]]
            rows += [[",".join(map(str, e["outcome"])), ",".join(e["labels"]), format_complex(complex(e["re"], e["im"]), DIGITS)] for e in entries]
            sys.stdout.write(tsv(rows))
        return 0
    if args.action == "sample":
        tags = circuit.final_tags
        if args.mode == "analytic":
            dist = C.outcome_distribution(circuit)
            items = [(tuple(int(x) for x in np.unravel_index(k, circuit.dims)), float(dist[k])) for k in np.flatnonzero(dist > 1e-15)]
            doc = {"tags": list(tags), "mode": "analytic", "distribution": [
                {"outcome": list(o), "labels": _outcome_labels(circuit, o, tags), "probability": num(p), "exact": rational(p)} for o, p in items]}
        else:
            samples = C.sample_outcomes(circuit, args.shots, args.seed)
            counts = sorted(samples.counts().items())
            doc = {"tags": list(tags), "mode": "shots", "shots": args.shots, "seed": args.seed, "counts": [
                {"outcome": list(o), "labels": _outcome_labels(circuit, o, tags), "count": n} for o, n in counts]}
        if args.format == "json":
            print(emit_json(doc))
        else:
            key = "distribution" if args.mode == "analytic" else "counts"
            rows = [["outcome", "labels", "probability" if key == "distribution" else "count"]]
            for e in doc[key]:
                rows.append([",".join(map(str, e["outcome"])), ",".join(e["labels"]), e["exact"] or e["probability"] if key == "distribution" else e["count"]])
            sys.stdout.write(tsv(rows))
        return 0
    nf = C.normal_form(circuit)
    gates = [_describe(g) for g in nf.monomial]
    doc = {"qft": nf.qft, "monomial": gates, "trailing": [_describe(g) for g in nf.trailing], "output_tags": list(nf.output_tags)}
    if args.format == "json":
        print(emit_json(doc))
    else:
        rows = [["F", "qft" if nf.qft else "identity"]] + [["M", g] for g in gates] + [["D", _describe(g)] for g in nf.trailing]
        sys.stdout.write(tsv(rows))
    return 0


def _describe(gate) -> str:
    from .gates import Automorphism, PauliX, PauliZ, QuadraticPhase

    if isinstance(gate, PauliX):
        return f"px {gate.register} {gate.element}"
    if isinstance(gate, PauliZ):
        return f"pz {gate.register} {gate.param}"
    if isinstance(gate, Automorphism):
        return f"auto {','.join(map(str, gate.registers))} {' '.join(map(str, gate.mapping))}"
    if isinstance(gate, QuadraticPhase):
        return f"quad {','.join(map(str, gate.registers))} {gate.name}"
    return type(gate).__name__


# -- hshp --------------------------------------------------------------------------------------------


def _hidden_from(args, entry) -> tuple[int, ...]:
    spec = args.hidden
    if args.oracle:
        if not args.oracle.startswith("hidden:"):
            raise UsageError(f"--oracle must look like hidden:<class-list>, got {args.oracle!r}")
        spec = args.oracle[len("hidden:") :]
    if spec is None:
        raise UsageError("give --hidden <class-list> or --oracle hidden:<class-list>")
    hidden = parse_classes(spec, entry.table)
    from .hypergroup import closure

    if closure(entry.table, hidden).members != hidden:
        raise UsageError("hidden classes do not form a subhypergroup")
    return hidden


def _one_run(payload):
    kind, ref, hidden, samples, seed = payload
    from . import hshp

    entry = load_group(ref)
    table, chars = entry.table, entry.characters
    if kind == "akr":
        trace = hshp.akr_run(table, chars, hshp.hidden_subgroup_oracle(table, hidden), samples, seed)
        answer = trace.answer
    elif kind == "nilpotent":
        trace = hshp.nilpotent_run(
            table, chars, hshp.hidden_subgroup_oracle(table, hidden), samples, seed, group=entry.group, factors=entry.factor_classes()
        )
        answer = trace.answer
    else:
        from .groups import quotient_group

        elements = entry.partition.union(hidden)
        quotient, coset_of = quotient_group(entry.group, elements)
        factory = hshp.homomorphism_oracle_factory(entry.group, quotient, coset_of)
        trace = hshp.recursive_subgroup_run(entry.group, factory, samples, seed)
        answer = hshp.elements_to_classes(entry.partition, trace.answer)
    return {
        "seed": seed,
        "answer": [table.labels[c] for c in answer],
        "answer_indices": list(answer),
        "recovered": tuple(answer) == tuple(hidden),
        "oracle_calls": trace.oracle_calls,
        "levels": trace.levels,
        "samples": [chars.labels[s] for s in trace.samples],
    }


def cmd_hshp(args) -> int:
    from . import hshp

    if args.action == "checks":
        return _checks(args)
    entry = load_group(args.group)
    table, chars = entry.table, entry.characters
    hidden = _hidden_from(args, entry)
    if args.action == "dist":
        within = parse_classes(args.within, table) if args.within else None
        if within is None:
            dist = hshp.akr_distribution(table, chars, hidden).probabilities
            rows = [(chars.labels[m], chars.weights[m], dist[m]) for m in range(chars.size)]
        else:
            basis = hshp.subhypergroup_coset_basis(table, chars, within)
            probs, outcome_rows = hshp.restricted_distribution(table, basis, hshp.hidden_cosets(table, hidden, within))
            dist = probs @ outcome_rows
            rows = [(chars.labels[r], basis.weights[k], dist[k]) for k, r in enumerate(basis.representatives)]
        if args.format == "json":
            print(emit_json({"group": entry.name, "hidden": list(hidden), "within": list(within) if within else None,
                             "rows": [{"character": c, "weight": num(w), "probability": num(p), "exact": rational(p)} for c, w, p in rows]}))
        else:
            sys.stdout.write(tsv([["character", "weight", "probability"]] + [[c, f"{w:.{DIGITS}g}", rational(p) or f"{p:.{DIGITS}g}"] for c, w, p in rows]))
        return 0
    if args.runs < 1 or args.samples < 1:
        raise UsageError("--runs and --samples must be positive")
    payloads = [(args.action, args.group, hidden, args.samples, args.seed + k) for k in range(args.runs)]
    if args.jobs > 1 and args.runs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            runs = list(pool.map(_one_run, payloads))
    else:
        runs = [_one_run(p) for p in payloads]
    doc = {"algorithm": args.action, "group": entry.name, "hidden": [table.labels[c] for c in hidden],
           "runs": runs, "recovered": sum(r["recovered"] for r in runs)}
    if args.format == "json":
        print(emit_json(doc))
    else:
        rows = [["seed", "recovered", "answer", "oracle_calls", "levels"]]
        rows += [[r["seed"], str(r["recovered"]).lower(), ",".join(r["answer"]), r["oracle_calls"], r["levels"]] for r in runs]
        sys.stdout.write(tsv(rows))
    return 0


def _checks(args) -> int:
    from . import hshp
    from .catalog import get_group as catalog_group
    from .hypergroup import enumerate_subhypergroups

    rows = []
    ok = True
    for n in range(3, 17):
        entry = catalog_group(f"d{2 * n}")
        checks = hshp.dihedral_checks(entry.table, entry.name, enumerate_subhypergroups(entry.table))
        worst = max(c.trivial_probability for c in checks)
        holds = all(c.within_bound for c in checks)
        ok &= holds
        rows.append({"group": entry.name, "kind": "dihedral", "max_trivial_probability": num(worst), "exact": rational(worst), "bound": "2/3", "holds": holds})
    for p in (5, 7, 13):
        entry = catalog_group(f"affine{p}")
        check = hshp.affine_check(entry.group, entry.table, entry.partition, entry.name)
        rows.append({"group": entry.name, "kind": "affine", "max_trivial_probability": num(check.trivial_probability),
                     "exact": rational(check.trivial_probability), "bound": "2/3", "holds": check.within_bound})
    if args.format == "json":
        print(emit_json({"checks": rows, "dihedral_bound_holds": ok}))
    else:
        out = [["group", "kind", "trivial_probability", "exceeds_2/3"]]
        out += [[r["group"], r["kind"], r["exact"] or r["max_trivial_probability"], str(not r["holds"]).lower()] for r in rows]
        sys.stdout.write(tsv(out))
    return 0 if ok else 1


# -- parser -------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperstab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    hg = sub.add_parser("hg", help="hypergroup tables")
    hg.add_argument("action", choices=["validate", "chars", "dual"])
    hg.add_argument("file", help="hypergroup file or catalog name")
    hg.add_argument("--seed", type=int, default=0)
    hg.add_argument("--out")
    hg.set_defaults(func=cmd_hg)

    grp = sub.add_parser("group", help="finite groups and their classes")
    grp.add_argument("action", choices=["classes", "subgroups"])
    grp.add_argument("file", help="group file or catalog name")
    grp.add_argument("--out")
    grp.set_defaults(func=cmd_group)

    circ = sub.add_parser("circuit", help="normalizer circuits")
    circ.add_argument("action", choices=["validate", "run", "sample", "normalform"])
    circ.add_argument("file")
    circ.add_argument("--shots", type=int, default=1000)
    circ.add_argument("--seed", type=int, default=0)
    circ.add_argument("--mode", choices=["shots", "analytic"], default="shots")
    circ.add_argument("--format", choices=["json", "tsv"], default="tsv")
    circ.set_defaults(func=cmd_circuit)

    hs = sub.add_parser("hshp", help="hidden-subhypergroup algorithms")
    hs.add_argument("action", choices=["akr", "nilpotent", "recursive", "dist", "checks"])
    hs.add_argument("--group", default=None)
    hs.add_argument("--oracle")
    hs.add_argument("--hidden")
    hs.add_argument("--within", help="restrict to the classes of K (dist only)")
    hs.add_argument("--samples", type=int, default=20)
    hs.add_argument("--runs", type=int, default=1)
    hs.add_argument("--jobs", type=int, default=1)
    hs.add_argument("--seed", type=int, default=0)
    hs.add_argument("--format", choices=["json", "tsv"], default="tsv")
    hs.set_defaults(func=cmd_hshp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "action", None) not in (None, "checks") and args.command == "hshp" and args.group is None:
        parser.error("--group is required")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except HypergroupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _sub(command: str):
    def entry(argv=None) -> int:
        return main([command] + list(sys.argv[1:] if argv is None else argv))

    return entry


main_hg = _sub("hg")
main_group = _sub("group")
main_circuit = _sub("circuit")
main_hshp = _sub("hshp")


if __name__ == "__main__":
    sys.exit(main())
