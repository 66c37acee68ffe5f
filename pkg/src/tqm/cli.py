"""Command-line surface: validate lab files, list potentia, transport
arrangements, run the invariance checks, contrast valuations, emit DOT graphs.

Exit codes: 0 success/pass, 1 domain failure, 2 usage/parse/I-O.
"""

from __future__ import annotations

import argparse
import datetime
import json
import re
import sys

import numpy as np

from . import linalg
from .arrangements import (
    BasisChange,
    QuantumLab,
    build_arrangement,
    check_basis_invariance,
    check_factorization_invariance,
    power_of_action,
    transform_arrangement,
)
from .contextuality import contextuality_report
from .errors import LabFileError, TqmError, UnresolvablePowerSpec
from .labfile import LabDocument, Diagnostic, dump_lab, load_lab
from .states import Power, clamp01, intensity

DEFAULT_TOL = 1e-9


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tqm",
        description="Intensive-state quantum lab toolkit",
    )
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="threshold for checks and commutation edges (default 1e-9)")
    parser.add_argument("--timestamp", action="store_true",
                        help="prefix output with a generation timestamp header")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate every object in a lab file")
    p.add_argument("lab")
    p.add_argument("--canonical-out", metavar="PATH",
                   help="also write the canonical form of the lab file")

    p = sub.add_parser("intensities", help="potentia of every power of a basis")
    p.add_argument("lab")
    p.add_argument("--basis", required=True)
    p.add_argument("--format", choices=("table", "csv"), default="table")

    p = sub.add_parser("transform", help="transport an arrangement between bases")
    p.add_argument("lab")
    p.add_argument("--from", dest="source", required=True, metavar="NAME")
    p.add_argument("--to", dest="target", required=True, metavar="NAME")

    p = sub.add_parser("check", help="run an invariance check")
    p.add_argument("lab")
    p.add_argument("--theorem", choices=("basis", "factorization"), required=True)
    p.add_argument("--b1", metavar="NAME")
    p.add_argument("--b2", metavar="NAME")
    p.add_argument("--small", metavar="NAME")
    p.add_argument("--big", metavar="NAME")
    p.add_argument("--keep-screens", metavar="LIST",
                   help="comma-separated big-screen numbers for the marginal mode")

    p = sub.add_parser("ks", help="binary vs intensive valuation report")
    p.add_argument("lab")
    p.add_argument("--family", required=True)

    p = sub.add_parser("graph", help="emit the commutation graph of powers as DOT")
    p.add_argument("lab")
    p.add_argument("--powers", required=True, metavar="SPEC",
                   help="';'-separated powers: NAME, NAME[k1,...], or sums with '+'")
    p.add_argument("--out", required=True, metavar="PATH", help="output path ('-' = stdout)")

    return parser


def _header(args) -> str:
    if args.timestamp:
        stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return f"# generated {stamp}\n"
    return ""


def _print_diagnostics(diags: list[Diagnostic]) -> None:
    for d in diags:
        print(json.dumps(d.as_dict()), file=sys.stderr)


def cmd_validate(args) -> int:
    doc = load_lab(args.lab)
    diags = doc.validate()
    if args.canonical_out:
        with open(args.canonical_out, "w", encoding="utf-8") as fh:
            fh.write(dump_lab(doc))
    if diags:
        _print_diagnostics(diags)
        return 1
    counts = (
        f"dim={doc.dim} state={doc.state_kind} "
        f"factorizations={len(doc.factorizations)} bases={len(doc.bases_raw)} "
        f"context_families={len(doc.families)}"
    )
    sys.stdout.write(_header(args) + f"ok: {counts}\n")
    return 0


def cmd_intensities(args) -> int:
    doc = load_lab(args.lab)
    isa = doc.isa()
    basis = doc.basis(args.basis)
    ea = build_arrangement(isa, basis)
    indices = basis.multi_indices()
    diag = clamp01(np.diagonal(ea.flat).real)
    lines = []
    if args.format == "csv":
        header = ",".join(f"k{j + 1}" for j in range(len(basis.screen_dims)))
        lines.append(f"{header},potentia")
        for ks, val in zip(indices, diag):
            lines.append(",".join(str(k) for k in ks) + "," + format(val, ".17g"))
    else:
        width = max(len("index"), *(len("(" + ",".join(map(str, ks)) + ")") for ks in indices))
        lines.append(f"{'index'.ljust(width)}  potentia")
        for ks, val in zip(indices, diag):
            label = "(" + ",".join(map(str, ks)) + ")"
            lines.append(f"{label.ljust(width)}  {format(val, '.12g')}")
    sys.stdout.write(_header(args) + "\n".join(lines) + "\n")
    return 0


def cmd_transform(args) -> int:
    doc = load_lab(args.lab)
    isa = doc.isa()
    source = doc.basis(args.source)
    target = doc.basis(args.target)
    ea = build_arrangement(isa, source)
    moved = transform_arrangement(ea, BasisChange.between(source, target))
    direct = build_arrangement(isa, target)
    dev = float(np.max(np.abs(moved.flat - direct.flat)))
    payload = {
        "source": args.source,
        "target": args.target,
        "target_screen_dims": list(target.screen_dims),
        "coefficients": [
            [[float(z.real), float(z.imag)] for z in row] for row in moved.flat
        ],
        "max_deviation": dev,
    }
    sys.stdout.write(_header(args) + json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_check(args) -> int:
    doc = load_lab(args.lab)
    lab = QuantumLab(doc.isa())
    if args.theorem == "basis":
        if not args.b1 or not args.b2:
            raise UsageError("--theorem basis requires --b1 and --b2")
        report = check_basis_invariance(lab, doc.basis(args.b1), doc.basis(args.b2),
                                        tol=args.tol)
        payload = {
            "theorem": "basis",
            "b1": args.b1,
            "b2": args.b2,
            "max_deviation": report.max_deviation,
            "tol": report.tol,
            "pass": report.passed,
        }
    else:
        if not args.small or not args.big:
            raise UsageError("--theorem factorization requires --small and --big")
        keep = None
        if args.keep_screens:
            keep = [int(s) for s in args.keep_screens.split(",") if s.strip()]
        report = check_factorization_invariance(
            lab, doc.basis(args.small), doc.basis(args.big),
            keep_screens=keep, tol=args.tol,
        )
        payload = {
            "theorem": "factorization",
            "small": args.small,
            "big": args.big,
            "mode": report.mode,
            "max_deviation": report.max_deviation,
            "tol": report.tol,
            "pass": report.passed,
        }
    sys.stdout.write(_header(args) + json.dumps(payload, indent=2) + "\n")
    return 0 if payload["pass"] else 1


def cmd_ks(args) -> int:
    doc = load_lab(args.lab)
    family = doc.family(args.family)
    report = contextuality_report(family, doc.isa(), tol=args.tol)
    if report.binary_exists:
        binary = {
            "exists": True,
            "assignment": {str(i): v for i, v in sorted(report.valuation.assignment.items())},
        }
    else:
        binary = {
            "exists": False,
            "nodes_explored": report.certificate.nodes_explored,
        }
    payload = {
        "family": args.family,
        "vectors": len(family.vectors),
        "contexts": len(family.contexts),
        "vacuous": report.vacuous,
        "binary_valuation": binary,
        "context_sums": [float(s) for s in report.context_sums],
        "max_sum_deviation": report.max_sum_deviation,
        "intensive_consistent": report.intensive_consistent,
    }
    sys.stdout.write(_header(args) + json.dumps(payload, indent=2) + "\n")
    return 0


_ATOM_RE = re.compile(r"^([A-Za-z_][\w-]*)(?:\[([0-9,\s]+)\])?$")


def _resolve_power_spec(spec: str, doc: LabDocument) -> list[tuple[str, Power]]:
    """Expand a power spec into labeled projectors.

    Terms are ';'-separated.  A bare basis name yields all of its powers; a
    bracketed atom one power; '+'-joined atoms a projector sum (which must
    itself be a projector).
    """
    powers: list[tuple[str, Power]] = []
    terms = [t.strip() for t in spec.split(";") if t.strip()]
    for term in terms:
        atoms = [a.strip() for a in term.split("+")]
        if len(atoms) == 1 and _ATOM_RE.match(atoms[0]) and not _ATOM_RE.match(atoms[0]).group(2):
            name = _ATOM_RE.match(atoms[0]).group(1)
            basis = doc.basis(name)
            for ks in basis.multi_indices():
                label = f"{name}[{','.join(map(str, ks))}]"
                powers.append((label, power_of_action(basis, ks)))
            continue
        total = None
        labels = []
        for atom in atoms:
            m = _ATOM_RE.match(atom)
            if not m or not m.group(2):
                raise UnresolvablePowerSpec(
                    f"cannot parse power atom {atom!r} (bare names are only valid alone)"
                )
            name = m.group(1)
            ks = [int(x) for x in m.group(2).split(",")]
            p = power_of_action(doc.basis(name), ks)
            labels.append(f"{name}[{','.join(map(str, ks))}]")
            total = p.matrix if total is None else total + p.matrix
        if not linalg.is_projector(total):
            raise UnresolvablePowerSpec(
                f"sum {'+'.join(labels)} is not a projector (atoms not orthogonal?)"
            )
        powers.append(("+".join(labels), Power(total)))
    return powers


def cmd_graph(args) -> int:
    doc = load_lab(args.lab)
    isa = doc.isa()
    powers = _resolve_power_spec(args.powers, doc)
    if not powers:
        print("warning: empty power spec, emitting empty graph", file=sys.stderr)
    lines = ["graph powers {"]
    for i, (label, p) in enumerate(powers):
        val = intensity(isa, p)
        lines.append(f'  n{i} [label="{label} intensity={format(val, ".12g")}"];')
    for i in range(len(powers)):
        for j in range(i + 1, len(powers)):
            if linalg.commutator_norm(powers[i][1].matrix, powers[j][1].matrix) <= args.tol:
                lines.append(f"  n{i} -- n{j};")
    lines.append("}")
    text = _header(args) + "\n".join(lines) + "\n"
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


class UsageError(Exception):
    pass


_COMMANDS = {
    "validate": cmd_validate,
    "intensities": cmd_intensities,
    "transform": cmd_transform,
    "check": cmd_check,
    "ks": cmd_ks,
    "graph": cmd_graph,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LabFileError as exc:
        print(json.dumps({"path": exc.path, "error": "ParseError", "detail": exc.reason}),
              file=sys.stderr)
        return 2
    except TqmError as exc:
        print(json.dumps({"error": exc.name, "detail": str(exc)}), file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
