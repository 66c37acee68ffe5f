"""Lab documents: the JSON file format driving the CLI.

A lab file declares a dimension, one state (a ket or a density matrix),
and named factorizations, detector bases and context families.  Complex
numbers are always [re, im] pairs.  Structural problems (wrong shapes,
unknown keys, non-numbers) raise :class:`LabFileError` with the offending
path; domain violations (trace off, non-unitary screens, bad contexts) are
collected by :meth:`LabDocument.validate` so a single run reports them all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .arrangements import DetectorBasis, Factorization
from .contextuality import ContextFamily, validate_context_family
from .errors import LabFileError, TqmError, UnknownBasis, UnknownFamily
from .states import IntensiveStateOfAffairs, density_violations, make_isa

_SECTIONS = {"dim", "state", "factorizations", "bases", "context_families"}


def _require(cond: bool, path: str, reason: str) -> None:
    if not cond:
        raise LabFileError(path, reason)


def _as_number(node, path: str) -> float:
    _require(isinstance(node, (int, float)) and not isinstance(node, bool), path,
             f"expected a number, got {type(node).__name__}")
    return float(node)


def _as_complex(node, path: str) -> complex:
    _require(isinstance(node, list) and len(node) == 2, path,
             "complex numbers must be [re, im] pairs")
    return complex(_as_number(node[0], f"{path}[0]"), _as_number(node[1], f"{path}[1]"))


def _as_vector(node, path: str) -> np.ndarray:
    _require(isinstance(node, list) and node, path, "expected a nonempty list")
    return np.array([_as_complex(x, f"{path}[{i}]") for i, x in enumerate(node)])


def _as_matrix(node, path: str) -> np.ndarray:
    _require(isinstance(node, list) and node, path, "expected a nonempty list of rows")
    rows = [_as_vector(row, f"{path}[{i}]") for i, row in enumerate(node)]
    width = rows[0].shape[0]
    for i, row in enumerate(rows):
        _require(row.shape[0] == width, f"{path}[{i}]",
                 f"row has {row.shape[0]} entries, expected {width}")
    return np.vstack(rows)


def _as_name_map(node, path: str) -> dict:
    if node is None:
        return {}
    _require(isinstance(node, dict), path, "expected an object of named entries")
    for name in node:
        _require(isinstance(name, str) and name, f"{path}.{name}", "names must be nonempty strings")
    return node


@dataclass(frozen=True)
class Diagnostic:
    path: str
    error: str
    detail: str

    def as_dict(self) -> dict:
        return {"path": self.path, "error": self.error, "detail": self.detail}


class LabDocument:
    """Parsed lab file; accessors build validated domain objects on demand."""

    def __init__(
        self,
        dim: int,
        state_kind: str,
        state_array: np.ndarray,
        factorizations: dict[str, tuple[int, ...]],
        bases: dict[str, list[np.ndarray]],
        families: dict[str, ContextFamily],
    ):
        self.dim = dim
        self.state_kind = state_kind
        self.state_array = state_array
        self.factorizations = factorizations
        self.bases_raw = bases
        self.families = families

    # -- domain accessors ---------------------------------------------------

    def density(self) -> np.ndarray:
        if self.state_kind == "ket":
            return linalg.nu_embed(self.state_array)
        return self.state_array

    def isa(self) -> IntensiveStateOfAffairs:
        return make_isa(self.density())

    def basis(self, name: str) -> DetectorBasis:
        if name not in self.bases_raw:
            raise UnknownBasis(f"no basis named {name!r} (have {sorted(self.bases_raw)})")
        return DetectorBasis(self.bases_raw[name])

    def family(self, name: str) -> ContextFamily:
        if name not in self.families:
            raise UnknownFamily(
                f"no context family named {name!r} (have {sorted(self.families)})"
            )
        return self.families[name]

    # -- whole-document validation -------------------------------------------

    def validate(self) -> list[Diagnostic]:
        out: list[Diagnostic] = []
        if self.state_kind == "ket":
            norm = float(np.linalg.norm(self.state_array))
            if abs(norm - 1.0) > linalg.DEFAULT_TOL:
                out.append(Diagnostic("state.ket", "NotNormalized", f"norm is {norm!r}"))
        else:
            for violation in density_violations(self.state_array):
                out.append(Diagnostic("state.density", violation, "density invariant failed"))
        for name in sorted(self.factorizations):
            try:
                Factorization(self.factorizations[name])
            except TqmError as exc:
                out.append(Diagnostic(f"factorizations.{name}", exc.name, str(exc)))
        for name in sorted(self.bases_raw):
            try:
                basis = DetectorBasis(self.bases_raw[name])
            except TqmError as exc:
                out.append(Diagnostic(f"bases.{name}", exc.name, str(exc)))
                continue
            if basis.total_dim > self.dim:
                out.append(Diagnostic(
                    f"bases.{name}", "DimensionMismatch",
                    f"total dim {basis.total_dim} exceeds lab dim {self.dim}",
                ))
        for name in sorted(self.families):
            report = validate_context_family(self.families[name])
            for violation in report.violations:
                out.append(Diagnostic(f"context_families.{name}", "InvalidContextFamily", violation))
        return out


def parse_lab(text: str) -> LabDocument:
    """Parse a lab document from JSON text."""
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise LabFileError("$", f"invalid JSON: {exc}") from None
    _require(isinstance(raw, dict), "$", "top level must be an object")
    unknown = set(raw) - _SECTIONS
    _require(not unknown, "$", f"unknown sections: {sorted(unknown)}")

    _require("dim" in raw, "dim", "missing required section")
    dim_f = _as_number(raw["dim"], "dim")
    _require(dim_f == int(dim_f) and dim_f >= 1, "dim", "dim must be a positive integer")
    dim = int(dim_f)

    _require("state" in raw, "state", "missing required section")
    state = raw["state"]
    _require(isinstance(state, dict), "state", "expected an object")
    keys = set(state)
    _require(keys in ({"ket"}, {"density"}), "state",
             "state must hold exactly one of 'ket' or 'density'")
    if "ket" in state:
        arr = _as_vector(state["ket"], "state.ket")
        _require(arr.shape[0] == dim, "state.ket",
                 f"ket has {arr.shape[0]} components, dim is {dim}")
        kind = "ket"
    else:
        arr = _as_matrix(state["density"], "state.density")
        _require(arr.shape == (dim, dim), "state.density",
                 f"density has shape {arr.shape}, dim is {dim}")
        kind = "density"

    factorizations: dict[str, tuple[int, ...]] = {}
    for name, node in _as_name_map(raw.get("factorizations"), "factorizations").items():
        path = f"factorizations.{name}"
        _require(isinstance(node, list) and node, path, "expected a nonempty list of screen dims")
        dims = []
        for i, d in enumerate(node):
            v = _as_number(d, f"{path}[{i}]")
            _require(v == int(v), f"{path}[{i}]", "screen dims must be integers")
            dims.append(int(v))
        factorizations[name] = tuple(dims)

    bases: dict[str, list[np.ndarray]] = {}
    for name, node in _as_name_map(raw.get("bases"), "bases").items():
        path = f"bases.{name}"
        _require(isinstance(node, list) and node, path,
                 "expected a nonempty list of per-screen matrices")
        screens = []
        for i, screen in enumerate(node):
            m = _as_matrix(screen, f"{path}[{i}]")
            _require(m.shape[0] == m.shape[1], f"{path}[{i}]",
                     f"screen matrix must be square, got {m.shape}")
            screens.append(m)
        bases[name] = screens

    families: dict[str, ContextFamily] = {}
    for name, node in _as_name_map(raw.get("context_families"), "context_families").items():
        path = f"context_families.{name}"
        _require(isinstance(node, dict), path, "expected an object")
        _require(set(node) == {"vectors", "contexts"}, path,
                 "context families need exactly 'vectors' and 'contexts'")
        vecs_node = node["vectors"]
        _require(isinstance(vecs_node, list) and vecs_node, f"{path}.vectors",
                 "expected a nonempty list of vectors")
        vectors = []
        for i, v in enumerate(vecs_node):
            vec = _as_vector(v, f"{path}.vectors[{i}]")
            _require(vec.shape[0] == dim, f"{path}.vectors[{i}]",
                     f"vector has {vec.shape[0]} components, dim is {dim}")
            vectors.append(vec)
        ctx_node = node["contexts"]
        _require(isinstance(ctx_node, list), f"{path}.contexts", "expected a list")
        contexts = []
        for c, ctx in enumerate(ctx_node):
            _require(isinstance(ctx, list), f"{path}.contexts[{c}]", "expected a list of indices")
            idx = []
            for i, k in enumerate(ctx):
                v = _as_number(k, f"{path}.contexts[{c}][{i}]")
                _require(v == int(v), f"{path}.contexts[{c}][{i}]", "indices must be integers")
                idx.append(int(v))
            contexts.append(idx)
        try:
            families[name] = ContextFamily(dim, vectors, contexts)
        except ValueError as exc:
            raise LabFileError(path, str(exc)) from None

    return LabDocument(dim, kind, arr, factorizations, bases, families)


def _reject_constant(name: str):
    raise ValueError(f"non-finite constant {name} is not allowed")


def load_lab(path: str) -> LabDocument:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise LabFileError(path, f"cannot read file: {exc}") from None
    return parse_lab(text)


# -- canonical emission ------------------------------------------------------

def _fmt_float(x: float) -> str:
    # 17 significant digits: enough to reparse any double bit-exactly.
    return format(float(x), ".17g")


def _fmt_value(node, indent: int) -> str:
    pad = " " * indent
    if isinstance(node, dict):
        if not node:
            return "{}"
        items = [
            f'{pad}  "{key}": {_fmt_value(value, indent + 2)}'
            for key, value in node.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(node, list):
        flat = all(not isinstance(x, (dict, list)) for x in node)
        parts = [_fmt_value(x, indent + 2) for x in node]
        if flat:
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(f"{pad}  {p}" for p in parts) + "\n" + pad + "]"
    if isinstance(node, bool):
        return "true" if node else "false"
    if isinstance(node, int):
        return str(node)
    if isinstance(node, float):
        return _fmt_float(node)
    if isinstance(node, str):
        return json.dumps(node)
    raise TypeError(f"cannot serialize {type(node).__name__}")


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def dump_lab(doc: LabDocument) -> str:
    """Canonical text form: sorted names, floats at 17 significant digits."""
    out: dict = {"dim": doc.dim}
    if doc.state_kind == "ket":
        out["state"] = {"ket": [_pair(z) for z in doc.state_array]}
    else:
        out["state"] = {"density": [[_pair(z) for z in row] for row in doc.state_array]}
    if doc.factorizations:
        out["factorizations"] = {
            name: list(doc.factorizations[name]) for name in sorted(doc.factorizations)
        }
    if doc.bases_raw:
        out["bases"] = {
            name: [[[_pair(z) for z in row] for row in screen] for screen in doc.bases_raw[name]]
            for name in sorted(doc.bases_raw)
        }
    if doc.families:
        out["context_families"] = {
            name: {
                "vectors": [[_pair(z) for z in v] for v in doc.families[name].vectors],
                "contexts": [list(c) for c in doc.families[name].contexts],
            }
            for name in sorted(doc.families)
        }
    return _fmt_value(out, 0) + "\n"
