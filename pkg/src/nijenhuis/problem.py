"""Problem files: one YAML document per problem, tagged ``format: nijenhuis-problem/1``.

Example::

    format: nijenhuis-problem/1
    name: x_shear
    chart: {coords: [x, y]}
    operators:
      N: [["0", "1"], ["x", "0"]]
    fields:
      X: ["y", "0"]
    fibration: {base_dim: 1, anchor: [0.0], complex: false}
    algebra:
      catalogue: so3            # or structure_constants: c[k][i][j], or dim + brackets
      k_basis: [[0, 0, 1]]
      ad_samples: [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]
      operators: {N: [[1, 0, 0], [0, 1, 0], [0, 0, 2]]}
      complex: false
    sampler: {lo: [-1, -1], hi: [1, 1], count: 64, seed: 42}
    tolerances: {torsion_tol: 1.0e-9, alg_tol: 1.0e-10, fd_step: 1.0e-5}

``brackets`` entries are ``{i: 1, j: 2, value: [0, 0, 1]}`` with 1-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import re

import numpy as np
import yaml

from . import dsl, liealg
from .errors import NijenhuisError, ParseError, ProblemError
from .fibration import SplitFibration
from .geometry import DEFAULT_TOL, NOperatorField, VectorField
from .jets import DiffConfig
from .sampling import DEFAULT_COUNT, DEFAULT_SEED, Sampler

FORMAT_TAG = "nijenhuis-problem/1"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
TOP_LEVEL_KEYS = {"format", "name", "description", "chart", "operators", "fields", "fibration",
                  "algebra", "sampler", "tolerances"}


@dataclass
class AlgebraSpec:
    datum: liealg.HomogeneousDatum
    operators: dict[str, np.ndarray]
    complex: bool = False


@dataclass
class ProblemSpec:
    name: str
    coords: tuple[str, ...] = ()
    operators: dict[str, NOperatorField] = field(default_factory=dict)
    fields: dict[str, VectorField] = field(default_factory=dict)
    fibration: SplitFibration | None = None
    complex_projection: bool = False
    algebra: AlgebraSpec | None = None
    sampler: Sampler | None = None
    torsion_tol: float = DEFAULT_TOL
    alg_tol: float = liealg.DEFAULT_TOL
    diff: DiffConfig = field(default_factory=DiffConfig)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def operator(self, name: str | None) -> tuple[str, NOperatorField]:
        if name is None:
            if len(self.operators) != 1:
                raise ProblemError(f"--operator is required: problem defines {sorted(self.operators)}")
            name = next(iter(self.operators))
        if name not in self.operators:
            raise ProblemError(f"operator {name!r} not found; available: {sorted(self.operators)}")
        return name, self.operators[name]

    def with_overrides(self, tol: float | None = None, seed: int | None = None,
                       samples: int | None = None) -> "ProblemSpec":
        from dataclasses import replace

        out = replace(self)
        if tol is not None:
            if not tol > 0:
                raise ProblemError("--tol must be positive")
            out.torsion_tol = out.alg_tol = float(tol)
        if self.sampler is not None and (seed is not None or samples is not None):
            out.sampler = Sampler(self.sampler.lo, self.sampler.hi,
                                  self.sampler.count if samples is None else samples,
                                  self.sampler.seed if seed is None else seed)
        return out


def bundled_names() -> list[str]:
    root = resources.files("nijenhuis") / "corpus"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_path(ref: str) -> Path:
    p = Path(ref)
    if p.exists():
        return p
    name = ref[:-5] if ref.endswith(".yaml") else ref
    bundled = resources.files("nijenhuis") / "corpus" / f"{name}.yaml"
    if bundled.is_file():
        return Path(str(bundled))
    raise ProblemError(f"problem file {ref!r} not found (bundled examples: {', '.join(bundled_names())})")


def load(ref: str) -> ProblemSpec:
    path = resolve_path(ref)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc}") from exc
    return loads(text, default_name=path.stem)


def loads(text: str, default_name: str = "problem") -> ProblemSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProblemError(f"invalid YAML: {exc}") from exc
    if doc is None:
        raise ProblemError("empty problem file")
    if not isinstance(doc, dict):
        raise ProblemError("problem file must be a mapping")
    return from_dict(doc, default_name)


def _require(cond: bool, msg: str):
    if not cond:
        raise ProblemError(msg)


def _floats(x, where: str) -> list[float]:
    try:
        out = [float(v) for v in x]
    except (TypeError, ValueError):
        raise ProblemError(f"{where}: expected a list of numbers") from None
    _require(all(np.isfinite(out)), f"{where}: numbers must be finite")
    return out


def _parse_at(where: str, build):
    try:
        return build()
    except ParseError as exc:
        raise ProblemError(f"{where}: {exc.reason} at {exc.span.start}..{exc.span.end} in {exc.text!r}") from exc
    except NijenhuisError as exc:
        raise ProblemError(f"{where}: {exc}") from exc


def from_dict(doc: dict, default_name: str = "problem") -> ProblemSpec:
    _require(doc.get("format") == FORMAT_TAG, f"missing or unsupported format tag (expected {FORMAT_TAG!r})")
    unknown = set(doc) - TOP_LEVEL_KEYS
    _require(not unknown, f"unknown top-level keys: {sorted(unknown)}")
    spec = ProblemSpec(name=str(doc.get("name", default_name)))

    tol = doc.get("tolerances") or {}
    _require(isinstance(tol, dict), "tolerances must be a mapping")
    try:
        spec.torsion_tol = float(tol.get("torsion_tol", DEFAULT_TOL))
        spec.alg_tol = float(tol.get("alg_tol", liealg.DEFAULT_TOL))
        spec.diff = DiffConfig(float(tol.get("fd_step", 1e-5)))
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"tolerances: {exc}") from exc
    _require(spec.torsion_tol > 0 and spec.alg_tol > 0, "tolerances must be positive")

    chart = doc.get("chart")
    if chart is not None:
        _require(isinstance(chart, dict) and isinstance(chart.get("coords"), list), "chart.coords must be a list")
        coords = tuple(str(c) for c in chart["coords"])
        _require(1 <= len(coords) <= 64, "chart dimension must be between 1 and 64")
        _require(len(set(coords)) == len(coords), "chart coordinate names must be distinct")
        for c in coords:
            _require(_IDENT.fullmatch(c) is not None and c not in dsl.FUNCTIONS, f"invalid coordinate name {c!r}")
        if "dim" in chart:
            _require(chart["dim"] == len(coords), "chart.dim does not match the number of coordinates")
        spec.coords = coords
        _load_chart_objects(doc, spec)
    else:
        for key in ("operators", "fields", "fibration"):
            _require(key not in doc, f"{key} requires a chart")

    if "algebra" in doc:
        spec.algebra = _load_algebra(doc["algebra"])

    _require(spec.operators or spec.algebra is not None, "problem defines neither chart operators nor an algebra")
    return spec


def _load_chart_objects(doc: dict, spec: ProblemSpec):
    coords, n = spec.coords, len(spec.coords)
    ops = doc.get("operators") or {}
    _require(isinstance(ops, dict), "operators must be a mapping of name -> matrix")
    for name, rows in ops.items():
        where = f"operators.{name}"
        _require(isinstance(rows, list) and len(rows) == n and all(isinstance(r, list) and len(r) == n for r in rows),
                 f"{where}: expected a {n}x{n} matrix of expressions")
        entries = []
        for i, row in enumerate(rows):
            entries.append(tuple(_parse_at(f"{where}[{i}][{j}]", lambda e=e: _parse_entry(e, coords))
                                 for j, e in enumerate(row)))
        spec.operators[str(name)] = NOperatorField(coords, tuple(entries))

    flds = doc.get("fields") or {}
    _require(isinstance(flds, dict), "fields must be a mapping of name -> components")
    for name, comps in flds.items():
        where = f"fields.{name}"
        _require(isinstance(comps, list) and len(comps) == n, f"{where}: expected {n} components")
        parsed = tuple(_parse_at(f"{where}[{i}]", lambda e=e: _parse_entry(e, coords)) for i, e in enumerate(comps))
        spec.fields[str(name)] = VectorField(coords, parsed)

    fib = doc.get("fibration")
    if fib is not None:
        _require(isinstance(fib, dict) and "base_dim" in fib, "fibration.base_dim is required")
        try:
            spec.fibration = SplitFibration(int(fib["base_dim"]), n - int(fib["base_dim"]),
                                            None if fib.get("anchor") is None else _floats(fib["anchor"], "fibration.anchor"))
        except (ValueError, NijenhuisError) as exc:
            raise ProblemError(f"fibration: {exc}") from exc
        spec.complex_projection = bool(fib.get("complex", False))

    smp = doc.get("sampler") or {}
    _require(isinstance(smp, dict), "sampler must be a mapping")
    lo = _floats(smp.get("lo", [-1.0] * n), "sampler.lo")
    hi = _floats(smp.get("hi", [1.0] * n), "sampler.hi")
    _require(len(lo) == n and len(hi) == n, f"sampler box must have {n} entries per bound")
    try:
        spec.sampler = Sampler(lo, hi, int(smp.get("count", DEFAULT_COUNT)), int(smp.get("seed", DEFAULT_SEED)))
    except (ValueError, NijenhuisError) as exc:
        raise ProblemError(f"sampler: {exc}") from exc


def _parse_entry(e, coords):
    _require(isinstance(e, (str, int, float)) and not isinstance(e, bool), f"expected an expression, got {e!r}")
    return dsl.parse(str(e), coords)


def _matrix(x, n: int, where: str) -> np.ndarray:
    try:
        a = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise ProblemError(f"{where}: expected a numeric matrix") from None
    _require(a.shape == (n, n), f"{where}: expected a {n}x{n} matrix")
    _require(bool(np.all(np.isfinite(a))), f"{where}: entries must be finite")
    return a


def _load_algebra(a) -> AlgebraSpec:
    _require(isinstance(a, dict), "algebra must be a mapping")
    sources = [k for k in ("catalogue", "structure_constants", "brackets") if k in a]
    _require(len(sources) == 1, "algebra needs exactly one of catalogue, structure_constants, brackets")
    if "catalogue" in a:
        try:
            alg = liealg.catalogue(str(a["catalogue"]))
        except KeyError:
            raise ProblemError(f"unknown catalogue algebra {a['catalogue']!r}; known: {liealg.CATALOGUE}") from None
    elif "structure_constants" in a:
        try:
            c = np.asarray(a["structure_constants"], dtype=float)
        except (TypeError, ValueError):
            raise ProblemError("algebra.structure_constants must be a numeric n x n x n array") from None
        alg = liealg.LieAlgebra(c)
    else:
        _require("dim" in a, "algebra.brackets requires algebra.dim")
        n = int(a["dim"])
        _require(n >= 1, "algebra.dim must be >= 1")
        table = {}
        for entry in a["brackets"] or []:
            _require(isinstance(entry, dict) and {"i", "j", "value"} <= set(entry),
                     "each bracket needs i, j, value")
            i, j = int(entry["i"]) - 1, int(entry["j"]) - 1
            _require(0 <= i < n and 0 <= j < n and i != j, f"bracket indices ({i + 1}, {j + 1}) out of range")
            table[(i, j)] = _floats(entry["value"], f"bracket [e{i + 1}, e{j + 1}]")
        alg = liealg.LieAlgebra.from_brackets(n, table)
    n = alg.dim
    kb = a.get("k_basis") or []
    _require(isinstance(kb, list), "algebra.k_basis must be a list of vectors")
    k_basis = np.array([_floats(v, "algebra.k_basis") for v in kb]) if kb else np.zeros((0, n))
    _require(k_basis.shape[1:] == (n,), f"algebra.k_basis vectors must have length {n}")
    ads = tuple(_matrix(m, n, f"algebra.ad_samples[{s}]") for s, m in enumerate(a.get("ad_samples") or []))
    datum = liealg.HomogeneousDatum(alg, k_basis, ads)
    ops = a.get("operators") or {}
    _require(isinstance(ops, dict) and ops, "algebra.operators must name at least one matrix")
    operators = {str(k): _matrix(v, n, f"algebra.operators.{k}") for k, v in ops.items()}
    return AlgebraSpec(datum, operators, bool(a.get("complex", False)))

