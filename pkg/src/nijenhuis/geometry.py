"""Vector fields and (1,1)-tensor fields on a single chart.

Conventions
-----------
* The bracket of vector fields is ``[X, Y]_p = D_pX(Y_p) - D_pY(X_p)``.
* Entry ``(i, j)`` of an operator matrix is the ``i``-th component of ``N e_j``.
* ``dN[..., i, j, k]`` is the partial derivative of entry ``(i, j)`` along ``e_k``,
  so ``(D_w N) a = einsum("ijk,j,k", dN, a, w)``.

All point arguments accept a single point ``(n,)`` or a batch ``(..., n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dsl
from .dsl import Expr
from .errors import DimensionError
from .sampling import as_points

KINDS = ("almost-complex", "almost-product", "almost-tangent")
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class VectorField:
    coords: tuple[str, ...]
    components: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) != len(self.coords):
            raise DimensionError(f"vector field has {len(self.components)} components on a {len(self.coords)}-chart")
        _check_vars(self.components, len(self.coords))

    @classmethod
    def from_strings(cls, coords: Sequence[str], comps: Sequence[str]) -> "VectorField":
        return cls(tuple(coords), tuple(dsl.parse(str(c), coords) for c in comps))

    @classmethod
    def constant(cls, coords: Sequence[str], values) -> "VectorField":
        return cls(tuple(coords), tuple(dsl.const(v) for v in values))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __call__(self, p) -> np.ndarray:
        return dsl.eval_real_many(self.components, p)

    def jets(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Values ``(..., n)`` and Jacobian ``(..., n, n)`` (row = component)."""
        v, g, _ = dsl.eval_jet_many(self.components, p)
        return v, g

    def __add__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.coords, tuple(dsl.add(a, b) for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        _same_chart(self, other)
        return VectorField(self.coords, tuple(dsl.sub(a, b) for a, b in zip(self.components, other.components)))

    def scaled(self, f: Expr | float) -> "VectorField":
        f = f if isinstance(f, Expr) else dsl.const(f)
        return VectorField(self.coords, tuple(dsl.mul(f, c) for c in self.components))

    def to_strings(self) -> list[str]:
        return [dsl.to_string(c) for c in self.components]


@dataclass(frozen=True)
class NOperatorField:
    coords: tuple[str, ...]
    entries: tuple[tuple[Expr, ...], ...]
    _flat: tuple[Expr, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        rows = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        n = len(self.coords)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise DimensionError(f"operator matrix must be {n}x{n}")
        flat = tuple(e for r in rows for e in r)
        _check_vars(flat, n)
        object.__setattr__(self, "_flat", flat)

    @classmethod
    def from_strings(cls, coords: Sequence[str], rows: Sequence[Sequence[str]]) -> "NOperatorField":
        return cls(tuple(coords), tuple(tuple(dsl.parse(str(e), coords) for e in r) for r in rows))

    @classmethod
    def constant(cls, coords: Sequence[str], matrix) -> "NOperatorField":
        a = np.asarray(matrix, dtype=float)
        return cls(tuple(coords), tuple(tuple(dsl.const(x) for x in row) for row in a))

    @classmethod
    def identity(cls, coords: Sequence[str], scale: float = 1.0) -> "NOperatorField":
        return cls.constant(coords, scale * np.eye(len(coords)))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def matrix(self, p) -> np.ndarray:
        n = self.dim
        v = dsl.eval_real_many(self._flat, p)
        return v.reshape(v.shape[:-1] + (n, n))

    def jets(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Matrix ``(..., n, n)`` and derivative ``dN`` of shape ``(..., n, n, n)``."""
        n = self.dim
        v, g, _ = dsl.eval_jet_many(self._flat, p)
        s = v.shape[:-1]
        return v.reshape(s + (n, n)), g.reshape(s + (n, n, n))

    def column(self, j: int) -> VectorField:
        return VectorField(self.coords, tuple(r[j] for r in self.entries))

    def apply(self, X: VectorField) -> VectorField:
        """The vector field ``p -> N_p X_p`` as expressions."""
        _same_chart(self, X)
        return VectorField(self.coords, tuple(
            dsl.total(dsl.mul(e, x) for e, x in zip(row, X.components)) for row in self.entries))

    def __add__(self, other: "NOperatorField") -> "NOperatorField":
        _same_chart(self, other)
        return NOperatorField(self.coords, tuple(
            tuple(dsl.add(a, b) for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def scaled(self, c: float) -> "NOperatorField":
        k = dsl.const(c)
        return NOperatorField(self.coords, tuple(tuple(dsl.mul(k, e) for e in r) for r in self.entries))

    def to_strings(self) -> list[list[str]]:
        return [[dsl.to_string(e) for e in r] for r in self.entries]


@dataclass(frozen=True)
class TorsionReport:
    point: np.ndarray
    pair: tuple[np.ndarray, np.ndarray]
    torsion_value: np.ndarray
    method: str
    norm: float

    def as_dict(self) -> dict:
        return {"point": _floats(self.point), "pair": [_floats(self.pair[0]), _floats(self.pair[1])],
                "torsion_value": _floats(self.torsion_value), "method": self.method, "norm": float(self.norm)}


@dataclass(frozen=True)
class NijenhuisVerdict:
    ok: bool
    tol: float
    worst: TorsionReport | None
    pair_norms: dict

    @property
    def norm(self) -> float:
        return 0.0 if self.worst is None else self.worst.norm


@dataclass(frozen=True)
class StructureVerdict:
    ok: bool
    kind: str
    residual: float
    witness: np.ndarray | None


def _floats(a) -> list[float]:
    return [float(x) for x in np.ravel(a)]


def _check_vars(exprs, n: int):
    for e in exprs:
        v = dsl.variables(e)
        if v and max(v) >= n:
            raise DimensionError(f"expression {dsl.to_string(e)!r} uses a coordinate outside the {n}-chart")


def _same_chart(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _vec(v, p: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != p.shape[-1]:
        raise DimensionError(f"vector of length {v.shape[-1]} on a {p.shape[-1]}-chart")
    return np.broadcast_to(v, np.broadcast_shapes(v.shape, p.shape))


def _point(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != n:
        raise DimensionError(f"point of dimension {p.shape[-1]} on a {n}-chart")
    return p


def matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", A, v)


def directional(dN: np.ndarray, direction: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``(D_direction N) a``: derivative of the matrix field along ``direction``, applied to ``a``."""
    return np.einsum("...ijk,...j,...k->...i", dN, a, direction)


def _bracket(Av, JA, Bv, JB) -> np.ndarray:
    return matvec(JA, Bv) - matvec(JB, Av)


def _apply_jets(Nv, dN, Xv, JX):
    """Value and Jacobian of the field ``N X`` (product rule)."""
    val = matvec(Nv, Xv)
    jac = np.einsum("...ijk,...j->...ik", dN, Xv) + np.einsum("...ij,...jk->...ik", Nv, JX)
    return val, jac


def lie_bracket(X: VectorField, Y: VectorField, p) -> np.ndarray:
    _same_chart(X, Y)
    p = _point(p, X.dim)
    Xv, JX = X.jets(p)
    Yv, JY = Y.jets(p)
    return _bracket(Xv, JX, Yv, JY)


def apply_N(N: NOperatorField, v, p) -> np.ndarray:
    p = _point(p, N.dim)
    return matvec(N.matrix(p), _vec(v, p))


def torsion_from_arrays(Nv: np.ndarray, dN: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Tensor form of the torsion given ``N`` and ``dN`` already evaluated at the points.

    ``T(u, v) = (D_{Nv} N) u - (D_{Nu} N) v - N((D_v N) u - (D_u N) v)``
    """
    Nu, Nv_ = matvec(Nv, u), matvec(Nv, v)
    inner = directional(dN, v, u) - directional(dN, u, v)
    return directional(dN, Nv_, u) - directional(dN, Nu, v) - matvec(Nv, inner)


def torsion_tensor(N: NOperatorField, u, v, p) -> np.ndarray:
    """Torsion at ``p`` of constant vectors ``u``, ``v`` from ``N`` and its first derivative."""
    p = _point(p, N.dim)
    Nv, dN = N.jets(p)
    return torsion_from_arrays(Nv, dN, _vec(u, p), _vec(v, p))


def _field_parts(N: NOperatorField, X: VectorField, Y: VectorField, p):
    _same_chart(N, X)
    _same_chart(N, Y)
    p = _point(p, N.dim)
    Nv, dN = N.jets(p)
    Xv, JX = X.jets(p)
    Yv, JY = Y.jets(p)
    NXv, JNX = _apply_jets(Nv, dN, Xv, JX)
    NYv, JNY = _apply_jets(Nv, dN, Yv, JY)
    return Nv, (Xv, JX), (Yv, JY), (NXv, JNX), (NYv, JNY)


def torsion_definition(N: NOperatorField, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``[NX, NY] - N([NX, Y] + [X, NY] - N[X, Y])`` from brackets of the fields themselves."""
    Nv, X_, Y_, NX, NY = _field_parts(N, X, Y, p)
    inner = _bracket(*NX, *Y_) + _bracket(*X_, *NY) - matvec(Nv, _bracket(*X_, *Y_))
    return _bracket(*NX, *NY) - matvec(Nv, inner)


def contracted_bracket(N: NOperatorField, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``[NX, Y] + [X, NY] - N[X, Y]``."""
    Nv, X_, Y_, NX, NY = _field_parts(N, X, Y, p)
    return _bracket(*NX, *Y_) + _bracket(*X_, *NY) - matvec(Nv, _bracket(*X_, *Y_))


def complex_condition_residual(N: NOperatorField, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``N([X, Y] - [NX, NY]) - [NX, Y] - [X, NY]``; vanishes iff ``X + iNX`` brackets stay in ``Z_+``."""
    Nv, X_, Y_, NX, NY = _field_parts(N, X, Y, p)
    return (matvec(Nv, _bracket(*X_, *Y_) - _bracket(*NX, *NY))
            - _bracket(*NX, *Y_) - _bracket(*X_, *NY))


# symbolic field constructions -------------------------------------------------

def bracket_field(X: VectorField, Y: VectorField) -> VectorField:
    """``[X, Y]`` as a vector field of expressions."""
    _same_chart(X, Y)
    n = X.dim

    def comp(i):
        dX = [dsl.diff(X.components[i], k) for k in range(n)]
        dY = [dsl.diff(Y.components[i], k) for k in range(n)]
        return dsl.sub(dsl.total(dsl.mul(dX[k], Y.components[k]) for k in range(n)),
                       dsl.total(dsl.mul(dY[k], X.components[k]) for k in range(n)))

    return VectorField(X.coords, tuple(comp(i) for i in range(n)))


def contracted_bracket_field(N: NOperatorField, X: VectorField, Y: VectorField) -> VectorField:
    return bracket_field(N.apply(X), Y) + bracket_field(X, N.apply(Y)) - N.apply(bracket_field(X, Y))


def torsion_field(N: NOperatorField, X: VectorField, Y: VectorField) -> VectorField:
    NX, NY = N.apply(X), N.apply(Y)
    inner = bracket_field(NX, Y) + bracket_field(X, NY) - N.apply(bracket_field(X, Y))
    return bracket_field(NX, NY) - N.apply(inner)


def contracted_jacobi(N: NOperatorField, X: VectorField, Y: VectorField, Z: VectorField, p) -> np.ndarray:
    """Cyclic sum ``[[X, Y]_N, Z]_N + [[Y, Z]_N, X]_N + [[Z, X]_N, Y]_N`` at ``p``."""
    total = 0.0
    for a, b, c in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        total = total + contracted_bracket(N, contracted_bracket_field(N, a, b), c, p)
    return total


# sampled verdicts -------------------------------------------------------------

def check_structure(N: NOperatorField, kind: str, samples, tol: float = DEFAULT_TOL) -> StructureVerdict:
    """Test ``N^2 = -id`` / ``id`` / ``0`` (almost complex / product / tangent) at every sample."""
    if kind not in KINDS:
        raise ValueError(f"unknown structure kind {kind!r}; expected one of {KINDS}")
    pts = as_points(samples, N.dim)
    M = N.matrix(pts)
    target = {"almost-complex": -1.0, "almost-product": 1.0, "almost-tangent": 0.0}[kind] * np.eye(N.dim)
    defect = np.abs(M @ M - target).max(axis=(-1, -2))
    i = int(np.argmax(defect))
    worst = float(defect[i])
    return StructureVerdict(worst <= tol, kind, worst, pts[i])


def is_nijenhuis(N: NOperatorField, samples, tol: float = DEFAULT_TOL) -> NijenhuisVerdict:
    """Torsion on all basis pairs ``(e_i, e_j)``, ``i < j``, at every sample.

    Bilinearity makes the basis pairs sufficient.  The worst report is returned.
    """
    n = N.dim
    pts = as_points(samples, n)
    Nv, dN = N.jets(pts)
    eye = np.eye(n)
    worst: TorsionReport | None = None
    pair_norms = {}
    for i in range(n):
        for j in range(i + 1, n):
            T = torsion_from_arrays(Nv, dN, eye[i], eye[j])
            norms = np.abs(T).max(axis=-1)
            k = int(np.argmax(norms))
            pair_norms[(i, j)] = float(norms[k])
            if worst is None or norms[k] > worst.norm:
                worst = TorsionReport(pts[k], (eye[i], eye[j]), T[k], "tensor", float(norms[k]))
    ok = all(v <= tol for v in pair_norms.values())
    return NijenhuisVerdict(ok, tol, worst, pair_norms)
