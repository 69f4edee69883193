"""Fibrations in adapted coordinates ``(x, y) -> x`` and projectable operators.

The first ``base_dim`` chart coordinates are the base, the remaining ones the
fiber.  Against this split an operator has blocks ``[[A, B], [C, D]]``; it is
projectable exactly when ``B = 0`` and ``A`` does not depend on ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import dsl
from .dsl import Var
from .errors import DimensionError, PreconditionError
from .geometry import (
    DEFAULT_TOL,
    NOperatorField,
    VectorField,
    check_structure,
    is_nijenhuis,
    lie_bracket,
    matvec,
    torsion_from_arrays,
)
from .sampling import as_points


@dataclass(frozen=True)
class SplitFibration:
    base_dim: int
    fiber_dim: int
    anchor: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.base_dim < 1 or self.fiber_dim < 1:
            raise ValueError("base and fiber dimensions must both be >= 1")
        anchor = (0.0,) * self.fiber_dim if self.anchor is None else tuple(float(a) for a in self.anchor)
        if len(anchor) != self.fiber_dim:
            raise DimensionError(f"anchor has {len(anchor)} entries, fiber dimension is {self.fiber_dim}")
        object.__setattr__(self, "anchor", anchor)

    @property
    def dim(self) -> int:
        return self.base_dim + self.fiber_dim

    def project(self, v) -> np.ndarray:
        """Tangent map of the projection: keep the base block."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise DimensionError(f"vector of length {v.shape[-1]} on a {self.dim}-dimensional total space")
        return v[..., : self.base_dim]

    def check(self, N: NOperatorField):
        if N.dim != self.dim:
            raise DimensionError(f"operator has dimension {N.dim}, fibration total space has {self.dim}")


@dataclass(frozen=True)
class ComplexTangent:
    re: np.ndarray
    im: np.ndarray

    def __post_init__(self):
        re, im = np.asarray(self.re, dtype=float), np.asarray(self.im, dtype=float)
        if re.shape != im.shape:
            raise DimensionError("real and imaginary parts must have equal length")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)


def is_vertical(v, fib: SplitFibration, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.abs(fib.project(v)).max(initial=0.0) <= tol)


@dataclass(frozen=True)
class ProjectabilityVerdict:
    ok: bool
    tol: float
    mixed_block_norm: float
    fiber_derivative_norm: float
    witness: np.ndarray
    witness_block: str
    base_operator: NOperatorField | None


def base_block(N: NOperatorField, fib: SplitFibration) -> NOperatorField:
    """``A(x, y0)`` on the base chart, with the fiber frozen at the anchor."""
    n0 = fib.base_dim
    anchor = fib.anchor

    def freeze(v: Var):
        return dsl.const(anchor[v.index - n0]) if v.index >= n0 else v

    rows = tuple(tuple(dsl.substitute(e, freeze) for e in row[:n0]) for row in N.entries[:n0])
    return NOperatorField(N.coords[:n0], rows)


def check_projectable(N: NOperatorField, fib: SplitFibration, samples, tol: float = DEFAULT_TOL) -> ProjectabilityVerdict:
    """Block test: ``max|B| <= tol`` and ``max|dA/dy| <= tol`` at every sample.

    On success the projected operator ``A(x, y0)`` is returned as ``base_operator``.
    """
    fib.check(N)
    n0 = fib.base_dim
    pts = as_points(samples, N.dim)
    M, dM = N.jets(pts)
    B = np.abs(M[:, :n0, n0:]).max(axis=(-1, -2))
    dA = np.abs(dM[:, :n0, :n0, n0:]).max(axis=(-1, -2, -3))
    kb, ka = int(np.argmax(B)), int(np.argmax(dA))
    b_worst, a_worst = float(B[kb]), float(dA[ka])
    ok = b_worst <= tol and a_worst <= tol
    if b_worst >= a_worst:
        witness, block = pts[kb], "B"
    else:
        witness, block = pts[ka], "dA/dy"
    return ProjectabilityVerdict(ok, tol, b_worst, a_worst, witness, block, base_block(N, fib) if ok else None)


def _require_projectable(N, fib, samples, tol) -> NOperatorField:
    v = check_projectable(N, fib, samples, tol)
    if not v.ok:
        raise PreconditionError(
            f"operator is not projectable: |{v.witness_block}| = {max(v.mixed_block_norm, v.fiber_derivative_norm):.3e}"
            f" at {list(map(float, v.witness))}")
    return v.base_operator


@dataclass(frozen=True)
class TheoremMainReport:
    tol: float
    identity_residual: float
    vertical_defect: float
    base_torsion: float
    witness: np.ndarray
    base_operator: NOperatorField

    @property
    def identity_ok(self) -> bool:
        return self.identity_residual <= self.tol

    @property
    def torsion_vertical(self) -> bool:
        return self.vertical_defect <= self.tol

    @property
    def base_nijenhuis(self) -> bool:
        return self.base_torsion <= self.tol

    @property
    def iff_agrees(self) -> bool:
        return self.torsion_vertical == self.base_nijenhuis


def check_theorem_main(N: NOperatorField, fib: SplitFibration, samples, tol: float = DEFAULT_TOL) -> TheoremMainReport:
    """Compare the projected torsion of ``N`` with the torsion of the projected operator.

    For every sample ``p`` and basis pair ``(u, v)`` this evaluates
    ``(a) = T tau (T_N(u, v))`` upstairs and ``(b) = T_{N0}(T tau u, T tau v)`` at
    ``tau(p)`` and records ``max|a - b|``, ``max|a|`` and ``max|b|``.
    """
    N0 = _require_projectable(N, fib, samples, tol)
    n, n0 = N.dim, fib.base_dim
    pts = as_points(samples, n)
    M, dM = N.jets(pts)
    M0, dM0 = N0.jets(pts[:, :n0])
    eye = np.eye(n)
    resid = np.zeros(len(pts))
    vert = np.zeros(len(pts))
    base = np.zeros(len(pts))
    for i in range(n):
        for j in range(i + 1, n):
            a = fib.project(torsion_from_arrays(M, dM, eye[i], eye[j]))
            b = torsion_from_arrays(M0, dM0, fib.project(eye[i]), fib.project(eye[j]))
            resid = np.maximum(resid, np.abs(a - b).max(axis=-1))
            vert = np.maximum(vert, np.abs(a).max(axis=-1))
            base = np.maximum(base, np.abs(b).max(axis=-1))
    k = int(np.argmax(resid))
    return TheoremMainReport(tol, float(resid[k]), float(vert.max()), float(base.max()), pts[k], N0)


def zhat_residual(w: ComplexTangent, N: NOperatorField, fib: SplitFibration, p, sign: int = 1) -> float:
    """Distance of ``w = X + iY`` from the set ``Y -/+ N X`` vertical, in the max-norm of the base block."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = w.im - sign * matvec(N.matrix(p), w.re)
    return float(np.abs(fib.project(d)).max(initial=0.0))


def square_plus_id_defect(N: NOperatorField, fib: SplitFibration, pts: np.ndarray) -> np.ndarray:
    """Per-sample max of the base block of ``N^2 u + u`` over basis vectors ``u``."""
    M = N.matrix(pts)
    S = M @ M + np.eye(N.dim)
    return np.abs(S[:, : fib.base_dim, :]).max(axis=(-1, -2))


@dataclass(frozen=True)
class InvolutivityVerdict:
    ok: bool
    tol: float
    precheck_ok: bool
    precheck_residual: float
    bracket_residual: float
    witness_pair: tuple[str, str] | None
    witness: np.ndarray | None


def _zhat_frame(N: NOperatorField, fib: SplitFibration, sign: int) -> list[tuple[str, VectorField, VectorField]]:
    n, n0 = N.dim, fib.base_dim
    eye = np.eye(n)
    zero = VectorField.constant(N.coords, np.zeros(n))
    frame = []
    for a in range(n0):
        im = N.column(a) if sign == 1 else N.column(a).scaled(-1.0)
        frame.append((f"E{a + 1}+iNE{a + 1}", VectorField.constant(N.coords, eye[a]), im))
    for b in range(n0, n):
        frame.append((f"W{b - n0 + 1}", VectorField.constant(N.coords, eye[b]), zero))
    return frame


def check_involutivity_zhat(N: NOperatorField, fib: SplitFibration, samples, tol: float = DEFAULT_TOL,
                            sign: int = 1) -> InvolutivityVerdict:
    """Involutivity of ``Zhat_+`` (``sign=-1``: ``Zhat_-``) on a spanning frame.

    The frame is ``E_a + i N E_a`` for base directions plus the vertical
    coordinate fields.  ``Zhat`` is a complex distribution only when
    ``N^2 + id`` is vertical; that precheck runs first and a failure there is
    reported as such, without bracket residuals.
    """
    n = N.dim
    _require_projectable(N, fib, samples, tol)
    pts = as_points(samples, n)
    pre = square_plus_id_defect(N, fib, pts)
    pre_worst = float(pre.max())
    if pre_worst > tol:
        k = int(np.argmax(pre))
        return InvolutivityVerdict(False, tol, False, pre_worst, float("nan"), None, pts[k])
    M = N.matrix(pts)
    frame = _zhat_frame(N, fib, sign)
    worst, pair, where = 0.0, None, None
    for i in range(len(frame)):
        for j in range(i + 1, len(frame)):
            la, A, B = frame[i]
            lc, C, D = frame[j]
            re = lie_bracket(A, C, pts) - lie_bracket(B, D, pts)
            im = lie_bracket(A, D, pts) + lie_bracket(B, C, pts)
            r = np.abs(fib.project(im - sign * matvec(M, re))).max(axis=-1)
            k = int(np.argmax(r))
            if pair is None or r[k] > worst:
                worst, pair, where = float(r[k]), (la, lc), pts[k]
    return InvolutivityVerdict(worst <= tol, tol, True, pre_worst, worst, pair, where)


@dataclass(frozen=True)
class ComplexProjectionVerdict:
    ok: bool
    fibration_route: bool
    direct_route: bool
    involutivity: InvolutivityVerdict
    base_structure_residual: float
    base_torsion: float

    @property
    def routes_agree(self) -> bool:
        return self.fibration_route == self.direct_route


def check_complex_projection(N: NOperatorField, fib: SplitFibration, samples,
                             tol: float = DEFAULT_TOL) -> ComplexProjectionVerdict:
    """Does ``N`` project onto a complex structure?

    Fibration route: ``N^2 + id`` vertical and ``Zhat_+`` involutive upstairs.
    Direct route: the projected operator squares to ``-id`` and is Nijenhuis
    at the projected samples.
    """
    N0 = _require_projectable(N, fib, samples, tol)
    pts = as_points(samples, N.dim)
    inv = check_involutivity_zhat(N, fib, pts, tol)
    base_pts = pts[:, : fib.base_dim]
    structure = check_structure(N0, "almost-complex", base_pts, tol)
    torsion = is_nijenhuis(N0, base_pts, tol)
    direct = structure.ok and torsion.ok
    return ComplexProjectionVerdict(inv.ok, inv.ok, direct, inv, structure.residual, torsion.norm)


def split(coords: Sequence[str], base_dim: int, anchor=None) -> SplitFibration:
    return SplitFibration(base_dim, len(coords) - base_dim, anchor)
