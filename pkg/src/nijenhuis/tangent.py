"""Canonical flip of TTM and complete (tangent) lifts of fields and operators.

A lift lives on the ``2n``-chart with coordinates ``x1..xn, v1..vn``: the base
point followed by the velocity.  Lifted objects are ordinary expression-valued
fields, so they can be bracketed, applied and lifted again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsl
from .dsl import Expr, Var
from .errors import DimensionError
from .geometry import (
    DEFAULT_TOL,
    NijenhuisVerdict,
    NOperatorField,
    VectorField,
    apply_N,
    bracket_field,
    is_nijenhuis,
    lie_bracket,
    torsion_definition,
    torsion_field,
)
from .sampling import Sampler, as_points


@dataclass(frozen=True)
class TT2Point:
    """Local coordinates ``(x, xdot, deltax, deltaxdot)`` of a point of TTM."""

    x: np.ndarray
    xdot: np.ndarray
    deltax: np.ndarray
    deltaxdot: np.ndarray

    def __post_init__(self):
        blocks = [np.asarray(b, dtype=float) for b in (self.x, self.xdot, self.deltax, self.deltaxdot)]
        if len({b.shape for b in blocks}) != 1:
            raise DimensionError("all four blocks of a TT2Point must have equal length")
        for name, b in zip(("x", "xdot", "deltax", "deltaxdot"), blocks):
            object.__setattr__(self, name, b)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.xdot, self.deltax, self.deltaxdot], axis=-1)


def canonical_flip(w: TT2Point) -> TT2Point:
    """Swap the two velocity slots: ``(x, xdot, dx, dxdot) -> (x, dx, xdot, dxdot)``."""
    return TT2Point(w.x, w.deltax, w.xdot, w.deltaxdot)


def lifted_coords(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n)) + tuple(f"v{i + 1}" for i in range(n))


def _base(e: Expr) -> Expr:
    return dsl.substitute(e, lambda v: Var(f"x{v.index + 1}", v.index))


def _velocity_contraction(e: Expr, n: int) -> Expr:
    """``sum_k (d e / d x_k) * v_k`` rewritten on the lifted chart."""
    return dsl.total(dsl.mul(_base(dsl.diff(e, k)), Var(f"v{k + 1}", n + k)) for k in range(n))


def complete_lift_vf(X: VectorField) -> VectorField:
    """``(x, v) -> (X_x, D_xX(v))``."""
    n = X.dim
    comps = tuple(_base(c) for c in X.components) + tuple(_velocity_contraction(c, n) for c in X.components)
    return VectorField(lifted_coords(n), comps)


def tangent_lift_N(N: NOperatorField) -> NOperatorField:
    """Block operator ``(dx, dv) -> (N_x dx, (D_v N) dx + N_x dv)`` on the lifted chart."""
    n = N.dim
    base = [[_base(e) for e in row] for row in N.entries]
    lower = [[_velocity_contraction(e, n) for e in row] for row in N.entries]
    zero = [dsl.ZERO] * n
    rows = [tuple(base[i] + zero) for i in range(n)] + [tuple(lower[i] + base[i]) for i in range(n)]
    return NOperatorField(lifted_coords(n), tuple(rows))


@dataclass(frozen=True)
class LiftIdentityVerdict:
    ok: bool
    tol: float
    bracket_residual: float
    operator_residual: float
    torsion_residual: float
    witness: np.ndarray

    @property
    def worst(self) -> float:
        return max(self.bracket_residual, self.operator_residual, self.torsion_residual)


def _lift_points(samples, n: int) -> np.ndarray:
    if isinstance(samples, Sampler) and samples.dim == n:
        samples = samples.doubled()
    return as_points(samples, 2 * n)


def verify_lift_identities(N: NOperatorField, X: VectorField, Y: VectorField, samples,
                           tol: float = DEFAULT_TOL) -> LiftIdentityVerdict:
    """Check three identities at every sampled point of the lifted chart.

    * ``[dT X, dT Y] = dT [X, Y]``
    * ``dT(N) dT(X) = dT(N X)`` (and the same for ``Y``)
    * ``T_{dT N}(dT X, dT Y) = dT T_N(X, Y)``

    Left sides are evaluated numerically on the lifted chart; right sides are
    lifts of symbolically built base fields.  A sampler on the base chart is
    doubled (velocities drawn from the same box).
    """
    n = N.dim
    pts = _lift_points(samples, n)
    LX, LY, LN = complete_lift_vf(X), complete_lift_vf(Y), tangent_lift_N(N)

    r_br = np.abs(lie_bracket(LX, LY, pts) - complete_lift_vf(bracket_field(X, Y))(pts)).max(axis=-1)
    r_op = np.maximum(
        np.abs(apply_N(LN, LX(pts), pts) - complete_lift_vf(N.apply(X))(pts)).max(axis=-1),
        np.abs(apply_N(LN, LY(pts), pts) - complete_lift_vf(N.apply(Y))(pts)).max(axis=-1))
    r_t = np.abs(torsion_definition(LN, LX, LY, pts)
                 - complete_lift_vf(torsion_field(N, X, Y))(pts)).max(axis=-1)

    total = np.maximum(np.maximum(r_br, r_op), r_t)
    k = int(np.argmax(total))
    worst = float(total[k])
    return LiftIdentityVerdict(worst <= tol, tol, float(r_br.max()), float(r_op.max()), float(r_t.max()), pts[k])


@dataclass(frozen=True)
class LiftNijenhuisReport:
    base: NijenhuisVerdict
    lift: NijenhuisVerdict

    @property
    def implication_holds(self) -> bool:
        """A Nijenhuis base operator must have a Nijenhuis lift."""
        return self.lift.ok or not self.base.ok


def lift_is_nijenhuis(N: NOperatorField, samples, tol: float = DEFAULT_TOL) -> LiftNijenhuisReport:
    """Torsion of ``N`` on the base chart (at ``tol``) and of ``dT(N)`` upstairs (at ``10 * tol``).

    The base check uses the base block of the lifted samples, so both sides
    look at the same base points.
    """
    n = N.dim
    pts = _lift_points(samples, n)
    base = is_nijenhuis(N, pts[:, :n], tol)
    lift = is_nijenhuis(tangent_lift_N(N), pts, 10 * tol)
    return LiftNijenhuisReport(base, lift)
