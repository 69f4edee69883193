"""Order-2 forward-mode jets and a central-difference oracle.

A :class:`Jet2` carries the value, gradient and Hessian of a scalar function
at a point.  All arrays may carry leading batch dimensions, so one jet can
represent the same expression evaluated at many points at once:
``value.shape == S``, ``grad.shape == S + (n,)``, ``hess.shape == S + (n, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, DomainError

MAX_DIM = 64


@dataclass(frozen=True)
class DiffConfig:
    """Central-difference steps for the finite-difference oracle."""

    fd_step: float = 1e-5
    fd_step2: float = 1e-4

    def __post_init__(self):
        for name in ("fd_step", "fd_step2"):
            h = getattr(self, name)
            if not 1e-8 <= h <= 1e-2:
                raise ValueError(f"{name}={h} outside [1e-8, 1e-2]")


@dataclass(frozen=True, eq=False)
class Jet2:
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def dim(self) -> int:
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, c: float, n: int, shape: tuple = ()) -> "Jet2":
        return cls(np.full(shape, float(c)), np.zeros(shape + (n,)), np.zeros(shape + (n, n)))

    def __add__(self, other):
        return jet_add(self, _as_jet(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return jet_sub(self, _as_jet(other, self))

    def __rsub__(self, other):
        return jet_sub(_as_jet(other, self), self)

    def __mul__(self, other):
        return jet_mul(self, _as_jet(other, self))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return jet_div(self, _as_jet(other, self))

    def __rtruediv__(self, other):
        return jet_div(_as_jet(other, self), self)

    def __neg__(self):
        return jet_neg(self)

    def __pow__(self, k: int):
        return jet_pow(self, k)

    def __repr__(self):
        return f"Jet2(value={self.value!r}, grad={self.grad!r}, hess={self.hess!r})"


def _as_jet(x, like: Jet2) -> Jet2:
    if isinstance(x, Jet2):
        return x
    return Jet2.constant(x, like.dim, np.shape(like.value))


def jet_lift_var(index: int, point) -> Jet2:
    """Jet of the coordinate function ``x[index]`` at ``point`` (shape ``(..., n)``)."""
    p = np.asarray(point, dtype=float)
    n = p.shape[-1]
    if not 0 <= index < n:
        raise DimensionError(f"coordinate index {index} out of range for dimension {n}")
    if n > MAX_DIM:
        raise DimensionError(f"chart dimension {n} exceeds {MAX_DIM}")
    shape = p.shape[:-1]
    grad = np.zeros(shape + (n,))
    grad[..., index] = 1.0
    return Jet2(p[..., index].copy(), grad, np.zeros(shape + (n, n)))


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


def _sym_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    o = _outer(a, b)
    return o + np.swapaxes(o, -1, -2)


def _chain(u: Jet2, value, d1, d2) -> Jet2:
    """Compose a scalar function (value, f', f'' evaluated at u) with the jet u."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    grad = d1[..., None] * u.grad
    hess = d1[..., None, None] * u.hess + d2[..., None, None] * _outer(u.grad, u.grad)
    return Jet2(np.asarray(value, dtype=float), grad, hess)


def jet_add(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(a.value + b.value, a.grad + b.grad, a.hess + b.hess)


def jet_sub(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(a.value - b.value, a.grad - b.grad, a.hess - b.hess)


def jet_neg(a: Jet2) -> Jet2:
    return Jet2(-a.value, -a.grad, -a.hess)


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    va = a.value[..., None]
    vb = b.value[..., None]
    grad = va * b.grad + vb * a.grad
    hess = va[..., None] * b.hess + vb[..., None] * a.hess + _sym_outer(a.grad, b.grad)
    return Jet2(a.value * b.value, grad, hess)


def _check_nonzero(b: Jet2, what: str):
    bad = b.value == 0
    if np.any(bad):
        raise DomainError(what, point=_first_index(bad))


def _first_index(mask: np.ndarray):
    if mask.ndim == 0:
        return None
    return np.argwhere(mask)[0]


def jet_div(a: Jet2, b: Jet2) -> Jet2:
    _check_nonzero(b, "division by zero")
    vb = b.value
    # quotient rule written out so the value is a.value / b.value bit-for-bit
    q = a.value / vb
    inv = Jet2(1.0 / vb, -b.grad / (vb**2)[..., None],
               -b.hess / (vb**2)[..., None, None] + 2.0 * _outer(b.grad, b.grad) / (vb**3)[..., None, None])
    prod = jet_mul(a, inv)
    return Jet2(q, prod.grad, prod.hess)


def jet_pow(u: Jet2, k: int) -> Jet2:
    if int(k) != k:
        raise ValueError(f"integer exponent required, got {k!r}")
    k = int(k)
    n = u.dim
    shape = np.shape(u.value)
    if k == 0:
        return Jet2.constant(1.0, n, shape)
    if k == 1:
        return u
    if k < 0:
        _check_nonzero(u, "negative power of zero")
    v = u.value
    return _chain(u, v**k, k * v ** (k - 1), k * (k - 1) * _safe_pow(v, k - 2))


def _safe_pow(v, k):
    return np.ones_like(v) if k == 0 else v**k


def jet_sin(u: Jet2) -> Jet2:
    s, c = np.sin(u.value), np.cos(u.value)
    return _chain(u, s, c, -s)


def jet_cos(u: Jet2) -> Jet2:
    s, c = np.sin(u.value), np.cos(u.value)
    return _chain(u, c, -s, -c)


def jet_exp(u: Jet2) -> Jet2:
    e = np.exp(u.value)
    return _chain(u, e, e, e)


def jet_log(u: Jet2) -> Jet2:
    bad = u.value <= 0
    if np.any(bad):
        raise DomainError("log of non-positive value", point=_first_index(bad))
    v = u.value
    return _chain(u, np.log(v), 1.0 / v, -1.0 / (v * v))


_UNARY = {"neg": jet_neg, "sin": jet_sin, "cos": jet_cos, "exp": jet_exp, "log": jet_log}
_BINARY = {"add": jet_add, "sub": jet_sub, "mul": jet_mul, "div": jet_div}


def jet_combine(op: str, args: Sequence, exponent: int | None = None) -> Jet2:
    """Apply ``op`` to jets using the order-2 chain and Leibniz rules.

    ``pow-int`` takes a single jet argument plus ``exponent``.
    """
    args = list(args)
    if op in _UNARY:
        if len(args) != 1:
            raise ValueError(f"{op} takes 1 argument, got {len(args)}")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise ValueError(f"{op} takes 2 arguments, got {len(args)}")
        return _BINARY[op](args[0], args[1])
    if op == "pow-int":
        if len(args) != 1 or exponent is None:
            raise ValueError("pow-int takes 1 argument and an integer exponent")
        return jet_pow(args[0], exponent)
    raise ValueError(f"unknown jet operation {op!r}")


def _eval_stencil(f: Callable, q: np.ndarray) -> np.ndarray:
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            y = np.asarray(f(q), dtype=float)
    except (ZeroDivisionError, FloatingPointError, DomainError, ValueError, OverflowError) as exc:
        raise DomainError(f"evaluation failed on finite-difference stencil ({exc})", point=q) from exc
    if not np.all(np.isfinite(y)):
        raise DomainError("non-finite value on finite-difference stencil", point=q)
    return y


def fd_jacobian(f: Callable, p, cfg: DiffConfig = DiffConfig()) -> np.ndarray:
    """Central-difference Jacobian; entry ``(i, j)`` differentiates ``f_i`` along ``e_j``."""
    p = np.asarray(p, dtype=float)
    h = cfg.fd_step
    cols = []
    for j in range(p.size):
        e = np.zeros_like(p)
        e[j] = h
        fp = np.atleast_1d(_eval_stencil(f, p + e))
        fm = np.atleast_1d(_eval_stencil(f, p - e))
        cols.append((fp - fm) / (2 * h))
    return np.stack(cols, axis=-1)


def fd_hessian(f: Callable, p, cfg: DiffConfig = DiffConfig()) -> np.ndarray:
    """Second central differences of a scalar function with step ``cfg.fd_step2``."""
    p = np.asarray(p, dtype=float)
    h = cfg.fd_step2
    n = p.size
    eye = np.eye(n) * h
    H = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            s = (_eval_stencil(f, p + eye[j] + eye[k]) - _eval_stencil(f, p + eye[j] - eye[k])
                 - _eval_stencil(f, p - eye[j] + eye[k]) + _eval_stencil(f, p - eye[j] - eye[k]))
            H[j, k] = H[k, j] = float(s) / (4 * h * h)
    return H
