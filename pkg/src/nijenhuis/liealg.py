"""Finite-dimensional Lie algebras given by structure constants.

``c[k, i, j]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``.  Complex
vectors of the complexified algebra are handled as ``(re, im)`` pairs of real
arrays with the bracket extended complex-bilinearly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidAlgebra, PreconditionError

LAW_TOL = 1e-12
DATUM_TOL = 1e-10
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class LieAlgebra:
    structure_constants: np.ndarray
    name: str = ""

    def __post_init__(self):
        c = np.array(self.structure_constants, dtype=float)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise InvalidAlgebra(f"structure constants must have shape (n, n, n), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        self.validate()

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def validate(self, tol: float = LAW_TOL):
        """Raise :class:`InvalidAlgebra` naming the first triple that breaks antisymmetry or Jacobi."""
        c = self.structure_constants
        n = self.dim
        scale = max(1.0, float(np.abs(c).max(initial=0.0)))
        for k, i, j in product(range(n), repeat=3):
            if abs(c[k, i, j] + c[k, j, i]) > tol * scale:
                raise InvalidAlgebra(f"antisymmetry fails: c[{k}][{i}][{j}] = {c[k, i, j]} but "
                                     f"c[{k}][{j}][{i}] = {c[k, j, i]}", (k, i, j))
        eye = np.eye(n)
        for i, j, k in product(range(n), repeat=3):
            r = jacobiator(self.bracket, eye[i], eye[j], eye[k])
            if np.abs(r).max() > tol * scale * scale:
                raise InvalidAlgebra(f"Jacobi identity fails on (e{i + 1}, e{j + 1}, e{k + 1}): residual {np.abs(r).max():.3e}",
                                     (i, j, k))

    def bracket(self, X, Y) -> np.ndarray:
        return alg_bracket(self, X, Y)

    def ad(self, Z) -> np.ndarray:
        """Matrix of ``ad_Z`` (column ``j`` is ``[Z, e_j]``)."""
        return np.einsum("kij,i->kj", self.structure_constants, np.asarray(Z, dtype=float))

    @classmethod
    def from_brackets(cls, n: int, brackets: dict[tuple[int, int], Sequence[float]], name: str = "") -> "LieAlgebra":
        """Build from ``{(i, j): [e_i, e_j]}`` (0-based); antisymmetric partners are filled in."""
        c = np.zeros((n, n, n))
        for (i, j), v in brackets.items():
            v = np.asarray(v, dtype=float)
            if v.shape != (n,):
                raise InvalidAlgebra(f"bracket [e{i + 1}, e{j + 1}] must have {n} coefficients")
            c[:, i, j] = v
            c[:, j, i] = -v
        return cls(c, name)


def jacobiator(br, X, Y, Z) -> np.ndarray:
    return br(br(X, Y), Z) + br(br(Y, Z), X) + br(br(Z, X), Y)


def abelian(n: int) -> LieAlgebra:
    return LieAlgebra(np.zeros((n, n, n)), f"abelian_{n}")


def affine_2d() -> LieAlgebra:
    return LieAlgebra.from_brackets(2, {(0, 1): [0, 1]}, "affine_2d")


def so3() -> LieAlgebra:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[k, i, j] = 1.0
        eps[k, j, i] = -1.0
    return LieAlgebra(eps, "so3")


def heisenberg_3() -> LieAlgebra:
    return LieAlgebra.from_brackets(3, {(0, 1): [0, 0, 1]}, "heisenberg_3")


def affine_complex() -> LieAlgebra:
    """The complex affine algebra ``[A, B] = B`` viewed as a real 4-dimensional algebra.

    Basis ``(A, iA, B, iB)``; multiplication by ``i`` is a bi-invariant complex structure.
    """
    return LieAlgebra.from_brackets(4, {
        (0, 2): [0, 0, 1, 0], (0, 3): [0, 0, 0, 1],
        (1, 2): [0, 0, 0, 1], (1, 3): [0, 0, -1, 0],
    }, "affine_complex")


def catalogue(name: str) -> LieAlgebra:
    if name.startswith("abelian_"):
        try:
            n = int(name.split("_", 1)[1])
        except ValueError:
            raise KeyError(name) from None
        if n < 1:
            raise KeyError(name)
        return abelian(n)
    table = {"affine_2d": affine_2d, "so3": so3, "heisenberg_3": heisenberg_3, "affine_complex": affine_complex}
    if name not in table:
        raise KeyError(name)
    return table[name]()


CATALOGUE = ("abelian_<n>", "affine_2d", "so3", "heisenberg_3", "affine_complex")


def _vec(alg: LieAlgebra, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != alg.dim:
        raise DimensionError(f"vector of length {X.shape[-1]} in a {alg.dim}-dimensional algebra")
    return X


def _op(alg: LieAlgebra, N) -> np.ndarray:
    N = np.asarray(N, dtype=float)
    if N.shape != (alg.dim, alg.dim):
        raise DimensionError(f"operator must be {alg.dim}x{alg.dim}, got {N.shape}")
    return N


def alg_bracket(alg: LieAlgebra, X, Y) -> np.ndarray:
    return np.einsum("kij,...i,...j->...k", alg.structure_constants, _vec(alg, X), _vec(alg, Y))


def alg_torsion(alg: LieAlgebra, N, X, Y) -> np.ndarray:
    """``[NX, NY] - N([NX, Y] + [X, NY] - N[X, Y])``."""
    N = _op(alg, N)
    X, Y = _vec(alg, X), _vec(alg, Y)
    NX, NY = X @ N.T, Y @ N.T
    br = alg.bracket
    inner = br(NX, Y) + br(X, NY) - br(X, Y) @ N.T
    return br(NX, NY) - inner @ N.T


def alg_contracted_bracket(alg: LieAlgebra, N, X, Y) -> np.ndarray:
    N = _op(alg, N)
    X, Y = _vec(alg, X), _vec(alg, Y)
    br = alg.bracket
    return br(X @ N.T, Y) + br(X, Y @ N.T) - br(X, Y) @ N.T


@dataclass(frozen=True)
class AlgebraNijenhuisVerdict:
    ok: bool
    tol: float
    torsion_norm: float
    witness: tuple[int, int] | None
    witness_value: np.ndarray | None
    jacobi_residual: float | None

    @property
    def torsion_ok(self) -> bool:
        return self.torsion_norm <= self.tol


def contracted_jacobi_residual(alg: LieAlgebra, N) -> float:
    """Max Jacobi defect of ``[., .]_N`` over all basis triples."""
    eye = np.eye(alg.dim)
    br = lambda X, Y: alg_contracted_bracket(alg, N, X, Y)  # noqa: E731
    worst = 0.0
    for i, j, k in product(range(alg.dim), repeat=3):
        worst = max(worst, float(np.abs(jacobiator(br, eye[i], eye[j], eye[k])).max()))
    return worst


def alg_is_nijenhuis(alg: LieAlgebra, N, tol: float = DEFAULT_TOL) -> AlgebraNijenhuisVerdict:
    """Exhaustive torsion over basis pairs; on success the contracted bracket must also satisfy Jacobi."""
    N = _op(alg, N)
    eye = np.eye(alg.dim)
    worst, witness, value = 0.0, None, None
    for i in range(alg.dim):
        for j in range(i + 1, alg.dim):
            T = alg_torsion(alg, N, eye[i], eye[j])
            m = float(np.abs(T).max())
            if witness is None or m > worst:
                worst, witness, value = m, (i, j), T
    if worst > tol:
        return AlgebraNijenhuisVerdict(False, tol, worst, witness, value, None)
    jac = contracted_jacobi_residual(alg, N)
    return AlgebraNijenhuisVerdict(jac <= tol, tol, worst, witness, value, jac)


# ---------------------------------------------------------------- homogeneous data

def _orthonormal(k_basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis (rows) of span(k_basis); raises on rank deficiency."""
    if k_basis.size == 0:
        return np.zeros((0, n))
    if k_basis.ndim != 2 or k_basis.shape[1] != n:
        raise DimensionError(f"k_basis vectors must have length {n}")
    u, s, vt = np.linalg.svd(k_basis, full_matrices=False)
    if s.min() <= 1e-10 * max(1.0, s.max()):
        raise InvalidAlgebra("k_basis is rank-deficient", ())
    return vt


def membership_residual(Q: np.ndarray, v) -> float:
    """Distance from ``v`` to the row span of the orthonormal ``Q`` (least-squares projection)."""
    v = np.asarray(v)
    return float(np.linalg.norm(v - (v @ Q.conj().T) @ Q)) if Q.shape[0] else float(np.linalg.norm(v))


def _in_span(Q: np.ndarray, v, tol: float) -> tuple[bool, float]:
    r = membership_residual(Q, v)
    return r <= tol * (1.0 + float(np.linalg.norm(v))), r


@dataclass(frozen=True)
class HomogeneousDatum:
    """A Lie algebra with a subalgebra ``k`` and sampled automorphisms ``Ad_k``."""

    algebra: LieAlgebra
    k_basis: np.ndarray
    ad_samples: tuple[np.ndarray, ...] = ()
    _Q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.algebra.dim
        kb = np.asarray(self.k_basis, dtype=float).reshape(-1, n) if np.size(self.k_basis) else np.zeros((0, n))
        object.__setattr__(self, "k_basis", kb)
        ads = tuple(np.asarray(a, dtype=float) for a in self.ad_samples)
        for a in ads:
            if a.shape != (n, n):
                raise DimensionError(f"Ad sample must be {n}x{n}, got {a.shape}")
        object.__setattr__(self, "ad_samples", ads)
        object.__setattr__(self, "_Q", _orthonormal(kb, n))
        self.validate()

    @property
    def k_dim(self) -> int:
        return self.k_basis.shape[0]

    def contains(self, v, tol: float = DATUM_TOL) -> bool:
        return _in_span(self._Q, v, tol)[0]

    def residual(self, v) -> float:
        return membership_residual(self._Q, v)

    def validate(self, tol: float = DATUM_TOL):
        alg = self.algebra
        for a, b in product(range(self.k_dim), repeat=2):
            if not self.contains(alg.bracket(self.k_basis[a], self.k_basis[b]), tol):
                raise InvalidAlgebra(f"k is not a subalgebra: [k{a + 1}, k{b + 1}] leaves k", (a, b))
        eye = np.eye(alg.dim)
        for s, A in enumerate(self.ad_samples):
            for i, j in product(range(alg.dim), repeat=2):
                lhs = A @ alg.bracket(eye[i], eye[j])
                rhs = alg.bracket(A @ eye[i], A @ eye[j])
                if np.abs(lhs - rhs).max() > tol * max(1.0, np.abs(A).max() ** 2):
                    raise InvalidAlgebra(f"Ad sample {s} is not a Lie algebra automorphism on (e{i + 1}, e{j + 1})",
                                         (s, i, j))
            for a in range(self.k_dim):
                if not self.contains(A @ self.k_basis[a], tol):
                    raise InvalidAlgebra(f"Ad sample {s} does not preserve k", (s, a))


@dataclass(frozen=True)
class HomogeneousVerdict:
    ok: bool
    tol: float
    residual: float
    witness: str | None


def check_homogeneous_projectable(datum: HomogeneousDatum, N, tol: float = DEFAULT_TOL) -> HomogeneousVerdict:
    """``N(k) ⊂ k`` and ``(N Ad_k - Ad_k N) e_i ∈ k`` for every sample and basis vector.

    The infinitesimal form ``(N ad_Z - ad_Z N) e_i ∈ k`` for ``Z`` in ``k_basis``
    is checked as well, since finitely many group samples do not pin it down.
    """
    alg = datum.algebra
    N = _op(alg, N)
    eye = np.eye(alg.dim)
    results = [(f"N k{a + 1}", N @ datum.k_basis[a]) for a in range(datum.k_dim)]
    for s, A in enumerate(datum.ad_samples):
        C = N @ A - A @ N
        results += [(f"(N Ad_{s} - Ad_{s} N) e{i + 1}", C @ eye[i]) for i in range(alg.dim)]
    for a in range(datum.k_dim):
        adz = alg.ad(datum.k_basis[a])
        C = N @ adz - adz @ N
        results += [(f"(N ad_k{a + 1} - ad_k{a + 1} N) e{i + 1}", C @ eye[i]) for i in range(alg.dim)]
    ok, residual, witness = _worst(datum._Q, results, tol)
    return HomogeneousVerdict(ok, tol, residual, witness)


def _worst(Q: np.ndarray, labelled, tol: float) -> tuple[bool, float, str | None]:
    """All-in-span verdict plus the worst residual (among failures, if any)."""
    rows = [(label, *_in_span(Q, v, tol)) for label, v in labelled]
    if not rows:
        return True, 0.0, None
    failed = [r for r in rows if not r[1]]
    label, _, r = max(failed or rows, key=lambda t: t[2])
    return not failed, r, label


def complex_bracket(alg: LieAlgebra, z, w) -> tuple[np.ndarray, np.ndarray]:
    """``[A + iB, C + iD] = [A, C] - [B, D] + i([A, D] + [B, C])``."""
    (A, B), (C, D) = z, w
    br = alg.bracket
    return br(A, C) - br(B, D), br(A, D) + br(B, C)


@dataclass(frozen=True)
class HomogeneousComplexVerdict:
    ok: bool
    tol: float
    k_valued_route: bool
    subalgebra_route: bool
    k_valued_residual: float
    k_valued_witness: str | None
    subalgebra_residual: float
    subalgebra_witness: str | None

    @property
    def routes_agree(self) -> bool:
        return self.k_valued_route == self.subalgebra_route


def zplus_spanning_set(datum: HomogeneousDatum, N) -> list[tuple[str, tuple[np.ndarray, np.ndarray]]]:
    """``{e_a + i N e_a} ∪ {k} ∪ {i k}``: spans ``Z_+ = {X + iY : Y - N X ∈ k}`` over the reals."""
    n = datum.algebra.dim
    eye, zero = np.eye(n), np.zeros(n)
    out = [(f"e{a + 1}+iNe{a + 1}", (eye[a], N @ eye[a])) for a in range(n)]
    out += [(f"k{b + 1}", (datum.k_basis[b], zero)) for b in range(datum.k_dim)]
    out += [(f"ik{b + 1}", (zero, datum.k_basis[b])) for b in range(datum.k_dim)]
    return out


def check_homogeneous_complex(datum: HomogeneousDatum, N, tol: float = DEFAULT_TOL) -> HomogeneousComplexVerdict:
    """Two independent tests of whether ``N`` induces a complex structure on ``G/K``.

    Route 1: ``(N^2 + id) e_i`` and ``T_N(e_i, e_j)`` lie in ``k``.
    Route 2: ``Z_+`` is a complex Lie subalgebra of the complexified algebra.
    ``Z_+`` is closed under multiplication by ``i`` (tested against its real
    span), and brackets of the spanning set stay in its complex span (complex
    least squares).
    """
    pre = check_homogeneous_projectable(datum, N, tol)
    if not pre.ok:
        raise PreconditionError(f"operator is not projectable: {pre.witness} leaves k (residual {pre.residual:.3e})")
    alg = datum.algebra
    N = _op(alg, N)
    n = alg.dim
    eye = np.eye(n)
    Q = datum._Q

    checks = [(f"(N^2 + id) e{i + 1}", (N @ N + np.eye(n)) @ eye[i]) for i in range(n)]
    checks += [(f"T(e{i + 1}, e{j + 1})", alg_torsion(alg, N, eye[i], eye[j]))
               for i in range(n) for j in range(i + 1, n)]
    ok1, r1, w1 = _worst(Q, checks, tol)

    span = zplus_spanning_set(datum, N)
    Qr = _orthonormal_any(np.array([np.concatenate(z) for _, z in span]))
    Qc = _orthonormal_any(np.array([z[0] + 1j * z[1] for _, z in span]))
    # i * (A + iB) = -B + iA, tested against the real span of Z_+
    i_closure = [(f"i*({label})", np.concatenate([-B, A])) for label, (A, B) in span]
    brackets = []
    for a in range(len(span)):
        for b in range(a + 1, len(span)):
            re, im = complex_bracket(alg, span[a][1], span[b][1])
            brackets.append((f"[{span[a][0]}, {span[b][0]}]", re + 1j * im))
    ok_i, r_i, w_i = _worst(Qr, i_closure, tol)
    ok_b, r_b, w_b = _worst(Qc, brackets, tol)
    if ok_i and not ok_b or (ok_i == ok_b and r_b > r_i):
        ok2, r2, w2 = ok_i and ok_b, r_b, w_b
    else:
        ok2, r2, w2 = ok_i and ok_b, r_i, w_i

    return HomogeneousComplexVerdict(ok1 and ok2, tol, ok1, ok2, r1, w1, r2, w2)


def _orthonormal_any(rows: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the row span, dropping numerically dependent directions."""
    if rows.size == 0:
        return rows
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > rtol * max(1.0, s.max())))
    return vt[:rank]
