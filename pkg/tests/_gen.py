"""Seeded generators shared by the test modules."""

from __future__ import annotations

import numpy as np

from nijenhuis.geometry import NOperatorField, VectorField
from nijenhuis.liealg import HomogeneousDatum, abelian, affine_complex, heisenberg_3, so3
from nijenhuis.sampling import Sampler


def coords(n: int, stem: str = "x") -> tuple[str, ...]:
    return tuple(f"{stem}{i + 1}" for i in range(n))


def _c(rng) -> str:
    return f"{rng.uniform(-2, 2):.3f}"


def poly2(rng, names, zero_prob: float = 0.3) -> str:
    """Random polynomial of degree <= 2 in ``names``."""
    terms = [_c(rng)]
    for i, a in enumerate(names):
        if rng.random() > zero_prob:
            terms.append(f"{_c(rng)}*{a}")
        for b in names[i:]:
            if rng.random() > zero_prob + 0.2:
                terms.append(f"{_c(rng)}*{a}*{b}")
    return " + ".join(f"({t})" for t in terms)


def affine(rng, names) -> str:
    return " + ".join([f"({_c(rng)})"] + [f"({_c(rng)})*{a}" for a in names])


def random_operator(rng, n: int) -> NOperatorField:
    cs = coords(n)
    return NOperatorField.from_strings(cs, [[poly2(rng, cs) for _ in range(n)] for _ in range(n)])


def random_affine_field(rng, n: int) -> VectorField:
    cs = coords(n)
    return VectorField.from_strings(cs, [affine(rng, cs) for _ in range(n)])


def random_smooth_field(rng, n: int) -> VectorField:
    cs = coords(n)
    return VectorField.from_strings(cs, [random_expr(rng, cs, 2) for _ in range(n)])


def random_expr(rng, names, depth: int = 3) -> str:
    """Random smooth expression, finite on the box [-1, 1]^n (every division and log is guarded)."""
    if depth == 0 or rng.random() < 0.25:
        return rng.choice(list(names)) if rng.random() < 0.7 else _c(rng)
    a = random_expr(rng, names, depth - 1)
    k = int(rng.integers(0, 9))
    if k == 0:
        return f"({a}) + ({random_expr(rng, names, depth - 1)})"
    if k == 1:
        return f"({a}) - ({random_expr(rng, names, depth - 1)})"
    if k == 2:
        return f"({a}) * ({random_expr(rng, names, depth - 1)})"
    if k == 3:
        return f"({a}) / (2 + cos({random_expr(rng, names, depth - 1)}))"
    if k == 4:
        return f"sin({a})"
    if k == 5:
        return f"cos({a})"
    if k == 6:
        return f"exp(0.5*sin({a}))"
    if k == 7:
        return f"log(1 + ({a})^2)"
    return f"({a})^{int(rng.integers(0, 4))}"


def box(n: int, count: int = 64, seed: int = 42, lo: float = -1.0, hi: float = 1.0) -> Sampler:
    return Sampler.box(n, lo, hi, count, seed)


def nijenhuis_corpus() -> list[tuple[str, NOperatorField]]:
    """Operators with vanishing torsion, in dimensions 1 to 4."""
    c2, c3 = coords(2), coords(3)
    out = [
        ("const_J0", NOperatorField.from_strings(c2, [["0", "-1"], ["1", "0"]])),
        ("const_generic", NOperatorField.from_strings(c3, [["1", "2", "0"], ["-1", "0.5", "3"], ["0", "1", "4"]])),
        ("diag_x1_x2", NOperatorField.from_strings(c2, [["x1", "0"], ["0", "x2"]])),
        ("diag_separated", NOperatorField.from_strings(c3, [["exp(x1)", "0", "0"], ["0", "sin(x2)", "0"],
                                                              ["0", "0", "x3^2 + 1"]])),
        ("scalar_function", NOperatorField.from_strings(c2, [["x1*x2 + 1", "0"], ["0", "x1*x2 + 1"]])),
        ("scalar_function_3d", NOperatorField.from_strings(c3, [["cos(x1 + x3)", "0", "0"], ["0", "cos(x1 + x3)", "0"],
                                                                 ["0", "0", "cos(x1 + x3)"]])),
        ("one_dim", NOperatorField.from_strings(("x1",), [["sin(x1) + x1^3"]])),
        ("almost_product", NOperatorField.from_strings(c2, [["1", "0"], ["0", "-1"]])),
        ("diag_poly_3d", NOperatorField.from_strings(c3, [["x1^2", "0", "0"], ["0", "x2 - 1", "0"], ["0", "0", "2"]])),
        ("jordan_const", NOperatorField.from_strings(c2, [["3", "1"], ["0", "3"]])),
    ]
    from nijenhuis.tangent import tangent_lift_N
    out.append(("lift_of_diag", tangent_lift_N(out[2][1])))
    return out


# ---------------------------------------------------------------- homogeneous data

J_PLANE = np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 0]])


def rotation_about_e3(t):
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def sphere(N, ads=(0.4, 2.0)):
    return HomogeneousDatum(so3(), [[0, 0, 1]], tuple(rotation_about_e3(t) for t in ads)), N


def homogeneous_corpus():
    """(label, datum, N, expected verdict)."""
    ac = affine_complex()
    J_ac = np.array([[0.0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]])
    J_mixed = np.array([[0.0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
    J_k = J_PLANE.copy()
    J_k[2, 0], J_k[2, 2] = 0.3, 5.0
    heis = HomogeneousDatum(heisenberg_3(), [[0, 0, 1]])
    return [
        ("sphere J", sphere(J_PLANE)[0], J_PLANE, True),
        ("sphere -J", sphere(-J_PLANE)[0], -J_PLANE, True),
        ("sphere J + k-valued part", sphere(J_k)[0], J_k, True),
        ("sphere 2J", sphere(2 * J_PLANE)[0], 2 * J_PLANE, False),
        ("sphere diag(1,1,0)", sphere(None)[0], np.diag([1.0, 1.0, 0.0]), False),
        ("so3 with k = 0", HomogeneousDatum(so3(), np.zeros((0, 3))), np.diag([1.0, 1.0, 1.0]), False),
        ("abelian_4 flat", HomogeneousDatum(abelian(4), np.zeros((0, 4))), J_ac, True),
        ("aff(C) multiplication by i", HomogeneousDatum(ac, np.zeros((0, 4))), J_ac, True),
        ("aff(C) mixed structure", HomogeneousDatum(ac, np.zeros((0, 4))), J_mixed, None),
        ("heisenberg / centre", heis, J_PLANE, True),
        ("heisenberg / centre, 3J", heis, 3 * J_PLANE, False),
    ]
