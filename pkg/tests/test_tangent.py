import numpy as np
import pytest

from _gen import box, nijenhuis_corpus, random_affine_field, random_operator, random_smooth_field
from nijenhuis.errors import DimensionError
from nijenhuis.geometry import NOperatorField, VectorField, is_nijenhuis
from nijenhuis.tangent import (
    TT2Point,
    canonical_flip,
    complete_lift_vf,
    lift_is_nijenhuis,
    lifted_coords,
    tangent_lift_N,
    verify_lift_identities,
)

XY = ("x", "y")


def test_flip_examples():
    x, a, b, c = (np.array([v, v + 1.0]) for v in (0.0, 1.0, 2.0, 3.0))
    w = canonical_flip(TT2Point(x, a, b, c))
    assert [list(w.x), list(w.xdot), list(w.deltax), list(w.deltaxdot)] == [list(x), list(b), list(a), list(c)]
    fixed = TT2Point(x, a, a, c)
    np.testing.assert_array_equal(canonical_flip(fixed).as_array(), fixed.as_array())


def test_flip_involution_random():
    rng = np.random.default_rng(0)
    for _ in range(100):
        w = TT2Point(*rng.normal(size=(4, 3)))
        np.testing.assert_array_equal(canonical_flip(canonical_flip(w)).as_array(), w.as_array())


def test_tt2point_block_lengths():
    with pytest.raises(DimensionError):
        TT2Point([0.0], [1.0, 2.0], [0.0], [0.0])


def test_lifted_coordinate_names():
    assert lifted_coords(2) == ("x1", "x2", "v1", "v2")


def test_lift_of_constant_field():
    L = complete_lift_vf(VectorField.constant(XY, [2.0, -1.0]))
    np.testing.assert_array_equal(L([0.3, 0.1, 5.0, 7.0]), [2.0, -1.0, 0.0, 0.0])


def test_lift_of_square_field():
    L = complete_lift_vf(VectorField.from_strings(("x",), ["x^2"]))
    np.testing.assert_allclose(L([3.0, 0.5]), [9.0, 3.0])
    assert L([3.0, 0.0])[1] == 0.0


def test_lift_of_constant_operator_is_block_diagonal():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    M = tangent_lift_N(NOperatorField.constant(XY, A)).matrix([0.1, 0.2, 0.3, 0.4])
    np.testing.assert_array_equal(M, np.block([[A, np.zeros((2, 2))], [np.zeros((2, 2)), A]]))


def test_lift_of_one_dim_operator():
    M = tangent_lift_N(NOperatorField.from_strings(("x",), [["x"]])).matrix([2.0, 5.0])
    np.testing.assert_array_equal(M, [[2.0, 0.0], [5.0, 2.0]])


def test_lift_vertical_block():
    rng = np.random.default_rng(1)
    N = random_operator(rng, 2)
    p = np.array([0.2, -0.3, 0.7, 0.1])
    w = np.array([1.5, -2.0])
    out = tangent_lift_N(N).matrix(p) @ np.concatenate([np.zeros(2), w])
    np.testing.assert_allclose(out, np.concatenate([np.zeros(2), N.matrix(p[:2]) @ w]))


def test_lift_is_linear():
    rng = np.random.default_rng(2)
    N1, N2 = random_operator(rng, 3), random_operator(rng, 3)
    a, b = 1.7, -0.4
    pts = box(3).doubled().points()
    combo = tangent_lift_N(N1.scaled(a) + N2.scaled(b)).matrix(pts)
    sep = a * tangent_lift_N(N1).matrix(pts) + b * tangent_lift_N(N2).matrix(pts)
    assert np.abs(combo - sep).max() <= 1e-12


def test_lift_identities_constant_inputs():
    N = NOperatorField.constant(XY, [[1.0, 2.0], [0.0, 3.0]])
    X, Y = VectorField.constant(XY, [1, 0]), VectorField.constant(XY, [2, 5])
    v = verify_lift_identities(N, X, Y, box(2))
    assert v.ok and v.worst == 0.0


def test_lift_identities_shear():
    N = NOperatorField.from_strings(XY, [["0", "1"], ["x", "0"]])
    X, Y = VectorField.constant(XY, [1, 0]), VectorField.constant(XY, [0, 1])
    v = verify_lift_identities(N, X, Y, box(2))
    assert v.ok and v.torsion_residual <= 1e-9


def test_lift_identity_bracket_hand_example():
    X = VectorField.from_strings(XY, ["y", "0"])
    Y = VectorField.from_strings(XY, ["0", "x"])
    v = verify_lift_identities(NOperatorField.identity(XY), X, Y, box(2))
    assert v.bracket_residual <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_lift_identities_random(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 2
    N = random_operator(rng, n)
    X, Y = random_smooth_field(rng, n), random_affine_field(rng, n)
    v = verify_lift_identities(N, X, Y, box(n, 32, seed))
    assert v.ok, v


def test_theorem_5_1_on_corpus():
    for name, N in nijenhuis_corpus():
        r = lift_is_nijenhuis(N, box(N.dim, 24), 1e-9)
        assert r.base.ok and r.lift.ok and r.implication_holds, name


def test_nonzero_torsion_survives_lifting():
    N = NOperatorField.from_strings(XY, [["0", "1"], ["x", "0"]])
    r = lift_is_nijenhuis(N, box(2))
    assert not r.base.ok and not r.lift.ok and r.implication_holds


def test_iterated_lift_is_mechanical():
    N = NOperatorField.from_strings(("x",), [["x^2"]])
    LL = tangent_lift_N(tangent_lift_N(N))
    assert LL.dim == 4
    assert is_nijenhuis(LL, box(4, 16)).ok
