import numpy as np
import pytest

from _gen import box, coords, poly2
from nijenhuis.errors import DimensionError, PreconditionError
from nijenhuis.fibration import (
    ComplexTangent,
    SplitFibration,
    base_block,
    check_complex_projection,
    check_involutivity_zhat,
    check_projectable,
    check_theorem_main,
    is_vertical,
    zhat_residual,
)
from nijenhuis.geometry import NOperatorField
from nijenhuis.tangent import tangent_lift_N

C3 = ("x1", "x2", "y")
FIB3 = SplitFibration(2, 1)


def op(names, rows):
    return NOperatorField.from_strings(names, rows)


def test_split_validation():
    with pytest.raises(ValueError):
        SplitFibration(0, 2)
    with pytest.raises(DimensionError):
        SplitFibration(2, 1, (0.0, 1.0))
    assert SplitFibration(2, 2).anchor == (0.0, 0.0)


def test_is_vertical_examples():
    assert is_vertical([0, 0, 1], FIB3)
    assert not is_vertical([1, 0, 0], FIB3)
    assert is_vertical([0, 0, 0], FIB3)
    with pytest.raises(DimensionError):
        is_vertical([0, 1], FIB3)


def test_block_diagonal_projects():
    N = op(C3, [["x1", "x2", "0"], ["1", "x1*x2", "0"], ["0", "0", "y*x1"]])
    v = check_projectable(N, FIB3, box(3))
    assert v.ok
    pts = box(2).points()
    np.testing.assert_array_equal(v.base_operator.matrix(pts), N.matrix(np.c_[pts, np.zeros(len(pts))])[:, :2, :2])


def test_mixed_block_witness():
    N = op(("x", "y"), [["x", "y"], ["0", "1"]])
    v = check_projectable(N, SplitFibration(1, 1), box(2))
    assert not v.ok and v.witness_block == "B"
    assert v.mixed_block_norm == pytest.approx(abs(v.witness[1]))


def test_fiber_dependent_base_block():
    N = op(("x", "y"), [["x + y^2", "0"], ["0", "1"]])
    v = check_projectable(N, SplitFibration(1, 1), box(2))
    assert not v.ok and v.witness_block == "dA/dy" and v.base_operator is None


def test_anchor_used_for_base_block():
    N = op(("x", "y"), [["x + 0*y", "0"], ["y", "y"]])
    N0 = base_block(N, SplitFibration(1, 1, (3.0,)))
    assert N0.matrix([2.0])[0, 0] == 2.0


def test_lift_projects_onto_base():
    N = op(("x1", "x2"), [["x1*x2", "sin(x1)"], ["x2^2", "1"]])
    L = tangent_lift_N(N)
    v = check_projectable(L, SplitFibration(2, 2), box(4))
    assert v.ok
    pts = box(2).points()
    assert np.abs(v.base_operator.matrix(pts) - N.matrix(pts)).max() <= 1e-12


def test_theorem_main_constant_base():
    N = op(C3, [["1", "2", "0"], ["3", "4", "0"], ["x1*y", "y^2", "x2"]])
    r = check_theorem_main(N, FIB3, box(3))
    assert r.identity_residual == 0.0 and r.vertical_defect == 0.0 and r.base_torsion == 0.0


def test_theorem_main_shear_base():
    N = op(C3, [["0", "1", "0"], ["x1", "0", "0"], ["0", "0", "1"]])
    r = check_theorem_main(N, FIB3, box(3))
    assert r.identity_ok and not r.torsion_vertical and not r.base_nijenhuis and r.iff_agrees
    assert r.base_torsion == pytest.approx(1.0) and r.vertical_defect == pytest.approx(1.0)


def test_theorem_main_vertical_but_nonzero_torsion():
    from nijenhuis.geometry import is_nijenhuis
    N = op(C3, [["x1", "0", "0"], ["0", "x2", "0"], ["x2*y", "x1", "y^2"]])
    assert not is_nijenhuis(N, box(3)).ok
    r = check_theorem_main(N, FIB3, box(3))
    assert r.torsion_vertical and r.base_nijenhuis and r.identity_ok


def test_theorem_main_requires_projectable():
    N = op(("x", "y"), [["x", "y"], ["0", "1"]])
    with pytest.raises(PreconditionError):
        check_theorem_main(N, SplitFibration(1, 1), box(2))


def test_theorem_main_random_projectable():
    rng = np.random.default_rng(7)
    for n in (3, 4):
        names = coords(n)
        base, fib = names[:2], SplitFibration(2, n - 2)
        for _ in range(4):
            rows = [[poly2(rng, base) for _ in range(2)] + ["0"] * (n - 2)]
            rows.append([poly2(rng, base) for _ in range(2)] + ["0"] * (n - 2))
            rows += [[poly2(rng, names) for _ in range(n)] for _ in range(n - 2)]
            r = check_theorem_main(op(names, rows), fib, box(n, 32))
            assert r.identity_residual <= 1e-9 and r.iff_agrees


J4 = [["0", "-1", "0", "0"], ["1", "0", "0", "0"], ["y1", "x1", "y2", "1"], ["0", "x2", "x1", "y1"]]
C4 = ("x1", "x2", "y1", "y2")
FIB4 = SplitFibration(2, 2)


def test_zhat_membership():
    N = op(C4, J4)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    u = np.array([1.0, 0.5, -1.0, 2.0])
    w = ComplexTangent(u, N.matrix(p) @ u)
    assert zhat_residual(w, N, FIB4, p, 1) == 0.0
    shifted = ComplexTangent(u, N.matrix(p) @ u + np.array([0, 0, 3.0, -1.0]))
    assert zhat_residual(shifted, N, FIB4, p, 1) == zhat_residual(w, N, FIB4, p, 1)
    assert zhat_residual(ComplexTangent(np.eye(4)[0], np.zeros(4)), N, FIB4, p, 1) > 0
    with pytest.raises(ValueError):
        zhat_residual(w, N, FIB4, p, 0)
    with pytest.raises(DimensionError):
        ComplexTangent([1.0], [1.0, 2.0])


def test_involutivity_flat_complex():
    v = check_involutivity_zhat(op(C4, J4), FIB4, box(4))
    assert v.ok and v.precheck_ok and v.bracket_residual <= 1e-12


def test_involutivity_precheck_failure_reported():
    N = op(C3, [["0", "1", "0"], ["x1", "0", "0"], ["0", "0", "1"]])
    v = check_involutivity_zhat(N, FIB3, box(3))
    assert not v.ok and not v.precheck_ok and np.isnan(v.bracket_residual)


def test_complex_projection_examples():
    good = check_complex_projection(op(C4, J4), FIB4, box(4))
    assert good.ok and good.direct_route and good.routes_agree
    twice = [["0", "-2", "0", "0"], ["2", "0", "0", "0"], ["0", "0", "1", "0"], ["0", "0", "0", "1"]]
    bad = check_complex_projection(op(C4, twice), FIB4, box(4))
    assert not bad.ok and not bad.direct_route and not bad.involutivity.precheck_ok


def test_complex_projection_non_integrable_base():
    # Every almost complex structure on R^2 is integrable, so this uses a 4-dim base whose
    # operator squares to -id but has an x1-dependent block anticommuting with J.
    names = coords(6)
    rows = [["0", "-1", "x1", "0", "0", "0"], ["1", "0", "0", "-x1", "0", "0"],
            ["0", "0", "0", "-1", "0", "0"], ["0", "0", "1", "0", "0", "0"],
            ["0", "0", "0", "0", "x5", "0"], ["0", "0", "0", "0", "0", "x6"]]
    N = op(names, rows)
    v = check_complex_projection(N, SplitFibration(4, 2), box(6))
    assert v.routes_agree and v.base_structure_residual == 0.0
    assert not v.ok and v.base_torsion > 1e-3


def test_complex_projection_routes_agree_on_random():
    rng = np.random.default_rng(12)
    for k in range(20):
        base_scale = rng.choice([1.0, 1.0, 2.0, 0.5])
        twist = rng.choice(["0", "x1", "x2^2", "0.3"])
        rows = [["0", f"{-base_scale}", "0", "0"], [f"{1 / base_scale if k % 3 else base_scale}", twist, "0", "0"],
                [poly2(rng, C4), poly2(rng, C4), poly2(rng, C4), poly2(rng, C4)],
                [poly2(rng, C4), poly2(rng, C4), poly2(rng, C4), poly2(rng, C4)]]
        N = op(C4, rows)
        pts = box(4, 24, seed=k)
        if not check_projectable(N, FIB4, pts).ok:
            continue
        v = check_complex_projection(N, FIB4, pts)
        assert v.routes_agree, rows


def test_h1_vertical_brackets():
    # vertical-vertical and vertical-frame brackets never leave Zhat_+ for a complex N0
    v = check_involutivity_zhat(op(C4, J4), FIB4, box(4), sign=-1)
    assert v.ok
