"""Stress-curve validation, transition geometry and the monotone surrogate."""

import math

import numpy as np
import pytest
from scipy.optimize import brentq

from elastolam import stress
from elastolam.stress import (
    DomainViolation,
    MonotoneCurve,
    OutOfRange,
    StressCurve,
    branch_inverse,
    build_modified_stress,
    builtin_curve,
    maxwell_points,
    validate_hypotheses,
)


@pytest.fixture(scope="module")
def cubic():
    return builtin_curve("cubic")


@pytest.fixture(scope="module")
def cubic_geometry(cubic):
    return validate_hypotheses(cubic)


def test_cubic_passes_validation(cubic, cubic_geometry):
    # Calculus oracle: sigma' = 3s^2 - 3 vanishes at -1 and +1.
    assert cubic.s1 == -1.0
    assert cubic.s2 == 1.0
    assert cubic.sigma_s1 == 2.0
    assert cubic.sigma_s2 == -2.0
    assert cubic_geometry.derivative_floor > 0.0


def test_linear_curve_is_rejected():
    lin = StressCurve(
        mode="HE",
        left_bound=-np.inf,
        evaluator=lambda s: np.asarray(s, dtype=float),
        derivatives=(lambda s: np.ones_like(np.asarray(s, dtype=float)),
                     lambda s: np.zeros_like(np.asarray(s, dtype=float)),
                     lambda s: np.zeros_like(np.asarray(s, dtype=float))),
        s1=-1.0,
        s2=1.0,
        working_range=(-3.0, 3.0),
    )
    with pytest.raises(MonotoneCurve):
        validate_hypotheses(lin)


def test_nc_perturbed_cubic_passes():
    curve = builtin_curve("cubic-nc")
    geo = validate_hypotheses(curve)
    # Independent oracle: locate the sign changes of sigma' directly.
    eps = 1e-3
    dsig = lambda s: 3.0 * s ** 2 - 3.0 + eps / (1.0 + s) ** 2
    s1_ref = brentq(dsig, -0.999, -0.5, xtol=1e-13)
    s2_ref = brentq(dsig, 0.5, 1.5, xtol=1e-13)
    assert curve.s1 == pytest.approx(s1_ref, abs=1e-10)
    assert curve.s2 == pytest.approx(s2_ref, abs=1e-10)
    assert -1.0 < geo.s1_star < curve.s1
    assert geo.s1_star == pytest.approx(-2.0, abs=0.2) or geo.s1_star > -1.0
    # The NC curve lives on (-1, inf): its left matched point stays inside.
    assert geo.s1_star > -1.0


def test_nc_divergence_check_rejects_bounded_curve():
    # A bounded "NC" curve must trip the divergence trend check.
    ev = lambda s: np.asarray(s, dtype=float) ** 3 - 3.0 * np.asarray(s, dtype=float)
    curve = StressCurve(
        mode="NC",
        left_bound=-1.0,
        evaluator=ev,
        derivatives=(lambda s: 3.0 * s ** 2 - 3.0,
                     lambda s: 6.0 * s,
                     lambda s: 6.0 * np.ones_like(np.asarray(s, dtype=float))),
        s1=-0.5,
        s2=1.0,
        rho=0.1,
        working_range=(-0.99, 3.0),
    )
    with pytest.raises((DomainViolation, MonotoneCurve)):
        validate_hypotheses(curve)


def test_maxwell_points_cubic(cubic):
    # s^3 - 3s + 2 = (s - 1)^2 (s + 2) and s^3 - 3s - 2 = (s + 1)^2 (s - 2).
    s1s, s2s = maxwell_points(cubic)
    assert s1s == pytest.approx(-2.0, abs=1e-10)
    assert s2s == pytest.approx(2.0, abs=1e-10)


def test_maxwell_symmetry_odd_curve(cubic_geometry):
    assert cubic_geometry.s1_star == pytest.approx(-cubic_geometry.s2_star, abs=1e-10)


def test_branch_inverse_cubic_zero(cubic_geometry):
    sm, sp = branch_inverse(cubic_geometry, 0.0)
    assert sm == pytest.approx(-math.sqrt(3.0), abs=1e-10)
    assert sp == pytest.approx(math.sqrt(3.0), abs=1e-10)


def test_branch_inverse_trig_oracle(cubic_geometry):
    # Roots of s^3 - 3s = r are 2 cos(theta) with cos(3 theta) = r / 2.
    r = -1.0
    theta = math.acos(r / 2.0) / 3.0
    sp_ref = 2.0 * math.cos(theta)
    sm_ref = 2.0 * math.cos(theta + 4.0 * math.pi / 3.0)
    # Select the representatives on the outer branches.
    sm_ref = min(2.0 * math.cos(theta + 2.0 * k * math.pi / 3.0) for k in range(3))
    sm, sp = branch_inverse(cubic_geometry, r)
    assert sm == pytest.approx(sm_ref, abs=1e-10)
    assert sp == pytest.approx(sp_ref, abs=1e-10)


def test_branch_inverse_endpoint(cubic, cubic_geometry):
    r_hi = cubic.sigma_s1
    _, sp = branch_inverse(cubic_geometry, r_hi - 1e-12)
    assert sp == pytest.approx(2.0, abs=1e-5)


def test_branch_inverse_out_of_range(cubic_geometry):
    with pytest.raises(OutOfRange):
        branch_inverse(cubic_geometry, 2.5)
    with pytest.raises(OutOfRange):
        branch_inverse(cubic_geometry, -2.0)


def test_branch_inverse_random_levels_property(cubic, cubic_geometry):
    rng = np.random.default_rng(20260810)
    r = rng.uniform(cubic.sigma_s2 + 1e-3, cubic.sigma_s1 - 1e-3, size=1000)
    sm = cubic_geometry.s_minus(r)
    sp = cubic_geometry.s_plus(r)
    assert np.max(np.abs(cubic.outer(sm) - r)) < 1e-9
    assert np.max(np.abs(cubic.outer(sp) - r)) < 1e-9
    order = np.argsort(r)
    assert np.all(np.diff(sm[order]) > 0.0)
    assert np.all(np.diff(sp[order]) > 0.0)


@pytest.fixture(scope="module")
def cubic_modified(cubic, cubic_geometry):
    return build_modified_stress(cubic, cubic_geometry, -1.0, 1.0)


def test_modified_identity_outside(cubic, cubic_modified):
    ms = cubic_modified
    s = np.concatenate([
        np.linspace(-3.0, ms.a, 200),
        np.linspace(ms.b, 3.0, 200),
    ])
    # Bit-for-bit: the evaluator dispatches to the same code path outside.
    assert np.array_equal(ms(s), cubic.outer(s))


def test_modified_junction_values(cubic, cubic_modified):
    ms = cubic_modified
    assert ms(ms.a) == pytest.approx(-1.0, abs=1e-12)
    assert ms(np.nextafter(ms.b, np.inf)) == cubic.outer(np.nextafter(ms.b, np.inf))
    # Continuity across the right junction: interior integral rejoins sigma.
    assert ms(ms.b - 1e-13) == pytest.approx(float(cubic.outer(np.asarray(ms.b))), abs=1e-9)


def test_modified_monotone_floor(cubic_modified):
    s = np.linspace(-3.0, 3.0, 10001)
    d = cubic_modified.derivative(s)
    assert float(np.min(d)) > 0.0
    assert cubic_modified.c_star > 0.0
    assert float(np.min(d)) == pytest.approx(cubic_modified.c_star, rel=1e-6)


def test_modified_sign_conditions(cubic, cubic_geometry, cubic_modified):
    ms = cubic_modified
    g = cubic_geometry
    below = np.linspace(ms.a + 0.1 * ms.window, g.s_minus(1.0), 2000)
    above = np.linspace(g.s_plus(-1.0), ms.b - 0.1 * ms.window, 2000)
    assert np.all(ms(below) < cubic.outer(below))
    assert np.all(ms(above) > cubic.outer(above))
    # Up to the junction the ordering holds within roundoff.
    near = np.linspace(ms.a, ms.a + 0.1 * ms.window, 200)
    assert np.all(ms(near) - cubic.outer(near) < 1e-10)


def test_modified_c3_junctions(cubic_modified):
    # Third-derivative FD jump across each junction stays at FD-noise level.
    assert cubic_modified.junction_c3_defect(h=1e-3) < 1e-2


def test_modified_derivative_consistency(cubic_modified):
    # Interior closed-form derivative matches FD of the value evaluator.
    ms = cubic_modified
    s = np.linspace(ms.a + 0.05, ms.b - 0.05, 50)
    h = 1e-6
    fd = (ms(s + h) - ms(s - h)) / (2.0 * h)
    assert np.max(np.abs(fd - ms.derivative(s))) < 1e-6


def test_modified_value_quadrature_oracle(cubic_modified):
    # Independent oracle: integrate the derivative with fixed quadrature.
    from scipy.integrate import quad
    ms = cubic_modified
    for s_end in (ms.a + 0.3, 0.0, ms.b - 0.2):
        ref, err = quad(lambda u: ms.derivative(np.asarray(u)), ms.a, s_end,
                        limit=200, epsabs=1e-11, epsrel=1e-11)
        assert ms(s_end) == pytest.approx(ms.r1 + ref, abs=5e-8)


def test_shifted_cubic_geometry():
    curve = builtin_curve("cubic", shift=2.0)
    geo = validate_hypotheses(curve)
    assert geo.s1_star == pytest.approx(0.0, abs=1e-9)
    assert geo.s2_star == pytest.approx(4.0, abs=1e-9)
