"""Target-set geometry: distances, membership and the region partition."""

import numpy as np
import pytest

from elastolam.geometry import (
    LABEL_F,
    LABEL_O1,
    LABEL_O2,
    LABEL_O3,
    DegenerateWindow,
    MatrixSets,
    SymMatrix2,
    boundary_distance_U,
    build_matrix_sets,
    classify_regions,
    dist_to_K,
)
from elastolam.solver import ClassicalField
from elastolam.stress import builtin_curve, validate_hypotheses


def synthetic_field(u_fn, nx=64, nt=32, T=0.5):
    x = np.linspace(0.0, 1.0, nx + 1)
    t = np.linspace(0.0, T, nt + 1)
    X, Tm = np.meshgrid(x, t)
    u = u_fn(X, Tm)
    fld = ClassicalField(x=x, t=t, u=u)
    from elastolam.solver import _nodal_t_derivative, _nodal_x_derivative
    fld.u_x = _nodal_x_derivative(u, x[1] - x[0])
    fld.u_t = _nodal_t_derivative(u, t[1] - t[0])
    return fld


@pytest.fixture(scope="module")
def cubic_setup():
    curve = builtin_curve("cubic")
    geo = validate_hypotheses(curve)
    fld = synthetic_field(lambda X, T: 0.0 * X)
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    return curve, geo, sets


def test_gamma_formula():
    # u = a * t * sin(pi x): nodal max |u_t| is exactly a (at x = 1/2).
    a = 0.3142
    fld = synthetic_field(lambda X, T: a * T * np.sin(np.pi * X))
    geo = validate_hypotheses(builtin_curve("cubic"))
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    assert sets.gamma == pytest.approx(1.0 + a, abs=1e-12)


def test_gamma_zero_field(cubic_setup):
    _, _, sets = cubic_setup
    assert sets.gamma == 1.0


def test_band_intervals(cubic_setup):
    _, _, sets = cubic_setup
    lo, hi = sets.minus_interval
    assert lo == pytest.approx(-1.8793852415718169, abs=1e-9)
    assert hi == pytest.approx(-1.5320888862379562, abs=1e-9)


def test_degenerate_window():
    geo = validate_hypotheses(builtin_curve("cubic"))
    fld = synthetic_field(lambda X, T: 0.0 * X)
    with pytest.raises((DegenerateWindow, Exception)):
        build_matrix_sets(geo, fld, 1.0, 1.0)


def test_dist_zero_on_band(cubic_setup):
    curve, geo, sets = cubic_setup
    s = -1.6
    M = SymMatrix2(s=s, b=0.5, r=float(curve.outer(np.asarray(s))))
    assert dist_to_K(M, sets) < 1e-9


def test_dist_zero_at_band_endpoint(cubic_setup):
    _, geo, sets = cubic_setup
    M = SymMatrix2(s=geo.s_minus(-1.0), b=0.0, r=-1.0)
    assert dist_to_K(M, sets) < 1e-9


def test_dist_origin_matches_bruteforce(cubic_setup):
    curve, geo, sets = cubic_setup
    # Independent oracle: dense scan of both band arcs.
    best = np.inf
    for lo, hi in (sets.minus_interval, sets.plus_interval):
        ss = np.linspace(lo, hi, 2_000_001)
        d2 = ss ** 2 + curve.outer(ss) ** 2
        best = min(best, np.sqrt(d2.min()))
    M = SymMatrix2(s=0.0, b=0.0, r=0.0)
    assert dist_to_K(M, sets) == pytest.approx(best, abs=1e-8)


def test_dist_offdiagonal_counted_twice(cubic_setup):
    curve, geo, sets = cubic_setup
    s = -1.7
    r = float(curve.outer(np.asarray(s)))
    b = sets.gamma + 0.25
    M = SymMatrix2(s=s, b=b, r=r)
    assert dist_to_K(M, sets) == pytest.approx(np.sqrt(2.0) * 0.25, abs=1e-9)


def test_dist_membership_iff_zero(cubic_setup):
    curve, geo, sets = cubic_setup
    rng = np.random.default_rng(7)
    n = 10_000
    on_band = rng.random(n) < 0.5
    s_lo, s_hi = sets.minus_interval
    s = rng.uniform(s_lo, s_hi, n)
    r = curve.outer(s)
    b = rng.uniform(-sets.gamma, sets.gamma, n)
    # Perturb half the samples off the set.
    shift = np.where(on_band, 0.0, rng.uniform(1e-3, 0.3, n))
    d = sets.dist_to_K(s + shift, b, r)
    assert np.all(d[on_band] < 1e-9)
    assert np.all(d[~on_band] > 1e-6)


def test_dist_is_one_lipschitz(cubic_setup):
    _, _, sets = cubic_setup
    rng = np.random.default_rng(11)
    n = 3000
    s = rng.uniform(-2.5, 2.5, n)
    b = rng.uniform(-2.0, 2.0, n)
    r = rng.uniform(-2.5, 2.5, n)
    ds = rng.normal(scale=0.05, size=n)
    db = rng.normal(scale=0.05, size=n)
    dr = rng.normal(scale=0.05, size=n)
    d0 = sets.dist_to_K(s, b, r)
    d1 = sets.dist_to_K(s + ds, b + db, r + dr)
    step = np.sqrt(ds ** 2 + 2.0 * db ** 2 + dr ** 2)
    assert np.all(np.abs(d1 - d0) <= step + 1e-9)


def test_fast_engine_agrees(cubic_setup):
    _, _, sets = cubic_setup
    rng = np.random.default_rng(13)
    s = rng.uniform(-2.5, 2.5, 2000)
    b = rng.uniform(-2.0, 2.0, 2000)
    r = rng.uniform(-2.5, 2.5, 2000)
    ref = sets.dist_to_K(s, b, r)
    fast = sets.dist_to_K(s, b, r, fast=True)
    assert np.max(np.abs(ref - fast)) < 1e-6


def test_boundary_distance_on_chord(cubic_setup):
    _, geo, sets = cubic_setup
    s_mid = 0.5 * (geo.s_minus(-1.0) + geo.s_plus(-1.0))
    assert abs(boundary_distance_U(SymMatrix2(s=s_mid, b=0.0, r=-1.0), sets)) < 1e-9


def test_boundary_distance_midpoint_positive(cubic_setup):
    _, geo, sets = cubic_setup
    r = 0.0
    s_mid = 0.5 * (geo.s_minus(r) + geo.s_plus(r))
    d = boundary_distance_U(SymMatrix2(s=s_mid, b=0.0, r=r), sets)
    assert d > 0.5  # deep interior of the cubic lens


def test_boundary_distance_exterior_sign(cubic_setup):
    _, _, sets = cubic_setup
    d = boundary_distance_U(SymMatrix2(s=0.0, b=0.0, r=1.5), sets)
    assert d < 0.0


def test_classify_uniform_strain_inside():
    geo = validate_hypotheses(builtin_curve("cubic"))
    s0 = 0.4
    fld = synthetic_field(lambda X, T: s0 * X * (0.0 * T + 1.0))

    # Enforce the boundary-free synthetic strain field directly.
    fld.u_x[:] = s0
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    part = classify_regions(fld, sets)
    assert np.all(part.labels == LABEL_O2)
    assert not part.omega2_empty


def test_classify_all_above_flag():
    geo = validate_hypotheses(builtin_curve("cubic"))
    fld = synthetic_field(lambda X, T: 0.0 * X)
    fld.u_x[:] = 2.5  # above the lens exit strain everywhere
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    part = classify_regions(fld, sets)
    assert np.all(part.labels == LABEL_O3)
    assert part.omega2_empty


def test_classify_three_regions_and_interfaces():
    geo = validate_hypotheses(builtin_curve("cubic"))
    # Strain sweeps from below the lens to above it across x.
    fld = synthetic_field(lambda X, T: 0.0 * X, nx=128, nt=16)
    x_cells = 0.5 * (fld.x[:-1] + fld.x[1:])
    strain = -2.5 + 5.0 * fld.x[None, :] * np.ones_like(fld.u)
    fld.u_x = strain
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    part = classify_regions(fld, sets)
    present = set(np.unique(part.labels).tolist())
    assert {LABEL_O1, LABEL_O2, LABEL_O3} <= present
    assert part.adjacency_violations == 0
    # Interface cells only between differently-labelled neighbours.
    labs = part.labels
    f_cols = np.nonzero(np.any(labs == LABEL_F, axis=0))[0]
    for c in f_cols:
        row = labs[0]
        left = row[max(c - 1, 0)]
        right = row[min(c + 1, labs.shape[1] - 1)]
        assert left != right or LABEL_F in (left, right)


def test_classify_t0_row_matches_initial_strain():
    geo = validate_hypotheses(builtin_curve("cubic"))
    fld = synthetic_field(lambda X, T: 0.0 * X, nx=96, nt=8)
    rng = np.random.default_rng(5)
    strain_profile = np.linspace(-2.3, 2.3, fld.x.size)
    fld.u_x = np.broadcast_to(strain_profile, fld.u_x.shape).copy()
    sets = build_matrix_sets(geo, fld, -1.0, 1.0)
    part = classify_regions(fld, sets)
    s_lo, s_hi = part.s_lo, part.s_hi
    corners = np.stack([strain_profile[:-1], strain_profile[1:]])
    expect = np.zeros(corners.shape[1], dtype=np.int8)
    expect[np.all(corners < s_lo, axis=0)] = LABEL_O1
    expect[np.all((corners > s_lo) & (corners < s_hi), axis=0)] = LABEL_O2
    expect[np.all(corners > s_hi, axis=0)] = LABEL_O3
    assert np.array_equal(part.labels[0], expect)


def test_classification_stable_under_refinement():
    geo = validate_hypotheses(builtin_curve("cubic"))
    curve_profiles = {}
    for nx in (64, 128):
        fld = synthetic_field(lambda X, T: 0.0 * X, nx=nx, nt=8)
        fld.u_x = np.broadcast_to(-2.5 + 5.0 * 0.5 * (1.0 + np.sin(np.pi * fld.x)),
                                  fld.u_x.shape).copy()
        sets = build_matrix_sets(geo, fld, -1.0, 1.0)
        part = classify_regions(fld, sets)
        # Label at a fixed probe cell away from thresholds.
        cx, _ = part.cell_centers()
        probe = np.argmin(np.abs(cx - 0.5))
        curve_profiles[nx] = part.labels[0, probe]
    assert curve_profiles[64] == curve_profiles[128]
