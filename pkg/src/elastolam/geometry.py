"""Matrix target sets, membership distances and the region partition.

The two-phase target set K consists of symmetric 2x2 matrices whose
(strain, stress) part lies on one of two arcs of the original curve (the
lamination bands) and whose off-diagonal entry is bounded by gamma.  The
open neighbourhood U is the lens swept between the two lateral branch
curves for stress levels strictly between r1 and r2.

Distances are Frobenius with the off-diagonal counted twice.  Curve
distances run through two engines: a reference one (coarse sampling plus
golden-section refinement, 1e-10 tolerance) and a fast vectorized one
(fine polyline + nearest-segment projection) used inside quadratures; the
two agree to the polyline sagitta (~1e-9 for the built-ins).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .solver import ClassicalField
from .stress import PhaseGeometry

__all__ = [
    "DegenerateWindow",
    "SymMatrix2",
    "MatrixSets",
    "RegionPartition",
    "build_matrix_sets",
    "classify_regions",
    "dist_to_K",
    "boundary_distance_U",
]

LABEL_F, LABEL_O1, LABEL_O2, LABEL_O3 = 0, 1, 2, 3


class DegenerateWindow(ValueError):
    """Branch strain interval collapsed (r1 >= r2 upstream)."""


@dataclass(frozen=True)
class SymMatrix2:
    """Symmetric 2x2 space-time gradient representative (s b; b r)."""

    s: float
    b: float
    r: float

    def as_array(self):
        return np.array([[self.s, self.b], [self.b, self.r]])


def _golden_min(f, lo, hi, iters=80):
    """Vectorized golden-section minimization on per-element brackets."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(iters):
        smaller = fc < fd
        b = np.where(smaller, d, b)
        a = np.where(smaller, a, c)
        d = np.where(smaller, c, d)
        c = np.where(smaller, b - invphi * (b - a), d)
        # recompute the refreshed leg only
        new_c = b - invphi * (b - a)
        new_d = a + invphi * (b - a)
        c, d = new_c, new_d
        fc = f(c)
        fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


@dataclass
class MatrixSets:
    """Target set data for a fixed lamination window (r1, r2)."""

    geometry: PhaseGeometry
    r1: float
    r2: float
    gamma: float
    minus_interval: tuple   # strain interval of the lower band
    plus_interval: tuple    # strain interval of the upper band
    S_max: float            # max horizontal lens width over [r1, r2]

    _trees: dict = field(default_factory=dict, repr=False)

    # -- curve tables ------------------------------------------------------

    def _branch_table(self, which: str, n=8192):
        key = (which, n)
        if key not in self._trees:
            lo, hi = self.minus_interval if which == "minus" else self.plus_interval
            s = np.linspace(lo, hi, n)
            pts = np.column_stack([s, self.geometry.curve.outer(s)])
            self._trees[key] = (s, pts, cKDTree(pts))
        return self._trees[key]

    def branch_distance_fast(self, s, r, which: str):
        """Distance from planar points to one band via polyline projection."""
        s = np.asarray(s, dtype=float).ravel()
        r = np.asarray(r, dtype=float).ravel()
        table_s, pts, tree = self._branch_table(which)
        q = np.column_stack([s, r])
        _, idx = tree.query(q)
        best = np.full(s.shape, np.inf)
        for off in (-1, 0):
            i0 = np.clip(idx + off, 0, len(table_s) - 2)
            p0 = pts[i0]
            seg = pts[i0 + 1] - p0
            L2 = np.einsum("ij,ij->i", seg, seg)
            tpar = np.clip(np.einsum("ij,ij->i", q - p0, seg) / L2, 0.0, 1.0)
            proj = p0 + tpar[:, None] * seg
            d = np.hypot(q[:, 0] - proj[:, 0], q[:, 1] - proj[:, 1])
            best = np.minimum(best, d)
        return best

    def branch_distance(self, s, r, which: str, n_coarse=256):
        """Reference distance: coarse sampling + golden-section refinement."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lo, hi = self.minus_interval if which == "minus" else self.plus_interval
        grid = np.linspace(lo, hi, n_coarse)
        curve_vals = self.geometry.curve.outer(grid)
        d2 = (s[:, None] - grid[None, :]) ** 2 + (r[:, None] - curve_vals[None, :]) ** 2
        k = np.argmin(d2, axis=1)
        bl = grid[np.clip(k - 1, 0, n_coarse - 1)]
        bh = grid[np.clip(k + 1, 0, n_coarse - 1)]

        def fval(sp):
            return (s - sp) ** 2 + (r - self.geometry.curve.outer(sp)) ** 2

        _, fmin = _golden_min(fval, bl, bh)
        return np.sqrt(fmin)

    # -- membership distances ---------------------------------------------

    def dist_to_K(self, s, b, r, fast=False):
        """Frobenius distance (off-diagonal doubled) to the target set."""
        s = np.asarray(s, dtype=float)
        b = np.asarray(b, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = np.broadcast_shapes(s.shape, b.shape, r.shape)
        s, b, r = (np.broadcast_to(v, shape).ravel() for v in (s, b, r))
        engine = self.branch_distance_fast if fast else self.branch_distance
        dm = engine(s, r, "minus")
        dp = engine(s, r, "plus")
        planar2 = np.minimum(dm, dp) ** 2
        excess = np.maximum(np.abs(b) - self.gamma, 0.0)
        out = np.sqrt(planar2 + 2.0 * excess ** 2)
        return out.reshape(shape) if shape else float(out[0])

    def boundary_distance_U(self, s, r, fast=False):
        """Signed planar distance to the lens boundary (positive inside)."""
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = np.broadcast_shapes(s.shape, r.shape)
        s, r = (np.broadcast_to(v, shape).ravel().copy() for v in (s, r))
        engine = self.branch_distance_fast if fast else self.branch_distance
        d = np.minimum(engine(s, r, "minus"), engine(s, r, "plus"))
        for level in (self.r1, self.r2):
            sm = self.geometry.s_minus(level)
            sp = self.geometry.s_plus(level)
            dx = np.clip(np.maximum(sm - s, s - sp), 0.0, None)
            dchord = np.hypot(dx, r - level)
            d = np.minimum(d, dchord)
        inside = self._interior_mask(s, r)
        out = np.where(inside, d, -d)
        return out.reshape(shape) if shape else float(out[0])

    def _interior_mask(self, s, r):
        inside = (r > self.r1) & (r < self.r2)
        if inside.any():
            idx = np.nonzero(inside)[0]
            sm = self.geometry.s_minus(r[idx])
            sp = self.geometry.s_plus(r[idx])
            ok = (s[idx] > sm) & (s[idx] < sp)
            inside[idx] = ok
        return inside

    def in_U(self, s, b, r, margin=0.0):
        """Open-set membership with an optional interior margin."""
        s = np.asarray(s, dtype=float)
        b = np.asarray(b, dtype=float)
        r = np.asarray(r, dtype=float)
        shape = np.broadcast_shapes(s.shape, b.shape, r.shape)
        s, b, r = (np.broadcast_to(v, shape).ravel() for v in (s, b, r))
        planar = self.boundary_distance_U(s, r, fast=True)
        ok = (planar > margin) & (np.abs(b) < self.gamma - margin)
        return ok.reshape(shape) if shape else bool(ok[0])


def build_matrix_sets(geometry: PhaseGeometry, fld: ClassicalField,
                      r1: float, r2: float) -> MatrixSets:
    """Assemble the target sets for the window (r1, r2) around a backbone."""
    sm1 = geometry.s_minus(r1)
    sm2 = geometry.s_minus(r2)
    sp1 = geometry.s_plus(r1)
    sp2 = geometry.s_plus(r2)
    if not (sm1 < sm2 and sp1 < sp2):
        raise DegenerateWindow("branch strain intervals are not increasing")
    if fld.u_t is None:
        raise ValueError("field has no nodal velocity array")
    gamma = float(np.max(np.abs(fld.u_t))) + 1.0
    r_grid = np.linspace(r1, r2, 2049)
    widths = geometry.s_plus(r_grid) - geometry.s_minus(r_grid)
    return MatrixSets(
        geometry=geometry,
        r1=r1,
        r2=r2,
        gamma=gamma,
        minus_interval=(sm1, sm2),
        plus_interval=(sp1, sp2),
        S_max=float(np.max(widths)),
    )


def dist_to_K(M: SymMatrix2, sets: MatrixSets) -> float:
    """Distance of one symmetric matrix to the target set (reference engine)."""
    return float(sets.dist_to_K(M.s, M.b, M.r))


def boundary_distance_U(M: SymMatrix2, sets: MatrixSets) -> float:
    """Signed planar distance of (s, r) to the lens boundary."""
    return float(sets.boundary_distance_U(M.s, M.r))


@dataclass
class RegionPartition:
    """Cell labels over the space-time domain.

    Labels: 1 below the lens, 2 inside, 3 above, 0 for cells whose corner
    strains straddle a threshold (the discrete interface).  Cells are the
    rectangles between grid nodes; ``labels`` has shape (n_t - 1, n_x - 1).
    """

    x: np.ndarray
    t: np.ndarray
    labels: np.ndarray
    s_lo: float                    # lens entry strain s_minus(r1)
    s_hi: float                    # lens exit strain s_plus(r2)
    omega2_empty: bool
    component_counts: dict
    adjacency_violations: int

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.t[1] - self.t[0]))

    def measure(self, label: int) -> float:
        return float(np.count_nonzero(self.labels == label)) * self.cell_area

    @property
    def omega2_measure(self) -> float:
        return self.measure(LABEL_O2)

    @property
    def omega2_mask(self) -> np.ndarray:
        return self.labels == LABEL_O2

    def omega2_interior_mask(self, margin_cells: int = 1) -> np.ndarray:
        mask = self.omega2_mask
        if margin_cells <= 0:
            return mask
        return ndimage.binary_erosion(mask, iterations=margin_cells)

    def cell_centers(self):
        cx = 0.5 * (self.x[:-1] + self.x[1:])
        ct = 0.5 * (self.t[:-1] + self.t[1:])
        return cx, ct


def classify_regions(fld: ClassicalField, sets: MatrixSets) -> RegionPartition:
    """Label every cell of the backbone grid against the lens thresholds."""
    if fld.u_x is None:
        raise ValueError("field has no nodal strain array")
    s_lo = sets.minus_interval[0]
    s_hi = sets.plus_interval[1]
    ux = fld.u_x
    corners = np.stack([ux[:-1, :-1], ux[:-1, 1:], ux[1:, :-1], ux[1:, 1:]])
    below = np.all(corners < s_lo, axis=0)
    above = np.all(corners > s_hi, axis=0)
    inside = np.all((corners > s_lo) & (corners < s_hi), axis=0)
    labels = np.zeros(below.shape, dtype=np.int8)
    labels[below] = LABEL_O1
    labels[inside] = LABEL_O2
    labels[above] = LABEL_O3

    counts = {}
    for lab in (LABEL_O1, LABEL_O2, LABEL_O3):
        _, n = ndimage.label(labels == lab)
        counts[lab] = int(n)

    # Discrete analogue of the separation of the below/above regions: no
    # edge-adjacency between labels 1 and 3.
    o1 = labels == LABEL_O1
    o3 = labels == LABEL_O3
    grown = ndimage.binary_dilation(o1, structure=np.array([[0, 1, 0],
                                                            [1, 1, 1],
                                                            [0, 1, 0]]))
    violations = int(np.count_nonzero(grown & o3))

    return RegionPartition(
        x=fld.x,
        t=fld.t,
        labels=labels,
        s_lo=s_lo,
        s_hi=s_hi,
        omega2_empty=not bool(np.any(labels == LABEL_O2)),
        component_counts=counts,
        adjacency_violations=violations,
    )
