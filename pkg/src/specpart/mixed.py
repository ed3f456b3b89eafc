"""Mixed Dirichlet-Neumann eigenproblems on symmetry-reduced subdomains.

Equipartition candidates are built as nodal partitions of an eigenfunction of
a mixed problem on a fraction of the domain: Dirichlet edges are enforced by
excluding nodes on or beyond them, Neumann edges by a mirrored ghost-node
stencil (the missing neighbor is folded back onto the node itself, which keeps
the operator symmetric), and mobile interior Dirichlet segments by forcing
nodes within h/2 of the segment to zero.  A touch condition (the nodal line
must end at prescribed mobile points) pins the free parameters; solving it and
unfolding the nodal cells through the symmetry recipe yields an exact
equipartition of the full domain.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.ndimage as ndimage
import shapely
import shapely.affinity
from scipy.optimize import minimize
from scipy.spatial import cKDTree
from skimage.measure import find_contours

from .eigensolve import EigenPair, SparseOperator, smallest_eigenpairs
from .extract import (PartitionGeometry, snap_partition_to_domain,
                      trace_contours)
from .grids import DomainSpec, GridMask, ScalarField, build_mask

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


class MixedProblemError(RuntimeError):
    pass


class TouchSolveError(RuntimeError):
    def __init__(self, message, best_theta=None, best_residual=None):
        super().__init__(message)
        self.best_theta = best_theta
        self.best_residual = best_residual


@dataclass(frozen=True)
class BoundaryPart:
    """One piece of the subdomain boundary: a tagged segment or circular arc.

    on_boundary marks parts lying on the full domain's boundary; Dirichlet
    parts inside the domain unfold into interfaces between cells.
    """

    tag: str                      # "dirichlet" | "neumann"
    kind: str = "segment"         # "segment" | "arc"
    p0: tuple = (0.0, 0.0)
    p1: tuple = (0.0, 0.0)
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    a0: float = 0.0
    a1: float = 0.0
    on_boundary: bool = False


@dataclass(frozen=True)
class TouchTarget:
    """Where a nodal line must end.

    The residual is the signed position (along `direction`, measured from
    `origin`) of the last zero crossing of the eigenfunction sampled along the
    supporting line, offset one grid spacing into the domain along `inward`.
    Positive residual means the crossing sits on the Neumann/free side of the
    mobile endpoint.  `span` bounds the sampled parameter range; `length` is
    the mobile segment length, returned with overshoot sign when no crossing
    exists.
    """

    origin: tuple
    direction: tuple
    inward: tuple
    span: tuple
    length: float


@dataclass(frozen=True)
class MixedGeometry:
    """Concrete geometry of one mixed problem instance (fixed parameters)."""

    polygon: tuple                      # subdomain outline (arcs discretized)
    boundary_parts: tuple
    interior_segments: tuple            # Dirichlet slits ((p0, p1), ...)
    touch_targets: tuple
    bbox: tuple                         # (x0, y0, x1, y1)
    inside: Callable | None = None      # exact test; polygon used when None


@dataclass(frozen=True)
class Transform:
    """Affine map x -> R x + t given by a flat 6-tuple (r00,r01,r10,r11,tx,ty)."""

    coeffs: tuple

    @staticmethod
    def identity() -> "Transform":
        return Transform((1.0, 0.0, 0.0, 1.0, 0.0, 0.0))

    @staticmethod
    def rotation(center, angle) -> "Transform":
        c, s = math.cos(angle), math.sin(angle)
        cx, cy = center
        return Transform((c, -s, s, c,
                          cx - c * cx + s * cy, cy - s * cx - c * cy))

    @staticmethod
    def reflection(point, direction) -> "Transform":
        """Reflection across the line through `point` along `direction`."""
        dx, dy = direction
        norm = math.hypot(dx, dy)
        dx, dy = dx / norm, dy / norm
        r00 = dx * dx - dy * dy
        r01 = 2.0 * dx * dy
        px, py = point
        tx = px - r00 * px - r01 * py
        ty = py - r01 * px + r00 * py
        return Transform((r00, r01, r01, -r00, tx, ty))

    def compose(self, other: "Transform") -> "Transform":
        a = self.coeffs
        b = other.coeffs
        # self after other: x -> A (B x + tb) + ta
        return Transform((
            a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3],
            a[0] * b[4] + a[1] * b[5] + a[4],
            a[2] * b[4] + a[3] * b[5] + a[5]))

    def invert(self) -> "Transform":
        # rotations/reflections only: R^-1 = R^T
        r00, r01, r10, r11, tx, ty = self.coeffs
        return Transform((r00, r10, r01, r11,
                          -(r00 * tx + r10 * ty), -(r01 * tx + r11 * ty)))

    def apply(self, x, y):
        r00, r01, r10, r11, tx, ty = self.coeffs
        return r00 * x + r01 * y + tx, r10 * x + r11 * y + ty


@dataclass(frozen=True)
class MixedProblemSpec:
    """A named mixed-problem family with mobile parameters.

    geometry(theta) realizes the boundary tagging, interior segments and touch
    targets for a parameter vector inside param_box; transforms rebuild the
    full domain from the subdomain; eigen_index selects which eigenfunction's
    nodal set forms the partition.  When the touch conditions leave a free
    parameter (slit constructions whose junction angles are fixed by the
    geometry itself), `minimize_free` selects the eigenvalue-minimal point of
    the touching family.
    """

    name: str
    k: int
    domain: DomainSpec
    eigen_index: int
    param_box: tuple
    geometry: Callable
    transforms: tuple
    bracket: tuple = ()        # suggested 1-d bracket or n-d simplex seed
    minimize_free: bool = False
    description: str = ""

    @property
    def n_params(self) -> int:
        return len(self.param_box)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.n_params,):
            raise ValueError(f"{self.name} expects {self.n_params} parameters")
        for value, (lo, hi) in zip(theta, self.param_box):
            if not lo <= value <= hi:
                raise ValueError(
                    f"{self.name}: parameter {value:g} outside [{lo:g}, {hi:g}]")
        return theta


# --------------------------------------------------------------------------
# discretization

def _point_segment_distance(px, py, a, b):
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    denom = vx * vx + vy * vy
    t = np.clip(((px - ax) * vx + (py - ay) * vy) / max(denom, 1e-300), 0.0, 1.0)
    return np.hypot(px - (ax + t * vx), py - (ay + t * vy))


def _segments_cross(p, q, a, b):
    """Vectorized proper-or-touching intersection of segments [p_i, q_i] with
    the fixed segment [a, b]."""
    def orient(ox, oy, ax_, ay_, bx_, by_):
        return (ax_ - ox) * (by_ - oy) - (ay_ - oy) * (bx_ - ox)

    px, py = p
    qx, qy = q
    ax, ay = a
    bx, by = b
    d1 = orient(ax, ay, bx, by, px, py)
    d2 = orient(ax, ay, bx, by, qx, qy)
    d3 = orient(px, py, qx, qy, ax, ay)
    d4 = orient(px, py, qx, qy, bx, by)
    eps = 1e-12
    return (((d1 > eps) & (d2 < -eps)) | ((d1 < -eps) & (d2 > eps)) |
            (np.abs(d1) <= eps) | (np.abs(d2) <= eps)) & \
           ((((d3 > eps) & (d4 < -eps)) | ((d3 < -eps) & (d4 > eps)) |
             (np.abs(d3) <= eps) | (np.abs(d4) <= eps)))


@dataclass
class MixedGrid:
    mask: GridMask
    operator: SparseOperator
    geometry: MixedGeometry


def _polygon_inside(geom: MixedGeometry):
    poly = shapely.Polygon(geom.polygon)
    x0, y0, x1, y1 = geom.bbox
    # tiny erosion keeps boundary-aligned nodes out despite coordinate rounding
    eroded = poly.buffer(-1e-9 * max(x1 - x0, y1 - y0))
    if eroded.is_empty:
        eroded = poly

    def inside(x, y):
        return shapely.contains_xy(eroded, x, y)

    return inside


def discretize(geom: MixedGeometry, resolution: int) -> MixedGrid:
    """Build the mixed-boundary finite-difference operator.

    Nodes: strictly inside the subdomain, excluding an h/2 band around every
    interior Dirichlet segment.  Missing neighbors across a Neumann part fold
    back onto the node (mirrored ghost), all other missing neighbors impose
    zero.
    """
    x0, y0, x1, y1 = geom.bbox
    size = max(x1 - x0, y1 - y0)
    if size <= 0:
        raise MixedProblemError("empty bounding box")
    h = size / (resolution - 1)
    nx = int(round((x1 - x0) / h)) + 1
    ny = int(round((y1 - y0) / h)) + 1
    xs = x0 + h * np.arange(nx)
    ys = y0 + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)

    inside_fn = geom.inside if geom.inside is not None else _polygon_inside(geom)
    keep = np.asarray(inside_fn(X, Y), dtype=bool)
    for (a, b) in geom.interior_segments:
        dist = _point_segment_distance(X, Y, a, b)
        keep &= dist > 0.5 * h
    if not keep.any():
        raise MixedProblemError("empty interior at this resolution")

    mask = GridMask.from_inside(x0, y0, h, keep)
    index = mask.interior_index
    m = mask.node_count
    inv_h2 = 1.0 / (h * h)
    rows, cols = mask.nodes[:, 0], mask.nodes[:, 1]

    diag = np.full(m, 4.0 * inv_h2)
    data, ii, jj = [], [], []
    neumann_parts = [bp for bp in geom.boundary_parts if bp.tag == "neumann"]
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        r2, c2 = rows + dr, cols + dc
        valid = (r2 >= 0) & (r2 < ny) & (c2 >= 0) & (c2 < nx)
        linked = valid.copy()
        linked[valid] = keep[r2[valid], c2[valid]]
        ii.append(index[rows[linked], cols[linked]])
        jj.append(index[r2[linked], c2[linked]])
        data.append(np.full(int(linked.sum()), -inv_h2))

        missing = ~linked
        if not missing.any() or not neumann_parts:
            continue
        px = mask.x0 + cols[missing] * h
        py = mask.y0 + rows[missing] * h
        qx = px + dc * h
        qy = py + dr * h
        crosses_neumann = np.zeros(px.shape, dtype=bool)
        for bp in neumann_parts:
            if bp.kind == "segment":
                hit = _segments_cross((px, py), (qx, qy), bp.p0, bp.p1)
            else:
                rp = np.hypot(px - bp.center[0], py - bp.center[1])
                rq = np.hypot(qx - bp.center[0], qy - bp.center[1])
                hit = (rp - bp.radius) * (rq - bp.radius) <= 0
                ang = np.arctan2(py - bp.center[1], px - bp.center[0])
                lo, hi = min(bp.a0, bp.a1), max(bp.a0, bp.a1)
                hit &= (ang >= lo - 1e-9) & (ang <= hi + 1e-9)
            crosses_neumann |= hit
        # mirrored ghost: the missing Neumann neighbor equals the node itself
        miss_idx = index[rows[missing], cols[missing]]
        np.subtract.at(diag, miss_idx[crosses_neumann], inv_h2)

    import scipy.sparse as sparse
    ii.append(np.arange(m))
    jj.append(np.arange(m))
    data.append(diag)
    A = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(ii), np.concatenate(jj))),
        shape=(m, m))
    op = SparseOperator.__new__(SparseOperator)
    op.matrix = A
    return MixedGrid(mask, op, geom)


def mixed_eigenpairs(spec: MixedProblemSpec, theta, m: int,
                     resolution: int) -> list[EigenPair]:
    """First m eigenpairs of the mixed problem at parameters theta."""
    theta = spec.check_theta(theta)
    grid = discretize(spec.geometry(theta), resolution)
    return smallest_eigenpairs(grid.operator, m)


def _eigen_field(spec: MixedProblemSpec, theta, resolution: int):
    theta = spec.check_theta(theta)
    grid = discretize(spec.geometry(theta), resolution)
    pairs = smallest_eigenpairs(grid.operator, spec.eigen_index)
    pair = pairs[spec.eigen_index - 1]
    u = np.zeros((grid.mask.ny, grid.mask.nx))
    u[grid.mask.inside] = pair.vector
    return grid, pair.value, ScalarField(grid.mask, u)


# --------------------------------------------------------------------------
# nodal partitions

@dataclass
class NodalPartition:
    """Signed-component labeling of an eigenfunction on the subdomain grid."""

    labels: np.ndarray          # component id per node, -1 outside
    count: int                  # number of nodal domains
    interfaces: list            # polylines along the zero set
    grid: GridMask

    @property
    def mu(self) -> int:
        return self.count


def nodal_partition(u: ScalarField, mask: GridMask | None = None) -> NodalPartition:
    """Connected components of {u > 0} and {u < 0} by 4-connectivity, with
    marching-squares interfaces along the sign change."""
    mask = mask if mask is not None else u.grid
    vals = u.values
    if not np.any(vals[mask.inside] != 0.0):
        raise MixedProblemError("eigenfunction is identically zero")
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels = np.full(vals.shape, -1, dtype=np.int32)
    count = 0
    for sign in (1.0, -1.0):
        comp, ncomp = ndimage.label((sign * vals > 0) & mask.inside,
                                    structure=structure)
        sel = comp > 0
        labels[sel] = comp[sel] - 1 + count
        count += ncomp
    interfaces = []
    filled = np.where(mask.inside, vals, 0.0)
    for c in find_contours(filled, 0.0):
        xy = np.column_stack([mask.x0 + c[:, 1] * mask.h,
                              mask.y0 + c[:, 0] * mask.h])
        if xy.shape[0] >= 2:
            interfaces.append(xy)
    return NodalPartition(labels, count, interfaces, mask)


# --------------------------------------------------------------------------
# touch condition

def _sample_line(u: ScalarField, target: TouchTarget, h: float):
    s = np.arange(target.span[0], target.span[1] + 0.25 * h, 0.5 * h)
    ox, oy = target.origin
    dx, dy = target.direction
    ix, iy = target.inward
    px = ox + s * dx + h * ix
    py = oy + s * dy + h * iy
    mask = u.grid
    cx = (px - mask.x0) / mask.h
    cy = (py - mask.y0) / mask.h
    ok = (cx >= 0) & (cx <= mask.nx - 1) & (cy >= 0) & (cy <= mask.ny - 1)
    vals = np.zeros_like(s)
    j0 = np.clip(cx[ok].astype(int), 0, mask.nx - 2)
    i0 = np.clip(cy[ok].astype(int), 0, mask.ny - 2)
    tx = cx[ok] - j0
    ty = cy[ok] - i0
    v = u.values
    vals[ok] = ((1 - tx) * (1 - ty) * v[i0, j0] + tx * (1 - ty) * v[i0, j0 + 1]
                + (1 - tx) * ty * v[i0 + 1, j0] + tx * ty * v[i0 + 1, j0 + 1])
    return s, vals


def _last_crossing(s: np.ndarray, vals: np.ndarray) -> float | None:
    """Signed position of the last zero crossing along the sampled line
    (deepest into the Neumann/free side), ignoring near-zero samples (snapped
    Dirichlet nodes).  Higher eigenfunctions cross the supporting line more
    than once; the arc that tracks the mobile point is the outermost one."""
    tiny = 1e-9 * np.abs(vals).max()
    sig = np.nonzero(np.abs(vals) > tiny)[0]
    if sig.size < 2:
        return None
    crossing = None
    for a, b in zip(sig[:-1], sig[1:]):
        va, vb = vals[a], vals[b]
        if va * vb < 0:
            crossing = s[a] + (s[b] - s[a]) * va / (va - vb)
    return crossing


def touch_residual(spec: MixedProblemSpec, theta, resolution: int) -> np.ndarray:
    """Signed distances between the nodal line's endpoints and the mobile
    points, one per touch target; positive means the crossing lies on the
    Neumann/free side.  A missing crossing reports the mobile segment length
    with overshoot sign."""
    grid, _, u = _eigen_field(spec, theta, resolution)
    h = grid.mask.h
    out = []
    for target in grid.geometry.touch_targets:
        s, vals = _sample_line(u, target, h)
        crossing = _last_crossing(s, vals)
        out.append(-target.length if crossing is None else float(crossing))
    return np.asarray(out)


@dataclass
class TouchSolution:
    theta: np.ndarray
    eigenvalue: float
    nodal: NodalPartition
    residual: np.ndarray
    evaluations: int


def _solve_free_direction(spec: MixedProblemSpec, resolution: int,
                          max_evals: int) -> np.ndarray:
    """Two parameters, one touch condition: the touching configurations form
    a curve; pick its eigenvalue-minimal point.  The inner solve bisects the
    slit length s for each first parameter t; the outer loop scans t and
    refines the best interval by golden section."""
    (t_lo, t_hi), (s_lo, s_hi) = spec.param_box
    evals = 0

    def inner(t):
        """(eigenvalue, s*) with the touch residual zeroed, or None."""
        nonlocal evals
        samples = np.linspace(s_lo, s_hi, 7)
        vals = []
        for s in samples:
            try:
                vals.append(touch_residual(spec, [t, s], resolution)[0])
            except (ValueError, MixedProblemError):
                vals.append(math.nan)
            evals += 1
        bracket = None
        for a, b, va, vb in zip(samples[:-1], samples[1:], vals[:-1], vals[1:]):
            if math.isfinite(va) and math.isfinite(vb) and va * vb < 0:
                bracket = (a, b, va)
                break
        if bracket is None:
            return None
        lo, hi, r_lo = bracket
        for _ in range(18):
            mid = 0.5 * (lo + hi)
            r_mid = touch_residual(spec, [t, mid], resolution)[0]
            evals += 1
            if abs(r_mid) < 1e-4:
                break
            if r_mid * r_lo <= 0:
                hi = mid
            else:
                lo, r_lo = mid, r_mid
        theta = [t, 0.5 * (lo + hi)]
        pairs = mixed_eigenpairs(spec, theta, spec.eigen_index, resolution)
        evals += 1
        return pairs[spec.eigen_index - 1].value, theta[1]

    ts = np.linspace(t_lo + 0.02, t_hi - 0.02, 6)
    curve = []
    for t in ts:
        result = inner(t)
        if result is not None:
            curve.append((result[0], t, result[1]))
        if evals > max_evals * 3:
            break
    if not curve:
        raise TouchSolveError(
            f"{spec.name}: no touching configuration found on the t-scan")
    curve.sort()
    _, t_best, _ = curve[0]
    span = (ts[1] - ts[0])
    lo, hi = max(t_lo, t_best - span), min(t_hi, t_best + span)
    phi = 0.5 * (math.sqrt(5.0) - 1.0)
    a, b = hi - phi * (hi - lo), lo + phi * (hi - lo)
    fa, fb = inner(a), inner(b)
    for _ in range(10):
        if hi - lo < 0.01:
            break
        if fa is None or (fb is not None and fb[0] < fa[0]):
            lo, a, fa = a, b, fb
            b = lo + phi * (hi - lo)
            fb = inner(b)
        else:
            hi, b, fb = b, a, fa
            a = hi - phi * (hi - lo)
            fa = inner(a)
    best_t, best = min(((t, f) for t, f in ((a, fa), (b, fb))
                        if f is not None), key=lambda tf: tf[1][0])
    return np.array([best_t, best[1]])


def solve_touch(spec: MixedProblemSpec, bracket=None, resolution: int = 401,
                max_evals: int = 120) -> TouchSolution:
    """Find parameters where the nodal line meets the mobile points.

    One parameter: bisection on the signed residual down to |r| < h/2
    (requires a sign-changing bracket).  Several parameters: derivative-free
    simplex minimization of ||residual||_2 with one restart, same tolerance;
    specs flagged minimize_free instead pick the eigenvalue-minimal point of
    the one-dimensional touching family.
    """
    geom0 = spec.geometry(spec.check_theta(
        np.mean(spec.param_box, axis=1) if bracket is None else
        (np.atleast_2d(bracket)[0] if spec.n_params > 1 else
         [0.5 * (bracket[0] + bracket[1])])))
    x0, y0, x1, y1 = geom0.bbox
    h = max(x1 - x0, y1 - y0) / (resolution - 1)
    tol = 0.5 * h
    evals = 0

    def residual(theta):
        nonlocal evals
        evals += 1
        return touch_residual(spec, theta, resolution)

    if spec.minimize_free:
        theta = _solve_free_direction(spec, resolution, max_evals)
    elif spec.n_params == 1:
        if bracket is None:
            bracket = spec.bracket or tuple(spec.param_box[0])
        lo, hi = float(bracket[0]), float(bracket[1])
        r_lo = residual([lo])[0]
        r_hi = residual([hi])[0]
        if r_lo * r_hi > 0:
            raise TouchSolveError(
                f"{spec.name}: residual does not change sign on [{lo:g}, {hi:g}] "
                f"(r({lo:g})={r_lo:.3g}, r({hi:g})={r_hi:.3g})")
        mid, r_mid = lo, r_lo
        while evals < max_evals:
            mid = 0.5 * (lo + hi)
            r_mid = residual([mid])[0]
            if abs(r_mid) < tol:
                break
            if r_mid * r_lo <= 0:
                hi = mid
            else:
                lo, r_lo = mid, r_mid
        else:
            raise TouchSolveError(
                f"{spec.name}: bisection exceeded {max_evals} evaluations",
                best_theta=np.array([mid]), best_residual=abs(r_mid))
        if abs(r_mid) >= tol:
            raise TouchSolveError(
                f"{spec.name}: touch residual {abs(r_mid):.3g} above "
                f"tolerance {tol:.3g}",
                best_theta=np.array([mid]), best_residual=abs(r_mid))
        theta = np.array([mid])
    else:
        seed = np.asarray(bracket if bracket is not None else spec.bracket,
                          dtype=float)
        if seed.ndim != 2 or seed.shape != (spec.n_params + 1, spec.n_params):
            raise ValueError(
                f"{spec.name} needs an initial simplex of shape "
                f"({spec.n_params + 1}, {spec.n_params})")
        best = {"theta": None, "value": math.inf}

        def objective(theta):
            try:
                value = float(np.linalg.norm(residual(theta)))
            except ValueError:
                return 1e6  # outside the parameter box
            if value < best["value"]:
                best["value"] = value
                best["theta"] = np.array(theta)
            return value

        simplex = seed
        for _ in range(2):  # one restart around the incumbent
            res = minimize(objective, simplex[0], method="Nelder-Mead",
                           options={"initial_simplex": simplex,
                                    "xatol": 0.25 * h, "fatol": 0.25 * tol,
                                    "maxfev": max_evals // 2})
            if best["value"] < tol:
                break
            spread = np.abs(simplex - simplex[0]).max() * 0.5
            simplex = np.vstack([best["theta"],
                                 best["theta"] + np.eye(spec.n_params) * spread])
        if best["value"] >= tol:
            raise TouchSolveError(
                f"{spec.name}: simplex search stalled at residual "
                f"{best['value']:.3g} (tolerance {tol:.3g})",
                best_theta=best["theta"], best_residual=best["value"])
        theta = best["theta"]

    grid, value, u = _eigen_field(spec, theta, resolution)
    nodal = nodal_partition(u, grid.mask)
    if nodal.count > spec.eigen_index:
        log.warning("%s: %d nodal domains exceed the eigenfunction index %d",
                    spec.name, nodal.count, spec.eigen_index)
    return TouchSolution(theta, value, nodal,
                         touch_residual(spec, theta, resolution), evals)


# --------------------------------------------------------------------------
# symmetrization

def symmetrize(spec: MixedProblemSpec, theta, nodal: NodalPartition,
               resolution: int | None = None) -> PartitionGeometry:
    """Unfold the nodal cells through the symmetry recipe into a partition of
    the full domain.

    A full-domain grid is labeled by pulling each node back into the
    subdomain through the inverse transforms and reading off its nodal
    component; regions of one component merge across Neumann edges by grid
    connectivity, while unfolded Dirichlet interfaces cut them apart.  Raises
    when the resulting cell count differs from the intended k.
    """
    theta = spec.check_theta(theta)
    geom = spec.geometry(theta)
    sub = nodal.grid
    if resolution is None:
        # match the subdomain grid spacing on the full domain
        _, _, side = spec.domain.bounding_box()
        resolution = int(round(side / sub.h)) + 1
    mask = build_mask(spec.domain, resolution)
    X, Y = mask.node_xy()

    # labels dilated by two subdomain pixels, so lookups landing on the
    # excluded boundary/slit bands still resolve; farther misses stay -1
    dist, (src_y, src_x) = ndimage.distance_transform_edt(
        nodal.labels < 0, return_indices=True)
    filled = nodal.labels[src_y, src_x].copy()
    filled[dist > 2.0] = -1

    comp = np.full((mask.ny, mask.nx), -1, dtype=np.int32)
    for transform in spec.transforms:
        pending = mask.inside & (comp < 0)
        if not pending.any():
            break
        inv = transform.invert()
        xs, ys = inv.apply(X[pending], Y[pending])
        ix = np.round((xs - sub.x0) / sub.h).astype(int)
        iy = np.round((ys - sub.y0) / sub.h).astype(int)
        ok = (ix >= 0) & (ix < sub.nx) & (iy >= 0) & (iy < sub.ny)
        found = np.full(xs.shape, -1, dtype=np.int32)
        found[ok] = filled[iy[ok], ix[ok]]
        target = np.nonzero(pending)
        comp[target[0], target[1]] = np.where(found >= 0, found, -1)

    # cut along every unfolded Dirichlet interface that is interior to the
    # full domain, so duplicated regions of one component separate cleanly
    cut = np.zeros((mask.ny, mask.nx), dtype=bool)
    interfaces = list(geom.interior_segments)
    interfaces += [(bp.p0, bp.p1) for bp in geom.boundary_parts
                   if bp.tag == "dirichlet" and bp.kind == "segment"
                   and not bp.on_boundary]
    for transform in spec.transforms:
        for (a, b) in interfaces:
            pa = transform.apply(a[0], a[1])
            pb = transform.apply(b[0], b[1])
            dist = _point_segment_distance(X, Y, pa, pb)
            cut |= dist <= 0.55 * mask.h

    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    labels = np.full((mask.ny, mask.nx), -1, dtype=np.int32)
    n_cells = 0
    for c in range(nodal.count):
        region = (comp == c) & ~cut & mask.inside
        lab, ncomp = ndimage.label(region, structure=structure)
        sizes = ndimage.sum_labels(np.ones_like(lab), lab, range(1, ncomp + 1))
        for piece in range(1, ncomp + 1):
            if sizes[piece - 1] < 4:  # grid-noise slivers
                continue
            labels[lab == piece] = n_cells
            n_cells += 1

    if n_cells != spec.k:
        raise MixedProblemError(
            f"{spec.name}: symmetrization produced {n_cells} cells, "
            f"expected {spec.k}")

    # hand unassigned nodes (cut bands, lookup misses) to the nearest cell
    assigned = labels >= 0
    missing = mask.inside & ~assigned
    if missing.any():
        src = np.column_stack(np.nonzero(assigned))
        tree = cKDTree(src)
        dst = np.column_stack(np.nonzero(missing))
        _, idx = tree.query(dst)
        labels[missing] = labels[src[idx, 0], src[idx, 1]]

    partition = trace_contours(labels, mask)
    return snap_partition_to_domain(partition, spec.domain)
