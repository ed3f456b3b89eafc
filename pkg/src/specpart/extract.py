"""From converged densities to a strong polygonal partition and its energies.

Interior nodes are labeled by the largest density, cell outlines are traced by
marching squares on the label field (midpoint interface placement keeps the
partition strong), and each cell's first Dirichlet eigenvalue is recomputed on
a finer masked grid over the cell's own bounding box.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage.measure import find_contours

from .eigensolve import smallest_eigenpairs
from .grids import DomainSpec, GridMask, build_dirichlet_laplacian, build_mask
from .optimizer import DensitySet, pnorm_energy

log = logging.getLogger(__name__)

REFINE_RESOLUTION = 301


class ExtractionError(RuntimeError):
    pass


def shoelace_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass
class CellGeometry:
    """One cell: a closed outer polyline plus optional hole polylines."""

    outer: np.ndarray
    holes: list = field(default_factory=list)

    @property
    def area(self) -> float:
        a = abs(shoelace_area(self.outer))
        return a - sum(abs(shoelace_area(h)) for h in self.holes)


@dataclass
class SingularPoint:
    x: float
    y: float
    degree: int


@dataclass
class PartitionGeometry:
    """Strong partition: cells, their adjacency, and the singular points
    where three or more cells meet."""

    cells: list
    adjacency: list                  # sorted (i, j) pairs, i < j
    singular_points: list
    h: float                         # spacing of the grid the cells came from
    interface_lengths: dict = field(default_factory=dict)
    domain: DomainSpec | None = None

    @property
    def k(self) -> int:
        return len(self.cells)

    def total_area(self) -> float:
        return sum(c.area for c in self.cells)


@dataclass
class EnergyReport:
    """Per-cell refined eigenvalues and the derived partition energies."""

    cell_values: list
    p_list: list
    p_energies: list

    @property
    def value_max(self) -> float:
        return max(self.cell_values)

    @property
    def value_min(self) -> float:
        return min(self.cell_values)

    @property
    def equipartition_gap(self) -> float:
        return (self.value_max - self.value_min) / self.value_min

    def as_dict(self) -> dict:
        return {
            "cell_eigenvalues": list(self.cell_values),
            "p": list(self.p_list),
            "p_energies": list(self.p_energies),
            "max": self.value_max,
            "min": self.value_min,
            "equipartition_gap": self.equipartition_gap,
            "gap_convention": "(max-min)/min",
        }


def argmax_labels(densities: DensitySet) -> np.ndarray:
    """Label each interior node with the cell of largest density (ties go to
    the lowest index); outside nodes get -1."""
    labels = np.argmax(densities.values, axis=0).astype(np.int32)
    labels[~densities.grid.inside] = -1
    return labels


def _rings_for_label(labels: np.ndarray, mask: GridMask, cell: int) -> list:
    binary = (labels == cell).astype(float)
    contours = find_contours(binary, 0.5)
    rings = []
    for c in contours:
        if not np.array_equal(c[0], c[-1]):
            # regions touching the array edge trace open; close them so the
            # shoelace area stays meaningful
            c = np.vstack([c, c[:1]])
        xy = np.column_stack([mask.x0 + c[:, 1] * mask.h,
                              mask.y0 + c[:, 0] * mask.h])
        rings.append(xy)
    return rings


def _point_in_ring(pt, ring) -> bool:
    x, y = pt
    xs, ys = ring[:-1, 0], ring[:-1, 1]
    xe, ye = ring[1:, 0], ring[1:, 1]
    cross = (ys > y) != (ye > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xi = xs + (y - ys) * (xe - xs) / (ye - ys)
    return bool(np.sum(cross & (xi > x)) % 2)


def trace_contours(labels: np.ndarray, mask: GridMask) -> PartitionGeometry:
    """Marching-squares cell outlines, adjacency and singular points of a
    label field.  Interfaces pass through edge midpoints between differing
    labels, so the traced cells form a strong partition of the domain up to
    grid resolution."""
    k = int(labels.max()) + 1
    if k < 1:
        raise ExtractionError("label field contains no cells")
    cells = []
    for c in range(k):
        if not (labels == c).any():
            raise ExtractionError(f"cell {c} has an empty label set")
        rings = _rings_for_label(labels, mask, c)
        if not rings:
            raise ExtractionError(f"cell {c} produced no contour")
        rings.sort(key=lambda r: -abs(shoelace_area(r)))
        outer = rings[0]
        outer_area = abs(shoelace_area(outer))
        holes = []
        fragments = 0
        for r in rings[1:]:
            area = abs(shoelace_area(r))
            if area < (2 * mask.h) ** 2 or area > 0.5 * outer_area:
                fragments += 1
                continue
            if _point_in_ring(r[0], outer):
                holes.append(r)
            else:
                fragments += 1
        if fragments:
            log.warning("cell %d: kept the largest component, dropped %d "
                        "fragment(s)", c, fragments)
        cells.append(CellGeometry(outer, holes))

    adjacency, lengths = _adjacency_from_labels(labels, mask.h)
    singular = _singular_points(labels, mask)
    return PartitionGeometry(cells, adjacency, singular, mask.h, lengths)


def _adjacency_from_labels(labels: np.ndarray, h: float):
    pairs = {}
    for a, b in ((labels[:, :-1], labels[:, 1:]),
                 (labels[:-1, :], labels[1:, :])):
        ok = (a >= 0) & (b >= 0) & (a != b)
        lo = np.minimum(a[ok], b[ok])
        hi = np.maximum(a[ok], b[ok])
        keys, counts = np.unique(lo.astype(np.int64) << 32 | hi, return_counts=True)
        for key, cnt in zip(keys, counts):
            pair = (int(key >> 32), int(key & 0xFFFFFFFF))
            pairs[pair] = pairs.get(pair, 0) + int(cnt)
    adjacency = sorted(pairs)
    lengths = {pair: cnt * h for pair, cnt in pairs.items()}
    return adjacency, lengths


def _singular_points(labels: np.ndarray, mask: GridMask) -> list:
    a = labels[:-1, :-1]
    b = labels[:-1, 1:]
    c = labels[1:, :-1]
    d = labels[1:, 1:]
    stack = np.stack([a, b, c, d])
    stack = np.sort(stack, axis=0)
    distinct = np.ones(a.shape, dtype=np.int8)
    for i in range(1, 4):
        distinct += (stack[i] != stack[i - 1]).astype(np.int8)
    # ignore the outside pseudo-label in the count
    distinct -= (stack[0] == -1).astype(np.int8)
    rows, cols = np.nonzero(distinct >= 3)
    if rows.size == 0:
        return []
    pts = np.column_stack([mask.x0 + (cols + 0.5) * mask.h,
                           mask.y0 + (rows + 0.5) * mask.h])
    degrees = distinct[rows, cols]
    # merge clusters of adjacent candidate blocks into single points
    tree = cKDTree(pts)
    groups = tree.query_ball_point(pts, r=1.6 * mask.h)
    assigned = np.full(pts.shape[0], -1)
    cluster = 0
    for i in range(pts.shape[0]):
        if assigned[i] >= 0:
            continue
        stack_idx = [i]
        while stack_idx:
            j = stack_idx.pop()
            if assigned[j] >= 0:
                continue
            assigned[j] = cluster
            stack_idx.extend(g for g in groups[j] if assigned[g] < 0)
        cluster += 1
    points = []
    for cid in range(cluster):
        sel = assigned == cid
        points.append(SingularPoint(float(pts[sel, 0].mean()),
                                    float(pts[sel, 1].mean()),
                                    int(degrees[sel].max())))
    return points


def _snap_ring_to_boundary(ring: np.ndarray, domain: DomainSpec,
                           tol: float) -> np.ndarray:
    """Project contour vertices within `tol` of the domain boundary onto it;
    marching squares otherwise insets cells by half a grid step along the
    walls, which systematically inflates the refined eigenvalues."""
    out = ring.copy()
    x, y = out[:, 0], out[:, 1]
    if domain.kind == "square":
        s = domain.side
        for arr, limit in ((x, s), (y, s)):
            arr[np.abs(arr) < tol] = 0.0
            arr[np.abs(arr - limit) < tol] = limit
    elif domain.kind == "disk":
        r = np.hypot(x, y)
        grow = np.abs(r - domain.radius) < tol
        scale = np.where(grow & (r > 0), domain.radius / np.maximum(r, 1e-300), 1.0)
        out *= scale[:, None]
    elif domain.kind == "triangle":
        s = domain.side
        edges = (((0.0, 0.0), (s, 0.0)),
                 ((s, 0.0), (0.5 * s, 0.5 * math.sqrt(3) * s)),
                 ((0.5 * s, 0.5 * math.sqrt(3) * s), (0.0, 0.0)))
        for (ax, ay), (bx, by) in edges:
            ex, ey = bx - ax, by - ay
            norm2 = ex * ex + ey * ey
            t = ((x - ax) * ex + (y - ay) * ey) / norm2
            px = ax + np.clip(t, 0, 1) * ex
            py = ay + np.clip(t, 0, 1) * ey
            d = np.hypot(x - px, y - py)
            near = d < tol
            x[near] = px[near]
            y[near] = py[near]
    return out


def snap_partition_to_domain(geometry: PartitionGeometry,
                             domain: DomainSpec | None) -> PartitionGeometry:
    if domain is None or domain.kind not in ("square", "disk", "triangle"):
        return geometry
    tol = 0.75 * geometry.h
    for cell in geometry.cells:
        cell.outer = _snap_ring_to_boundary(cell.outer, domain, tol)
    geometry.domain = domain
    return geometry


def cell_eigenvalue_refined(cell, resolution: int = REFINE_RESOLUTION) -> float:
    """First Dirichlet eigenvalue of a polygonal cell by masked finite
    differences at the given resolution over the cell's bounding box."""
    if isinstance(cell, CellGeometry):
        outer, holes = cell.outer, cell.holes
    else:
        outer, holes = np.asarray(cell, dtype=float), []
    try:
        domain = DomainSpec.polygon(outer, holes)
    except Exception:
        if not holes:
            raise
        domain = DomainSpec.polygon(outer)  # invalid holes: fall back to shell
    mask = build_mask(domain, resolution)
    if mask.node_count == 0:
        raise ExtractionError("cell too thin for the grid (no interior nodes)")
    op = build_dirichlet_laplacian(mask)
    return smallest_eigenpairs(op, 1)[0].value


def energy_report(partition: PartitionGeometry, p_list,
                  resolution: int = REFINE_RESOLUTION,
                  jobs: int = 1) -> EnergyReport:
    """Refined per-cell eigenvalues and the partition energies for each
    requested p (math.inf allowed)."""
    def solve(cell):
        return cell_eigenvalue_refined(cell, resolution)

    if jobs > 1 and partition.k > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(solve, partition.cells))
    else:
        values = [solve(c) for c in partition.cells]
    p_list = list(p_list)
    energies = [pnorm_energy(values, p) for p in p_list]
    return EnergyReport(values, p_list, energies)


def extract_partition(densities: DensitySet,
                      domain: DomainSpec | None = None) -> PartitionGeometry:
    """argmax labeling, contour tracing, boundary snapping."""
    labels = argmax_labels(densities)
    geom = trace_contours(labels, densities.grid)
    return snap_partition_to_domain(geom, domain)
