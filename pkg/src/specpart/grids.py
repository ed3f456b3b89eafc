"""Uniform finite-difference grids, domain masks, and discrete Dirichlet Laplacians.

All domains live inside a square bounding box carrying an N x N node lattice
(the mixed-boundary solver reuses the same structures with rectangular node
counts).  Dirichlet conditions are encoded by exclusion: a node is a degree of
freedom only if it lies strictly inside the domain, and every missing stencil
neighbor contributes nothing, which pins the solution to zero there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
import shapely

from .eigensolve import SparseOperator

SQRT3 = math.sqrt(3.0)

# Fixed physical margin for domains that do not fill their box (disk, sector,
# polygon).  A fixed length (rather than "2 grid nodes") keeps the bounding box
# identical across refinement levels, which refine_field requires.
_ROUND_MARGIN = 0.08


class DomainError(ValueError):
    """Invalid or degenerate domain description."""


@dataclass(frozen=True)
class DomainSpec:
    """Geometric description of the domain to be partitioned.

    kind is one of "square", "disk", "triangle", "sector", "polygon".
    Vertices (polygon only) are in length units; holes are inner loops.
    Symmetry metadata is informational and not used by the solvers.
    """

    kind: str
    radius: float = 1.0
    side: float = 1.0
    opening: float = 0.0
    vertices: tuple = ()
    holes: tuple = ()
    symmetry: dict = field(default_factory=dict)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def square(side: float = 1.0) -> "DomainSpec":
        if side <= 0:
            raise DomainError("square side must be positive")
        return DomainSpec("square", side=side,
                          symmetry={"reflection_axes": 4, "rotation_order": 4})

    @staticmethod
    def disk(radius: float = 1.0) -> "DomainSpec":
        if radius <= 0:
            raise DomainError("disk radius must be positive")
        return DomainSpec("disk", radius=radius,
                          symmetry={"reflection_axes": -1, "rotation_order": -1})

    @staticmethod
    def triangle(side: float = 1.0) -> "DomainSpec":
        if side <= 0:
            raise DomainError("triangle side must be positive")
        return DomainSpec("triangle", side=side,
                          symmetry={"reflection_axes": 3, "rotation_order": 3})

    @staticmethod
    def sector(opening: float, radius: float = 1.0) -> "DomainSpec":
        if not (0.0 < opening <= 2.0 * math.pi):
            raise DomainError("sector opening must lie in (0, 2*pi]")
        if radius <= 0:
            raise DomainError("sector radius must be positive")
        return DomainSpec("sector", radius=radius, opening=opening,
                          symmetry={"reflection_axes": 1, "rotation_order": 1})

    @staticmethod
    def polygon(vertices, holes=()) -> "DomainSpec":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise DomainError("polygon needs at least 3 vertices")
        hol = tuple(tuple((float(x), float(y)) for x, y in ring) for ring in holes)
        spec = DomainSpec("polygon", vertices=verts, holes=hol)
        if spec.shapely().area <= 0:
            raise DomainError("polygon has zero area")
        return spec

    @staticmethod
    def from_name(name: str) -> "DomainSpec":
        table = {"square": DomainSpec.square, "disk": DomainSpec.disk,
                 "triangle": DomainSpec.triangle}
        if name not in table:
            raise DomainError(f"unknown domain name {name!r}")
        return table[name]()

    # -- geometry ----------------------------------------------------------
    def bounding_box(self):
        """(x0, y0, side) of the square box the grid is built on."""
        if self.kind == "square":
            return (0.0, 0.0, self.side)
        if self.kind == "triangle":
            return (0.0, 0.0, self.side)
        if self.kind in ("disk", "sector"):
            r = self.radius
            return (-r - _ROUND_MARGIN, -r - _ROUND_MARGIN,
                    2.0 * (r + _ROUND_MARGIN))
        if self.kind == "polygon":
            xs = [v[0] for v in self.vertices]
            ys = [v[1] for v in self.vertices]
            size = max(max(xs) - min(xs), max(ys) - min(ys))
            if size <= 0:
                raise DomainError("degenerate polygon bounding box")
            # anchor the box at the bbox corner: axis-aligned polygon edges
            # then land exactly on grid lines, keeping second-order accuracy
            return (min(xs), min(ys), size)
        raise DomainError(f"unknown domain kind {self.kind!r}")

    def shapely(self):
        if self.kind != "polygon":
            raise DomainError("shapely() is only defined for polygon domains")
        return shapely.Polygon(self.vertices, self.holes)

    def contains(self, x, y):
        """Vectorized strict point-in-domain test.  Nodes on the boundary (up
        to a relative 1e-9 guard against coordinate rounding) are outside."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "square":
            s = self.side
            tol = 1e-9 * s
            return (x > tol) & (x < s - tol) & (y > tol) & (y < s - tol)
        if self.kind == "disk":
            r2 = self.radius ** 2
            return x * x + y * y < r2 * (1.0 - 1e-9)
        if self.kind == "triangle":
            s = self.side
            tol = 1e-9 * s
            return ((y > tol) & (SQRT3 * x - y > tol)
                    & (SQRT3 * (s - x) - y > tol))
        if self.kind == "sector":
            r2 = x * x + y * y
            theta = np.arctan2(y, x)
            half = 0.5 * self.opening
            inside = (r2 > 0.0) & (r2 < self.radius ** 2 * (1.0 - 1e-9))
            return inside & (np.abs(theta) < half - 1e-9)
        if self.kind == "polygon":
            poly = self.shapely()
            _, _, size = self.bounding_box()
            eroded = poly.buffer(-1e-9 * size)
            if eroded.is_empty:
                eroded = poly
            return shapely.contains_xy(eroded, x, y)
        raise DomainError(f"unknown domain kind {self.kind!r}")

    def area(self) -> float:
        if self.kind == "square":
            return self.side ** 2
        if self.kind == "disk":
            return math.pi * self.radius ** 2
        if self.kind == "triangle":
            return SQRT3 / 4.0 * self.side ** 2
        if self.kind == "sector":
            return 0.5 * self.opening * self.radius ** 2
        return self.shapely().area


@dataclass(frozen=True)
class GridMask:
    """Node lattice over a bounding box with an interior/exterior flag.

    inside[iy, ix] is True iff node (x0 + ix*h, y0 + iy*h) lies strictly
    inside the domain.  interior_index maps nodes to 0..M-1 (-1 outside) and
    nodes gives the inverse (row, col) per interior index.
    """

    x0: float
    y0: float
    h: float
    nx: int
    ny: int
    inside: np.ndarray
    interior_index: np.ndarray
    nodes: np.ndarray

    @staticmethod
    def from_inside(x0, y0, h, inside) -> "GridMask":
        inside = np.asarray(inside, dtype=bool)
        ny, nx = inside.shape
        index = np.full((ny, nx), -1, dtype=np.int64)
        rows, cols = np.nonzero(inside)
        index[rows, cols] = np.arange(rows.size)
        nodes = np.stack([rows, cols], axis=1)
        return GridMask(float(x0), float(y0), float(h), nx, ny,
                        inside, index, nodes)

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def n(self) -> int:
        """Nodes per side (square lattices only)."""
        if self.nx != self.ny:
            raise ValueError("grid is not square")
        return self.nx

    def node_xy(self):
        """Physical coordinates of every lattice node, shape (ny, nx) each."""
        xs = self.x0 + self.h * np.arange(self.nx)
        ys = self.y0 + self.h * np.arange(self.ny)
        return np.meshgrid(xs, ys)

    def same_box(self, other: "GridMask", tol: float = 1e-9) -> bool:
        return (abs(self.x0 - other.x0) <= tol and abs(self.y0 - other.y0) <= tol
                and abs(self.x0 + self.h * (self.nx - 1)
                        - (other.x0 + other.h * (other.nx - 1))) <= tol
                and abs(self.y0 + self.h * (self.ny - 1)
                        - (other.y0 + other.h * (other.ny - 1))) <= tol)


@dataclass(frozen=True)
class SubGridWindow:
    """Inclusive node-index rectangle [row0, row1] x [col0, col1]."""

    row0: int
    row1: int
    col0: int
    col1: int

    def __post_init__(self):
        if self.row1 < self.row0 or self.col1 < self.col0:
            raise ValueError("empty window")

    @staticmethod
    def full(mask: GridMask) -> "SubGridWindow":
        return SubGridWindow(0, mask.ny - 1, 0, mask.nx - 1)

    def selector(self, mask: GridMask) -> np.ndarray:
        sel = np.zeros((mask.ny, mask.nx), dtype=bool)
        sel[self.row0:self.row1 + 1, self.col0:self.col1 + 1] = True
        return sel

    def contains(self, other: "SubGridWindow") -> bool:
        return (self.row0 <= other.row0 and self.row1 >= other.row1
                and self.col0 <= other.col0 and self.col1 >= other.col1)


@dataclass
class ScalarField:
    """One real value per lattice node; zero at every node outside the domain."""

    grid: GridMask
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.ny, self.grid.nx):
            raise ValueError("field shape does not match its grid")
        self.values = np.where(self.grid.inside, values, 0.0)

    @staticmethod
    def zeros(grid: GridMask) -> "ScalarField":
        return ScalarField(grid, np.zeros((grid.ny, grid.nx)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def build_mask(domain: DomainSpec, n: int) -> GridMask:
    """N x N lattice over the domain's bounding box with strict interior flags.

    h = box side / (n - 1).  Nodes exactly on the boundary are outside, which
    is how the Dirichlet condition enters the discrete operator.
    """
    if n < 5:
        raise ValueError("need at least 5 nodes per side")
    if domain.area() <= 0:
        raise DomainError("degenerate domain (zero area)")
    x0, y0, side = domain.bounding_box()
    h = side / (n - 1)
    # linspace pins the endpoints exactly, so boundary-aligned nodes are
    # classified consistently
    xs = np.linspace(x0, x0 + side, n)
    ys = np.linspace(y0, y0 + side, n)
    X, Y = np.meshgrid(xs, ys)
    inside = domain.contains(X, Y)
    if not inside.any():
        raise DomainError("domain contains no grid nodes at this resolution")
    return GridMask.from_inside(x0, y0, h, inside)


def laplacian_on(selected: np.ndarray, h: float) -> sparse.csr_matrix:
    """5-point Laplacian restricted to the True nodes of `selected`.

    Diagonal is 4/h^2; each selected neighbor contributes -1/h^2.  Missing
    neighbors (outside the selection) contribute nothing off-diagonal, which
    imposes u = 0 there.
    """
    selected = np.asarray(selected, dtype=bool)
    ny, nx = selected.shape
    index = np.full((ny, nx), -1, dtype=np.int64)
    rows, cols = np.nonzero(selected)
    m = rows.size
    if m == 0:
        raise ValueError("empty node selection")
    index[rows, cols] = np.arange(m)
    inv_h2 = 1.0 / (h * h)

    data = [np.full(m, 4.0 * inv_h2)]
    ii = [np.arange(m)]
    jj = [np.arange(m)]
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        r2, c2 = rows + dr, cols + dc
        ok = (r2 >= 0) & (r2 < ny) & (c2 >= 0) & (c2 < nx)
        ok[ok] &= selected[r2[ok], c2[ok]]
        ii.append(index[rows[ok], cols[ok]])
        jj.append(index[r2[ok], c2[ok]])
        data.append(np.full(int(ok.sum()), -inv_h2))
    A = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(ii), np.concatenate(jj))),
        shape=(m, m))
    return A


def build_dirichlet_laplacian(mask: GridMask) -> SparseOperator:
    """Symmetric M x M operator of the 5-point stencil on the interior nodes."""
    if mask.node_count < 1:
        raise ValueError("mask has no interior nodes")
    return SparseOperator(laplacian_on(mask.inside, mask.h))


def refine_field(fieldv: ScalarField, target_mask: GridMask) -> ScalarField:
    """Bilinear interpolation onto a finer grid over the same bounding box,
    re-zeroed at nodes outside the domain on the fine mask."""
    src = fieldv.grid
    if not src.same_box(target_mask):
        raise ValueError("refine_field requires matching bounding boxes")
    xs = target_mask.x0 + target_mask.h * np.arange(target_mask.nx)
    ys = target_mask.y0 + target_mask.h * np.arange(target_mask.ny)
    # fractional source-lattice coordinates of the fine nodes
    cx = np.clip((xs - src.x0) / src.h, 0.0, src.nx - 1.0)
    cy = np.clip((ys - src.y0) / src.h, 0.0, src.ny - 1.0)
    j0 = np.minimum(cx.astype(int), src.nx - 2)
    i0 = np.minimum(cy.astype(int), src.ny - 2)
    tx = cx - j0
    ty = cy - i0
    v = fieldv.values
    TX, TY = np.meshgrid(tx, ty)
    J0, I0 = np.meshgrid(j0, i0)
    fine = ((1 - TX) * (1 - TY) * v[I0, J0]
            + TX * (1 - TY) * v[I0, J0 + 1]
            + (1 - TX) * TY * v[I0 + 1, J0]
            + TX * TY * v[I0 + 1, J0 + 1])
    return ScalarField(target_mask, fine)


def restrict_window(fieldv: ScalarField, threshold: float = 0.01,
                    margin: int = 5) -> SubGridWindow:
    """Smallest node rectangle containing {value > threshold}, padded by
    `margin` rows/columns and clipped to the grid.  Falls back to the full
    grid when nothing exceeds the threshold (a vanished cell must be able to
    re-grow anywhere)."""
    mask = fieldv.grid
    above = fieldv.values > threshold
    if not above.any():
        return SubGridWindow.full(mask)
    rows = np.nonzero(above.any(axis=1))[0]
    cols = np.nonzero(above.any(axis=0))[0]
    return SubGridWindow(
        max(int(rows[0]) - margin, 0), min(int(rows[-1]) + margin, mask.ny - 1),
        max(int(cols[0]) - margin, 0), min(int(cols[-1]) + margin, mask.nx - 1))


def write_pgm(mask: GridMask, path) -> None:
    """Binary PGM (P5) of the mask: 0 = outside, 255 = inside."""
    img = np.where(mask.inside, 255, 0).astype(np.uint8)
    img = img[::-1]  # raster origin is top-left
    with open(path, "wb") as fh:
        fh.write(f"P5\n{mask.nx} {mask.ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
