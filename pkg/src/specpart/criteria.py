"""Diagnostics for candidate partitions.

The equipartition gap measures how far a candidate is from the necessary
max-optimality condition.  The L2 neighbor criterion compares the mass the
second eigenfunction of a merged neighbor pair puts on each side: an
asymmetric split certifies that a max-minimizer cannot also minimize the
average.  The p-sweep driver traces how optimal energies and partitions move
as the norm exponent grows.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import shapely
from scipy.spatial import cKDTree

from .eigensolve import SparseOperator, smallest_eigenpairs
from .extract import PartitionGeometry, energy_report, extract_partition
from .grids import DomainSpec, laplacian_on
from .optimizer import OptimizeConfig, optimize

log = logging.getLogger(__name__)

MASS_GAP_THRESHOLD = 0.03


class CriterionError(RuntimeError):
    pass


def equipartition_gap(lams) -> float:
    """(max - min) / min of the per-cell eigenvalues."""
    lams = np.asarray(lams, dtype=float)
    if lams.size < 1 or np.any(lams <= 0):
        raise ValueError("need positive eigenvalues")
    return float((lams.max() - lams.min()) / lams.min())


def neighbors(partition: PartitionGeometry) -> set:
    """Pairs of cells sharing an interface of positive length."""
    return {pair for pair, length in partition.interface_lengths.items()
            if length > 0}


@dataclass
class NeighborCriterionResult:
    pair: tuple
    masses: tuple           # L2 masses of the pair's second eigenfunction
    gap: float
    verdict: str            # "distinguishes" | "inconclusive"
    eigenvalue: float

    def as_dict(self) -> dict:
        return {"pair": list(self.pair), "masses": list(self.masses),
                "gap": self.gap, "verdict": self.verdict,
                "eigenvalue": self.eigenvalue,
                "threshold": MASS_GAP_THRESHOLD}


def _cell_polygon(cell):
    poly = shapely.Polygon(cell.outer, [h for h in cell.holes])
    return shapely.make_valid(poly)


def l2_neighbor_criterion(partition: PartitionGeometry, pair,
                          resolution: int = 301) -> NeighborCriterionResult:
    """Second eigenfunction of the merged pair of neighbor cells: masses per
    side, their gap, and whether the gap clears the decision threshold.

    Raises when the eigenfunction's nodal line does not follow the shared
    interface (the pair is then not nodally compatible and the criterion does
    not apply).
    """
    i, j = sorted(pair)
    if (i, j) not in neighbors(partition):
        raise CriterionError(f"cells {i} and {j} are not neighbors")
    poly_i = _cell_polygon(partition.cells[i])
    poly_j = _cell_polygon(partition.cells[j])
    closing = 1.2 * partition.h
    merged = shapely.unary_union([poly_i, poly_j]).buffer(closing).buffer(-closing)
    if merged.geom_type != "Polygon":
        merged = max(merged.geoms, key=lambda g: g.area)

    x0, y0, x1, y1 = merged.bounds
    size = max(x1 - x0, y1 - y0)
    h = size / (resolution - 1)
    nx = int(round((x1 - x0) / h)) + 1
    ny = int(round((y1 - y0) / h)) + 1
    xs = x0 + h * np.arange(nx)
    ys = y0 + h * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)
    inside = shapely.contains_xy(merged, X, Y)
    if not inside.any():
        raise CriterionError("merged region too thin for the grid")

    op = SparseOperator(laplacian_on(inside, h))
    m = min(4, op.dimension)
    pairs = smallest_eigenpairs(op, m)
    eigenvalue = pairs[1].value

    side_i = shapely.contains_xy(poly_i, X, Y) & inside
    side_j = inside & ~side_i

    # the second eigenvalue can be degenerate (congruent halves); pick the
    # eigenspace combination aligned with the pair labeling
    basis = [p.vector for p in pairs[1:]
             if p.value <= eigenvalue * (1 + 1e-6)]
    target = np.where(side_i, 1.0, -1.0)[inside]
    coeffs = [v @ target for v in basis]
    combo = sum(c * v for c, v in zip(coeffs, basis))
    norm = np.linalg.norm(combo)
    if norm < 1e-9 * np.linalg.norm(target):
        raise CriterionError(
            f"pair ({i}, {j}) not nodally compatible: the second eigenspace "
            "carries no component matching the pair labeling")
    u2 = np.zeros((ny, nx))
    u2[inside] = combo / norm

    # nodal-compatibility: away from the interface the sign must be constant
    # per side (the nodal line has to track the shared boundary within ~2h)
    interface = np.zeros((ny, nx), dtype=bool)
    interface[:-1] |= side_i[:-1] & side_j[1:]
    interface[1:] |= side_i[1:] & side_j[:-1]
    interface[:, :-1] |= side_i[:, :-1] & side_j[:, 1:]
    interface[:, 1:] |= side_i[:, 1:] & side_j[:, :-1]
    if not interface.any():
        raise CriterionError("pair shares no interface on the merged grid")
    tree = cKDTree(np.column_stack(np.nonzero(interface)))
    rows, cols = np.nonzero(inside)
    dist, _ = tree.query(np.column_stack([rows, cols]))
    far = np.zeros((ny, nx), dtype=bool)
    far[rows[dist > 2.0], cols[dist > 2.0]] = True
    for side, name in ((side_i, i), (side_j, j)):
        vals = u2[side & far]
        if vals.size == 0:
            continue
        dominant = np.sign(np.median(vals))
        agree = np.mean(np.sign(vals) == dominant)
        if agree < 0.98:
            raise CriterionError(
                f"pair ({i}, {j}) not nodally compatible: second eigenfunction "
                f"changes sign inside cell {name}")
    si = np.sign(np.median(u2[side_i & far])) if (side_i & far).any() else 0
    sj = np.sign(np.median(u2[side_j & far])) if (side_j & far).any() else 0
    if si == sj:
        raise CriterionError(
            f"pair ({i}, {j}) not nodally compatible: no sign change across "
            "the interface")

    mass_i = float(np.sum(u2[side_i] ** 2))
    mass_j = float(np.sum(u2[side_j] ** 2))
    total = mass_i + mass_j
    masses = (mass_i / total, mass_j / total)
    gap = abs(masses[0] - masses[1])
    verdict = "distinguishes" if gap > MASS_GAP_THRESHOLD else "inconclusive"
    return NeighborCriterionResult((i, j), masses, gap, verdict, eigenvalue)


@dataclass
class PSweepResult:
    domain: str
    k: int
    p_grid: list
    energy_p: list          # optimized p-energy of the extracted partition
    energy_max: list        # largest cell eigenvalue per p
    cell_values: list       # per-p refined eigenvalues
    reference: float | None = None
    errors: list = field(default_factory=list)

    def rows(self):
        for idx, p in enumerate(self.p_grid):
            yield (p, self.energy_p[idx], self.energy_max[idx],
                   self.cell_values[idx])


def p_sweep(domain: DomainSpec, k: int, p_grid, config: OptimizeConfig,
            cold_start: bool = False, report_resolution: int = 301,
            reference: float | None = None) -> PSweepResult:
    """Optimize the partition for each p (warm-starting from the previous
    optimum unless cold_start) and report both energy curves from refined
    eigenvalues.  Per-p failures are recorded and the sweep continues."""
    p_grid = [float(p) for p in p_grid]
    if any(p_grid[i + 1] <= p_grid[i] for i in range(len(p_grid) - 1)):
        raise ValueError("p grid must be ascending")
    result = PSweepResult(domain.kind, k, p_grid, [], [], [],
                          reference=reference, errors=[])
    init = None
    for p in p_grid:
        cfg = replace(config, k=k, objective="pnorm", p=p)
        try:
            run = optimize(domain, cfg, init=None if cold_start else init)
            geometry = extract_partition(run.densities, domain)
            report = energy_report(geometry, [p], resolution=report_resolution,
                                   jobs=config.jobs)
            result.energy_p.append(report.p_energies[0])
            result.energy_max.append(report.value_max)
            result.cell_values.append(list(report.cell_values))
            result.errors.append(None)
            init = run.densities
        except Exception as exc:  # keep partial results, mark the failure
            log.warning("p-sweep entry p=%g failed: %s", p, exc)
            result.energy_p.append(math.nan)
            result.energy_max.append(math.nan)
            result.cell_values.append([])
            result.errors.append(str(exc))
    return result
