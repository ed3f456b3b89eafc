"""Iterative partition optimizer on relaxed density fields.

Each cell of the partition is a density in [0, 1] on the grid; the densities
sum to one at every interior node.  A cell's first eigenvalue is approximated
by the smallest eigenvalue of  -Lap + C (1 - phi)  on a rectangular window
around the cell's support, and the objective (power mean of the eigenvalues,
or their average plus a pairwise-difference penalty) is driven downhill by
projected gradient descent with backtracking, over a schedule of grids refined
by interpolation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .eigensolve import SparseOperator, smallest_eigenpairs
from .grids import (DomainSpec, GridMask, ScalarField, SubGridWindow,
                    build_mask, laplacian_on, refine_field, restrict_window)

log = logging.getLogger(__name__)

WINDOW_THRESHOLD = 0.01
WINDOW_MARGIN = 5
PARTITION_TOL = 1e-12
P_CAP = 50.0
LOGSPACE_P = 20.0
_VANISH_LEVEL = 1e-3


class OptimizeError(RuntimeError):
    """Optimization aborted (solver failure or non-finite energy)."""


@dataclass
class DensitySet:
    """k density fields on a common grid forming a partition of unity."""

    grid: GridMask
    values: np.ndarray  # shape (k, ny, nx)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1:] != (self.grid.ny, self.grid.nx):
            raise ValueError("density array shape does not match grid")
        self.values = v * self.grid.inside

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def field(self, j: int) -> ScalarField:
        return ScalarField(self.grid, self.values[j])

    @property
    def fields(self) -> list[ScalarField]:
        return [self.field(j) for j in range(self.k)]

    def copy(self) -> "DensitySet":
        return DensitySet(self.grid, self.values.copy())

    def partition_residual(self) -> float:
        """Max deviation of the per-node density sum from 1 over the interior."""
        total = self.values.sum(axis=0)
        return float(np.abs(total[self.grid.inside] - 1.0).max())


@dataclass(frozen=True)
class OptimizeConfig:
    """Settings for one optimization run."""

    k: int
    objective: str = "pnorm"          # "pnorm" | "penalized"
    p: float = 1.0
    eps_schedule: tuple = (10.0, 1.0, 0.1, 0.01)
    grids: tuple = (60, 120, 240, 480)
    c_schedule: tuple | None = None
    seed: int = 0
    min_step: float = 1e-6
    max_iters: int = 200
    stall_tol: float = 1e-5   # stop a stage when 5 iterations move less
    jobs: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.objective not in ("pnorm", "penalized"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.objective == "pnorm":
            if not 1.0 <= self.p <= P_CAP:
                raise ValueError(f"p must lie in [1, {P_CAP:g}]")
        eps = tuple(self.eps_schedule)
        if any(e <= 0 for e in eps) or any(
                eps[i + 1] >= eps[i] for i in range(len(eps) - 1)):
            raise ValueError("eps schedule must be strictly decreasing and positive")
        if len(self.grids) < 1 or any(n < 5 for n in self.grids) or any(
                self.grids[i + 1] <= self.grids[i] for i in range(len(self.grids) - 1)):
            raise ValueError("grid schedule must be ascending with n >= 5")
        if self.c_schedule is not None and len(self.c_schedule) != len(self.grids):
            raise ValueError("C schedule length must match grid schedule")

    def resolved_c_schedule(self) -> tuple:
        if self.c_schedule is not None:
            return tuple(float(c) for c in self.c_schedule)
        levels = len(self.grids)
        if levels == 1:
            return (1e7,)
        # 1e4 on the coarsest full grid, 1e7 once the restriction windows
        # have localized on the finer grids
        return tuple(np.logspace(4.0, 7.0, levels))


@dataclass
class LevelHistory:
    n: int
    C: float
    eps: float | None
    energies: list = field(default_factory=list)


@dataclass
class OptimizeResult:
    densities: DensitySet
    history: list          # LevelHistory per grid level / eps stage
    eigenvalues: list      # final per-cell relaxed eigenvalues
    config: OptimizeConfig

    @property
    def energy_history(self) -> list:
        return [list(h.energies) for h in self.history]


# -- energies and their gradients in eigenvalue space -----------------------

def pnorm_energy(lams, p: float) -> float:
    """Power mean ((1/k) sum lam^p)^(1/p); max when p is infinite."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise ValueError("eigenvalues must be positive")
    if math.isinf(p):
        return float(lams.max())
    k = lams.size
    if p > LOGSPACE_P:
        logs = p * np.log(lams)
        return float(math.exp((np.logaddexp.reduce(logs) - math.log(k)) / p))
    return float((np.mean(lams ** p)) ** (1.0 / p))


def pnorm_gradient_weights(lams, p: float) -> np.ndarray:
    """Per-cell weights w_j with d(energy)/d(node) = sum_j w_j dlam_j/d(node).

    w_j = (1/k) lam_j^(p-1) ((1/k) sum lam^p)^(1/p - 1); evaluated in
    log space above p = 20 to dodge overflow.
    """
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0):
        raise ValueError("eigenvalues must be positive")
    if math.isinf(p):
        raise ValueError("gradient weights need finite p")
    k = lams.size
    if p > LOGSPACE_P:
        log_s = np.logaddexp.reduce(p * np.log(lams)) - math.log(k)
        logs = -math.log(k) + (p - 1.0) * np.log(lams) + (1.0 / p - 1.0) * log_s
        return np.exp(logs)
    s = np.mean(lams ** p)
    return (1.0 / k) * lams ** (p - 1.0) * s ** (1.0 / p - 1.0)


def penalized_energy(lams, eps: float) -> float:
    """Average eigenvalue plus (1/eps) sum over pairs of squared differences."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lams = np.asarray(lams, dtype=float)
    diffs = lams[:, None] - lams[None, :]
    # each unordered pair appears twice in the full difference matrix
    penalty = 0.5 * np.sum(diffs ** 2) / eps
    return float(np.mean(lams) + penalty)


def penalized_gradient_weights(lams, eps: float) -> np.ndarray:
    """d(penalized energy)/d(lam_j) = 1/k + (2/eps) sum_{i != j} (lam_j - lam_i)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lams = np.asarray(lams, dtype=float)
    k = lams.size
    return 1.0 / k + (2.0 / eps) * (k * lams - lams.sum())


def project_partition(densities: DensitySet) -> DensitySet:
    """Restore the partition-of-unity constraint: phi_j <- |phi_j| / sum |phi_i|.

    Interior nodes where every density vanishes get the uniform value 1/k.
    Outside nodes stay zero.
    """
    a = np.abs(densities.values)
    total = a.sum(axis=0)
    k = densities.k
    dead = densities.grid.inside & (total <= 0.0)
    safe_total = np.where(total > 0.0, total, 1.0)
    out = a / safe_total
    if dead.any():
        out[:, dead] = 1.0 / k
    return DensitySet(densities.grid, out)


def random_densities(grid: GridMask, k: int, seed: int) -> DensitySet:
    """Uniform random admissible densities (projected), deterministic per seed."""
    rng = np.random.default_rng(seed)
    vals = rng.uniform(size=(k, grid.ny, grid.nx))
    return project_partition(DensitySet(grid, vals))


# -- relaxed eigenvalues -----------------------------------------------------

def _window_operator(fieldv: ScalarField, C: float,
                     window: SubGridWindow) -> tuple[SparseOperator, np.ndarray]:
    mask = fieldv.grid
    sel = mask.inside & window.selector(mask)
    if not sel.any():
        raise OptimizeError("window contains no interior nodes")
    A = laplacian_on(sel, mask.h)
    phi = fieldv.values[sel]
    op = SparseOperator.__new__(SparseOperator)
    op.matrix = A
    return op.plus_diagonal(C * (1.0 - phi)), sel


def relaxed_eigen(fieldv: ScalarField, C: float, window: SubGridWindow,
                  v0: np.ndarray | None = None) -> tuple[float, ScalarField]:
    """Smallest eigenpair of -Lap + C (1 - phi) on the window's interior
    nodes; the eigenvector is returned zero-extended to the full grid with
    unit Euclidean norm."""
    if C <= 0:
        raise ValueError("C must be positive")
    vals = fieldv.values
    if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
        raise ValueError("density values must lie in [0, 1]")
    h = fieldv.grid.h
    if C * h * h > 1e6 * (4.0 / (h * h)):
        log.warning("penalization C=%.1e is large for h=%.2e; the operator "
                    "may be ill conditioned", C, h)
    op, sel = _window_operator(fieldv, C, window)
    if v0 is not None and v0.shape != (op.dimension,):
        v0 = None
    pair = smallest_eigenpairs(op, 1, v0=v0)[0]
    u = np.zeros_like(vals)
    u[sel] = pair.vector
    return pair.value, ScalarField(fieldv.grid, u)


def eigen_gradient(u: ScalarField, C: float) -> ScalarField:
    """Gradient -C u_i^2 of the relaxed eigenvalue with respect to the
    density at each node (zero wherever the eigenvector is zero)."""
    return ScalarField(u.grid, -C * u.values ** 2)


# -- the optimization loop ---------------------------------------------------

class _Objective:
    def __init__(self, kind: str, p: float = 1.0, eps: float = 1.0):
        self.kind = kind
        self.p = p
        self.eps = eps

    def energy(self, lams) -> float:
        if self.kind == "pnorm":
            return pnorm_energy(lams, self.p)
        return penalized_energy(lams, self.eps)

    def weights(self, lams) -> np.ndarray:
        if self.kind == "pnorm":
            return pnorm_gradient_weights(lams, self.p)
        return penalized_gradient_weights(lams, self.eps)


def _solve_cells(densities: DensitySet, C: float, windows, v0s, jobs: int):
    """Relaxed eigenpair for every cell; independent solves may run in
    parallel threads (scipy releases the GIL in the factorizations)."""
    def solve(j):
        return relaxed_eigen(densities.field(j), C, windows[j], v0=v0s[j])

    if jobs > 1 and densities.k > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(solve, range(densities.k)))
    else:
        results = [solve(j) for j in range(densities.k)]
    lams = np.array([r[0] for r in results])
    us = [r[1] for r in results]
    return lams, us


def _reseed_vanished(values: np.ndarray, grid: GridMask) -> None:
    """Give any support-empty cell a small bump (applied before projection) at
    the interior node where the density sum falls shortest of 1."""
    k, ny, nx = values.shape
    total = np.abs(values).sum(axis=0)
    for j in range(k):
        if np.abs(values[j]).max() >= _VANISH_LEVEL:
            continue
        deficit = np.where(grid.inside, total, np.inf)
        iy, ix = np.unravel_index(int(np.argmin(deficit)), deficit.shape)
        X, Y = np.meshgrid(np.arange(nx), np.arange(ny))
        d2 = (X - ix) ** 2 + (Y - iy) ** 2
        values[j] += 0.5 * np.exp(-d2 / 8.0) * grid.inside
        log.info("reseeded vanished cell %d at node (%d, %d)", j, iy, ix)


def optimize(domain: DomainSpec, config: OptimizeConfig,
             init: DensitySet | None = None) -> OptimizeResult:
    """Run the full multigrid optimization and return the final densities,
    the per-level energy history, and the final relaxed eigenvalues.

    A level iterates: recompute per-cell windows, solve the relaxed
    eigenproblems, assemble the objective gradient, take a backtracking step
    (halving from 0.1/max|grad|), and project back onto the partition
    constraint.  The level ends when no step of at least `min_step` decreases
    the energy.  Densities are interpolated onto the next grid; in penalized
    mode the eps continuation runs entirely on the finest grid.
    """
    c_schedule = config.resolved_c_schedule()
    history: list[LevelHistory] = []
    densities = None
    lams = None
    alpha = _ALPHA_START

    for level, n in enumerate(config.grids):
        mask = build_mask(domain, n)
        C = c_schedule[level]
        if densities is None:
            if init is not None:
                if not init.grid.same_box(mask) or init.grid.nx != mask.nx:
                    raise ValueError("initial densities do not match the first grid")
                densities = project_partition(init.copy())
            else:
                densities = random_densities(mask, config.k, config.seed)
        else:
            refined = np.stack([
                refine_field(densities.field(j), mask).values
                for j in range(config.k)])
            densities = project_partition(DensitySet(mask, refined))

        last_level = level == len(config.grids) - 1
        if config.objective == "penalized":
            # every level minimizes the first (largest-eps) functional, which
            # keeps the eigenvalues comparable while the cells segregate; the
            # eps continuation then runs entirely on the finest grid
            stages = [_Objective("penalized", eps=config.eps_schedule[0])]
            if last_level:
                stages += [_Objective("penalized", eps=e)
                           for e in config.eps_schedule[1:]]
        else:
            stages = [_Objective("pnorm", p=config.p)]

        # coarse levels get the full iteration budget; the frontier only needs
        # node-scale polish after each refinement
        budget = max(60, config.max_iters >> level)
        for stage in stages:
            # continuation: keep the adapted step scale across stages/levels
            alpha = min(max(alpha, _ALPHA_START), 1e6)
            densities, lams, entry, alpha = _descend(
                densities, C, stage, config, n, budget, alpha)
            history.append(entry)

    return OptimizeResult(densities, history, [float(x) for x in lams], config)


_ALPHA_START = 0.1
# Growth of a cell advances roughly log(alpha) / sqrt(C) per accepted step
# (the eigenvector tails decay exponentially), so the step multiplier must be
# allowed to grow very large before the projection saturates usefully.
_ALPHA_CAP = 1e12
_SLOW_HALVINGS = 6   # then shrink 16x per trial to keep failed searches cheap


def _descend(densities: DensitySet, C: float, objective: _Objective,
             config: OptimizeConfig, n: int, max_iters: int,
             alpha: float) -> tuple:
    """Backtracking projected gradient descent at one grid level / eps stage.

    The first trial step moves the peak-gradient node by `alpha` density
    units; alpha doubles after a cleanly accepted step and shrinks with the
    backtracking rejections, so the step length self-tunes to the local
    curvature.  The stage ends when no step moving the peak node by at least
    min_step decreases the energy.
    """
    k = densities.k
    entry = LevelHistory(n=n, C=C,
                         eps=objective.eps if objective.kind == "penalized" else None)
    prev_windows = None
    cached = None  # (lams, us) for the current densities under prev_windows

    for _ in range(max_iters):
        windows = [restrict_window(densities.field(j), WINDOW_THRESHOLD,
                                   WINDOW_MARGIN) for j in range(k)]
        if cached is not None and windows == prev_windows:
            lams, us = cached
        else:
            v0s = [None] * k if cached is None else [
                u.values[densities.grid.inside & w.selector(densities.grid)]
                for u, w in zip(cached[1], windows)]
            lams, us = _solve_cells(densities, C, windows, v0s, config.jobs)
        energy = objective.energy(lams)
        if not math.isfinite(energy):
            raise OptimizeError("non-finite energy encountered")
        if not entry.energies:
            entry.energies.append(energy)
        # reference value: never accept a step that loses ground against the
        # recorded history, even if window recomputation nudged the energy
        reference = min(energy, entry.energies[-1])

        weights = objective.weights(lams)
        grad = np.stack([w * (-C) * u.values ** 2
                         for w, u in zip(weights, us)])
        gmax = float(np.abs(grad).max())
        if gmax == 0.0:
            break
        step = alpha / gmax

        accepted = None
        rejections = 0
        while step * gmax >= config.min_step:
            trial_vals = densities.values - step * grad
            _reseed_vanished(trial_vals, densities.grid)
            trial = project_partition(DensitySet(densities.grid, trial_vals))
            if trial.partition_residual() > PARTITION_TOL:
                raise OptimizeError("partition-of-unity constraint violated")
            trial_lams, trial_us = _solve_cells(
                trial, C, windows,
                [u.values[trial.grid.inside & w.selector(trial.grid)]
                 for u, w in zip(us, windows)],
                config.jobs)
            trial_energy = objective.energy(trial_lams)
            if math.isnan(trial_energy):
                raise OptimizeError("non-finite energy encountered")
            if trial_energy < reference:
                accepted = (trial, trial_lams, trial_us, trial_energy)
                break
            step *= 0.5 if rejections < _SLOW_HALVINGS else 0.0625
            rejections += 1

        if accepted is None:
            break
        densities, lams, us, energy = accepted
        entry.energies.append(energy)
        cached = (lams, us)
        prev_windows = windows
        alpha = step * gmax
        if rejections == 0:
            alpha = min(alpha * 2.0, _ALPHA_CAP)
        # stagnation cutoff: only meaningful once the adaptive step has had
        # room to ramp up, hence the minimum history length
        if (config.stall_tol > 0 and len(entry.energies) > 14
                and entry.energies[-8] - entry.energies[-1]
                < config.stall_tol * abs(entry.energies[-1])):
            break

    if not entry.energies:
        # stage ended before the first iteration; record the current energy
        windows = [restrict_window(densities.field(j)) for j in range(k)]
        lams, _ = _solve_cells(densities, C, windows, [None] * k, config.jobs)
        entry.energies.append(objective.energy(lams))
    return densities, lams, entry, alpha
