"""End-to-end optimizer behavior on small cases."""

import math

import numpy as np
import pytest

from specpart.extract import energy_report, extract_partition
from specpart.grids import DomainSpec
from specpart.optimizer import OptimizeConfig, OptimizeResult, optimize


def test_k1_square_recovers_lambda1():
    cfg = OptimizeConfig(k=1, objective="pnorm", p=1.0, grids=(60,), seed=1)
    result = optimize(DomainSpec.square(), cfg)
    target = 2 * math.pi ** 2
    assert abs(result.eigenvalues[0] - target) / target < 0.01
    # projection sends a single density straight to the indicator
    assert (result.densities.values[0][result.densities.grid.inside] == 1).all()


def test_history_monotone_and_partition_of_unity():
    cfg = OptimizeConfig(k=3, objective="pnorm", p=2.0, grids=(40, 80),
                         seed=4, max_iters=60)
    result = optimize(DomainSpec.triangle(), cfg)
    for level in result.history:
        energies = level.energies
        assert all(energies[i + 1] <= energies[i] + 1e-12
                   for i in range(len(energies) - 1))
    assert result.densities.partition_residual() < 1e-12
    assert len(result.eigenvalues) == 3


def test_determinism_bit_exact():
    cfg = OptimizeConfig(k=2, objective="pnorm", p=2.0, grids=(40,), seed=11,
                         max_iters=30)
    a = optimize(DomainSpec.square(), cfg)
    b = optimize(DomainSpec.square(), cfg)
    assert np.array_equal(a.densities.values, b.densities.values)
    assert a.eigenvalues == b.eigenvalues
    assert a.energy_history == b.energy_history


def test_jobs_do_not_change_results():
    base = OptimizeConfig(k=3, objective="pnorm", p=2.0, grids=(40,), seed=2,
                          max_iters=20)
    threaded = OptimizeConfig(k=3, objective="pnorm", p=2.0, grids=(40,),
                              seed=2, max_iters=20, jobs=2)
    a = optimize(DomainSpec.square(), base)
    b = optimize(DomainSpec.square(), threaded)
    assert np.array_equal(a.densities.values, b.densities.values)


def test_warm_start_init():
    cfg = OptimizeConfig(k=2, objective="pnorm", p=1.0, grids=(40,), seed=3,
                         max_iters=40)
    first = optimize(DomainSpec.square(), cfg)
    again = optimize(DomainSpec.square(),
                     OptimizeConfig(k=2, objective="pnorm", p=5.0,
                                    grids=(40,), seed=3, max_iters=20),
                     init=first.densities)
    assert isinstance(again, OptimizeResult)
    # warm start must not regress the max eigenvalue much
    assert max(again.eigenvalues) < max(first.eigenvalues) * 1.2


def test_init_grid_mismatch_rejected():
    cfg = OptimizeConfig(k=2, grids=(40,), seed=1, max_iters=5)
    first = optimize(DomainSpec.square(), cfg)
    other = OptimizeConfig(k=2, grids=(60,), seed=1, max_iters=5)
    with pytest.raises(ValueError):
        optimize(DomainSpec.square(), other, init=first.densities)


@pytest.mark.slow
def test_k2_square_pipeline():
    cfg = OptimizeConfig(k=2, objective="pnorm", p=50.0, grids=(60, 120),
                         seed=7, max_iters=200, jobs=2)
    result = optimize(DomainSpec.square(), cfg)
    geometry = extract_partition(result.densities, DomainSpec.square())
    report = energy_report(geometry, [50, math.inf], resolution=301, jobs=2)
    assert geometry.k == 2
    assert abs(report.value_max - 49.348) / 49.348 < 0.02
    assert report.equipartition_gap < 0.02


@pytest.mark.slow
def test_relaxation_error_decreases_with_C():
    # the relaxed eigenvalue of a fixed indicator approaches the Dirichlet
    # value from below as C grows
    from specpart.grids import ScalarField, build_mask, restrict_window
    from specpart.optimizer import relaxed_eigen
    mask = build_mask(DomainSpec.square(), 201)
    X, _ = mask.node_xy()
    half = ScalarField(mask, (X < 0.5).astype(float))
    window = restrict_window(half)
    target = 5 * math.pi ** 2
    errors = []
    for C in (1e3, 1e5, 1e7):
        lam, _ = relaxed_eigen(half, C, window)
        errors.append(abs(lam - target) / target)
    assert errors[0] > errors[1] > errors[2]
    assert errors[2] < 0.05
