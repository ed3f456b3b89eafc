"""Mixed Dirichlet-Neumann problems, touch solving and symmetrization."""

import math

import numpy as np
import pytest

from specpart.eigensolve import smallest_eigenpairs
from specpart.extract import energy_report
from specpart.grids import DomainSpec, ScalarField
from specpart.mixed import (BoundaryPart, MixedGeometry, MixedProblemError,
                            TouchSolveError, discretize, mixed_eigenpairs,
                            nodal_partition, solve_touch, symmetrize,
                            touch_residual)
from specpart.mixed_catalog import builtin_specs, get_spec

SQRT3 = math.sqrt(3.0)


def half_square_geometry(cut_tag):
    parts = (
        BoundaryPart("dirichlet", p0=(0, 0), p1=(1, 0), on_boundary=True),
        BoundaryPart("dirichlet", p0=(1, 0), p1=(1, 0.5), on_boundary=True),
        BoundaryPart("dirichlet", p0=(0, 0), p1=(0, 0.5), on_boundary=True),
        BoundaryPart(cut_tag, p0=(0, 0.5), p1=(1, 0.5)),
    )
    return MixedGeometry(polygon=((0, 0), (1, 0), (1, 0.5), (0, 0.5)),
                         boundary_parts=parts, interior_segments=(),
                         touch_targets=(), bbox=(0, 0, 1, 0.5))


def full_square_geometry():
    parts = tuple(
        BoundaryPart("dirichlet", p0=a, p1=b, on_boundary=True)
        for a, b in (((0, 0), (1, 0)), ((1, 0), (1, 1)),
                     ((1, 1), (0, 1)), ((0, 1), (0, 0))))
    return MixedGeometry(polygon=((0, 0), (1, 0), (1, 1), (0, 1)),
                         boundary_parts=parts, interior_segments=(),
                         touch_targets=(), bbox=(0, 0, 1, 1))


def half_disk_geometry():
    arc = tuple((math.cos(t), math.sin(t))
                for t in np.linspace(0, math.pi, 181))
    parts = (
        BoundaryPart("dirichlet", p0=(-1, 0), p1=(1, 0), on_boundary=True),
        BoundaryPart("dirichlet", kind="arc", center=(0, 0), radius=1.0,
                     a0=0.0, a1=math.pi, on_boundary=True),
    )
    return MixedGeometry(polygon=((1, 0),) + arc + ((-1, 0),),
                         boundary_parts=parts, interior_segments=(),
                         touch_targets=(), bbox=(-1, 0, 1, 1))


def test_neumann_cut_reproduces_full_square():
    grid = discretize(half_square_geometry("neumann"), 401)
    lam = smallest_eigenpairs(grid.operator, 1)[0].value
    target = 2 * math.pi ** 2
    assert abs(lam - target) / target < 0.01


def test_dirichlet_cut_gives_half_square():
    grid = discretize(half_square_geometry("dirichlet"), 401)
    lam = smallest_eigenpairs(grid.operator, 1)[0].value
    target = 5 * math.pi ** 2
    assert abs(lam - target) / target < 0.01


def test_half_disk_sector():
    grid = discretize(half_disk_geometry(), 301)
    lam = smallest_eigenpairs(grid.operator, 1)[0].value
    assert abs(lam - 14.6819) / 14.6819 < 0.01


def test_nodal_counts_on_the_square():
    grid = discretize(full_square_geometry(), 201)
    pairs = smallest_eigenpairs(grid.operator, 4)
    for index, expected in ((1, 1), (2, 2), (4, 4)):
        u = np.zeros((grid.mask.ny, grid.mask.nx))
        u[grid.mask.inside] = pairs[index - 1].vector
        nodal = nodal_partition(ScalarField(grid.mask, u), grid.mask)
        assert nodal.count == expected
        assert nodal.count <= index  # Courant bound


def test_nodal_partition_rejects_zero_field():
    grid = discretize(full_square_geometry(), 51)
    with pytest.raises(MixedProblemError):
        nodal_partition(ScalarField.zeros(grid.mask), grid.mask)


def test_touch_residual_square3():
    spec = get_spec("square3")
    h = 1.0 / 400
    assert abs(touch_residual(spec, [0.5], 401)[0]) < 2 * h
    assert abs(touch_residual(spec, [0.15], 401)[0]) > 10 * h


def test_touch_residual_triangle3():
    spec = get_spec("triangle3")
    h = SQRT3 / 2 / 300
    assert abs(touch_residual(spec, [SQRT3 / 6], 301)[0]) < 2 * h


def test_solve_touch_needs_sign_change():
    spec = get_spec("square3")
    with pytest.raises(TouchSolveError):
        solve_touch(spec, (0.55, 0.7), 201)


@pytest.mark.slow
def test_square3_golden():
    spec = get_spec("square3")
    sol = solve_touch(spec, None, 401)
    assert abs(sol.eigenvalue - 66.5812) / 66.5812 < 0.01
    # triple point at the center
    assert abs(sol.theta[0] - 0.5) <= 2.0 / 400
    part = symmetrize(spec, sol.theta, sol.nodal)
    assert part.k == 3
    triples = [s for s in part.singular_points if s.degree >= 3]
    assert len(triples) == 1
    assert math.hypot(triples[0].x - 0.5, triples[0].y - 0.5) < 0.01


@pytest.mark.slow
def test_square5_golden():
    sol = solve_touch(get_spec("square5"), None, 401)
    assert abs(sol.eigenvalue - 104.294) / 104.294 < 0.01


@pytest.mark.slow
def test_disk7_golden():
    spec = get_spec("disk7")
    sol = solve_touch(spec, None, 401)
    assert abs(sol.eigenvalue - 44.030) / 44.030 < 0.01
    part = symmetrize(spec, sol.theta, sol.nodal)
    assert part.k == 7


@pytest.mark.slow
def test_symmetrized_cells_match_mixed_eigenvalue():
    spec = get_spec("square3")
    sol = solve_touch(spec, None, 301)
    part = symmetrize(spec, sol.theta, sol.nodal)
    report = energy_report(part, [math.inf], resolution=301)
    for value in report.cell_values:
        assert abs(value - sol.eigenvalue) / sol.eigenvalue < 0.015


@pytest.mark.slow
def test_disk6_structure():
    spec = get_spec("disk6")
    sol = solve_touch(spec, None, 301)
    part = symmetrize(spec, sol.theta, sol.nodal)
    assert part.k == 6
    # the central cell neighbors all five outer cells
    counts = {i: 0 for i in range(6)}
    for a, b in part.adjacency:
        counts[a] += 1
        counts[b] += 1
    assert max(counts.values()) == 5
    central = max(counts, key=counts.get)
    assert sum(1 for a, b in part.adjacency if central in (a, b)) == 5


@pytest.mark.slow
def test_disk_sector_eigenvalue_decreases_with_radius():
    spec = get_spec("disk6")
    values = [mixed_eigenpairs(spec, [r], 2, 241)[1].value
              for r in (0.3, 0.5, 0.7)]
    assert values[0] > values[1] > values[2]


@pytest.mark.slow
def test_triangle3_swap_same_split_larger_energy():
    plain = solve_touch(get_spec("triangle3"), None, 301)
    swapped = solve_touch(get_spec("triangle3_swapped"), None, 301)
    # both put the junction a third of the way up the height
    assert plain.theta[0] == pytest.approx(SQRT3 / 6, abs=0.02)
    assert swapped.theta[0] == pytest.approx(SQRT3 / 6, abs=0.02)
    assert swapped.eigenvalue > plain.eigenvalue * 1.3
    assert abs(swapped.eigenvalue - 215.13) / 215.13 < 0.02


@pytest.mark.slow
def test_triangle10_structure():
    spec = get_spec("triangle10")
    sol = solve_touch(spec, None, 301)
    assert abs(sol.eigenvalue - 451.93) / 451.93 < 0.01
    part = symmetrize(spec, sol.theta, sol.nodal)
    assert part.k == 10
    areas = np.array(sorted(c.area for c in part.cells))
    # three corner quadrilaterals, six pentagons, one central hexagon
    assert np.allclose(areas[:3], areas[0], rtol=0.08)
    assert np.allclose(areas[3:9], areas[3:9].mean(), rtol=0.08)
    assert areas[2] < 0.9 * areas[3]
    assert areas[8] < areas[9]
    centroid = (0.5, SQRT3 / 6)
    central = [c for c in part.cells
               if np.hypot(*(c.outer.mean(axis=0) - centroid)) < 0.05]
    assert len(central) == 1
    assert central[0].area == pytest.approx(areas[9])


def test_catalog_metadata():
    specs = builtin_specs()
    assert set(f"disk{k}" for k in range(6, 11)) <= set(specs)
    assert specs["square3"].n_params == 1
    assert specs["square3"].eigen_index == 2
    assert specs["triangle8"].n_params == 4
    assert specs["triangle8"].eigen_index == 5
    for k in range(6, 11):
        spec = specs[f"disk{k}"]
        geom = spec.geometry([0.5])
        arcs = [bp for bp in geom.boundary_parts if bp.kind == "arc"]
        assert len(arcs) == 1 and arcs[0].tag == "dirichlet"
        radial_d = [bp for bp in geom.boundary_parts
                    if bp.kind == "segment" and bp.tag == "dirichlet"]
        assert len(radial_d) == 2
    with pytest.raises(KeyError):
        get_spec("pentagon9")


def test_theta_validation():
    spec = get_spec("square3")
    with pytest.raises(ValueError):
        touch_residual(spec, [2.0], 101)
    with pytest.raises(ValueError):
        touch_residual(spec, [0.3, 0.3], 101)
