"""Built-in mixed-problem configurations.

Each entry reduces the domain by its symmetries to a subdomain (half, quarter
or eighth of the square; half or sixth of the triangle; a rotational sector of
the disk), tags the boundary pieces Dirichlet or Neumann, and exposes the
mobile points as parameters.  Unfolding the selected eigenfunction's nodal
partition through the listed transforms yields the k-cell candidate.
"""

from __future__ import annotations

import math

import numpy as np

from .grids import DomainSpec
from .mixed import (BoundaryPart, MixedGeometry, MixedProblemSpec, TouchTarget,
                    Transform)

SQRT3 = math.sqrt(3.0)
_TRIM = 0.02


def generate_group(generators, cap: int = 16) -> tuple:
    """Close a set of orthogonal affine transforms under composition."""
    def key(t):
        return tuple(round(c, 9) for c in t.coeffs)

    group = {key(Transform.identity()): Transform.identity()}
    frontier = list(generators)
    while frontier:
        new = []
        for g in frontier:
            for t in list(group.values()):
                for candidate in (g.compose(t), t.compose(g)):
                    k = key(candidate)
                    if k not in group:
                        group[k] = candidate
                        new.append(candidate)
        frontier = new
        if len(group) > cap:
            raise ValueError("symmetry group closure exceeded the cap")
    return tuple(group.values())


def _seg(tag, p0, p1, on_boundary=False):
    return BoundaryPart(tag=tag, kind="segment", p0=tuple(p0), p1=tuple(p1),
                        on_boundary=on_boundary)


# --------------------------------------------------------------------------
# square family

def _square3_geometry(theta):
    (t,) = theta
    parts = (
        _seg("dirichlet", (0, 0), (1, 0), True),
        _seg("dirichlet", (1, 0), (1, 0.5), True),
        _seg("dirichlet", (0, 0), (0, 0.5), True),
        _seg("neumann", (0, 0.5), (t, 0.5)),
        _seg("dirichlet", (t, 0.5), (1, 0.5)),
    )
    target = TouchTarget(origin=(t, 0.5), direction=(-1.0, 0.0),
                         inward=(0.0, -1.0),
                         span=(-(1 - t) + _TRIM, t - _TRIM), length=1 - t)
    return MixedGeometry(
        polygon=((0, 0), (1, 0), (1, 0.5), (0, 0.5)),
        boundary_parts=parts, interior_segments=(), touch_targets=(target,),
        bbox=(0.0, 0.0, 1.0, 0.5))


def _square5_geometry(theta):
    (t,) = theta
    x = 0.5 + t
    parts = (
        _seg("neumann", (0.5, 0.5), (x, 0.5)),
        _seg("dirichlet", (x, 0.5), (1, 0.5)),
        _seg("dirichlet", (1, 0.5), (1, 1), True),
        _seg("neumann", (1, 1), (0.5, 0.5)),
    )
    target = TouchTarget(origin=(x, 0.5), direction=(-1.0, 0.0),
                         inward=(0.0, 1.0),
                         span=(-(0.5 - t) + _TRIM, t - _TRIM), length=0.5 - t)
    return MixedGeometry(
        polygon=((0.5, 0.5), (1, 0.5), (1, 1)),
        boundary_parts=parts, interior_segments=(), touch_targets=(target,),
        bbox=(0.5, 0.5, 1.0, 1.0))


def _square_quarter_geometry(theta, inner_dirichlet: bool):
    """Quarter square [0, 0.5]^2; the top edge is a symmetry axis carrying the
    mobile junction X_t, the right edge is the other axis (Neumann), and an
    interior Dirichlet slit leaves X_t at 60 degrees to the axis."""
    t, s = theta
    xt = (0.5 - t, 0.5)
    if inner_dirichlet:
        # slit toward lower-left, Dirichlet on the inner top [X_t, A]
        direction = (-0.5, -0.5 * SQRT3)
        top_inner = _seg("dirichlet", xt, (0.5, 0.5))
        top_outer = _seg("neumann", (0, 0.5), xt)
        junction_dir = (-1.0, 0.0)
        mobile_len = t
        span = (-t + _TRIM, (0.5 - t) - _TRIM)
        exit_total = min(1.0 / SQRT3, 1.0 - 2.0 * t if t < 0.5 else 1e-9)
    else:
        # slit toward lower-right, Dirichlet on the outer top [D, X_t]
        direction = (0.5, -0.5 * SQRT3)
        top_inner = _seg("neumann", xt, (0.5, 0.5))
        top_outer = _seg("dirichlet", (0, 0.5), xt)
        junction_dir = (1.0, 0.0)
        mobile_len = 0.5 - t
        span = (-(0.5 - t) + _TRIM, t - _TRIM)
        exit_total = min(1.0 / SQRT3, 2.0 * t)
    xs = (xt[0] + s * direction[0], xt[1] + s * direction[1])
    if exit_total <= s + _TRIM:
        raise ValueError("slit leaves the quarter square")
    parts = (
        _seg("dirichlet", (0, 0), (0.5, 0), True),
        _seg("dirichlet", (0, 0), (0, 0.5), True),
        top_outer,
        top_inner,
        _seg("neumann", (0.5, 0), (0.5, 0.5)),
    )
    perp = (-direction[1], direction[0])
    targets = (
        TouchTarget(origin=xs, direction=direction, inward=perp,
                    span=(-0.4 * s, exit_total - s - _TRIM), length=s),
        TouchTarget(origin=xt, direction=junction_dir, inward=(0.0, -1.0),
                    span=span, length=mobile_len),
    )
    return MixedGeometry(
        polygon=((0, 0), (0.5, 0), (0.5, 0.5), (0, 0.5)),
        boundary_parts=parts, interior_segments=((xt, xs),),
        touch_targets=targets, bbox=(0.0, 0.0, 0.5, 0.5))


# --------------------------------------------------------------------------
# triangle family (side 1, vertices (0,0), (1,0), (1/2, sqrt3/2))

_H = 0.5 * SQRT3          # triangle height
_G = SQRT3 / 6.0          # centroid height


def _triangle_half_geometry(theta, swap: bool = False):
    """Left half of the triangle: base (0,0)-(1/2,0), height up to the apex.
    The mobile point sits on the height at elevation r; Dirichlet below it and
    Neumann above (swapped when `swap`)."""
    (r,) = theta
    lower_tag, upper_tag = ("neumann", "dirichlet") if swap else ("dirichlet", "neumann")
    parts = (
        _seg("dirichlet", (0, 0), (0.5, 0), True),
        _seg(lower_tag, (0.5, 0), (0.5, r)),
        _seg(upper_tag, (0.5, r), (0.5, _H)),
        _seg("dirichlet", (0.5, _H), (0, 0), True),
    )
    if swap:
        target = TouchTarget(origin=(0.5, r), direction=(0.0, -1.0),
                             inward=(-1.0, 0.0),
                             span=(-(_H - r) + _TRIM, r - _TRIM),
                             length=_H - r)
    else:
        target = TouchTarget(origin=(0.5, r), direction=(0.0, 1.0),
                             inward=(-1.0, 0.0),
                             span=(-r + _TRIM, (_H - r) - _TRIM), length=r)
    return MixedGeometry(
        polygon=((0, 0), (0.5, 0), (0.5, _H)),
        boundary_parts=parts, interior_segments=(), touch_targets=(target,),
        bbox=(0.0, 0.0, 0.5, _H))


def _triangle6_geometry(theta):
    """Sixth of the triangle: corner (0,0), base foot (1/2,0), centroid.
    The mobile point X_r splits the median edge: Dirichlet toward the
    centroid, Neumann toward the corner."""
    (r,) = theta
    lac = math.hypot(0.5, _G)
    xr = ((1 - r) * 0.5, (1 - r) * _G)
    parts = (
        _seg("dirichlet", (0, 0), (0.5, 0), True),
        _seg("neumann", (0.5, 0), (0.5, _G)),
        _seg("dirichlet", (0.5, _G), xr),
        _seg("neumann", xr, (0, 0)),
    )
    to_corner = (-0.5 / lac, -_G / lac)
    target = TouchTarget(origin=xr, direction=to_corner,
                         inward=(to_corner[1], -to_corner[0]),
                         span=(-r * lac + _TRIM, (1 - r) * lac - _TRIM),
                         length=r * lac)
    return MixedGeometry(
        polygon=((0, 0), (0.5, 0), (0.5, _G)),
        boundary_parts=parts, interior_segments=(), touch_targets=(target,),
        bbox=(0.0, 0.0, 0.5, _G))


def _triangle8_geometry(theta):
    """Half triangle with a Dirichlet stretch of the height between two
    mobile points plus a vertical interior slit rising from the base."""
    a, b, c, q = theta
    ys = _H - a
    if ys <= b + 0.02:
        raise ValueError("height points out of order")
    if q + _TRIM >= SQRT3 * c:
        raise ValueError("slit reaches the slanted side")
    parts = (
        _seg("dirichlet", (0, 0), (0.5, 0), True),
        _seg("neumann", (0.5, 0), (0.5, b)),
        _seg("dirichlet", (0.5, b), (0.5, ys)),
        _seg("neumann", (0.5, ys), (0.5, _H)),
        _seg("dirichlet", (0.5, _H), (0, 0), True),
    )
    slit = ((c, 0.0), (c, q))
    targets = (
        TouchTarget(origin=(0.5, ys), direction=(0.0, 1.0), inward=(-1.0, 0.0),
                    span=(-(ys - b) + _TRIM, (_H - ys) - _TRIM), length=ys - b),
        TouchTarget(origin=(0.5, b), direction=(0.0, -1.0), inward=(-1.0, 0.0),
                    span=(-(ys - b) + _TRIM, b - _TRIM), length=ys - b),
        TouchTarget(origin=(c, q), direction=(0.0, 1.0), inward=(1.0, 0.0),
                    span=(-0.4 * q, SQRT3 * c - q - _TRIM), length=q),
    )
    return MixedGeometry(
        polygon=((0, 0), (0.5, 0), (0.5, _H)),
        boundary_parts=parts, interior_segments=(slit,),
        touch_targets=targets, bbox=(0.0, 0.0, 0.5, _H))


def _triangle10_geometry(theta):
    """Sixth of the triangle with two mobile junctions: one on the median
    edge (Y_r) and one on the height edge (X_s); the Dirichlet stretch
    [Y_r, Y_s] of the median is tied to X_s by the hexagon-corner angle."""
    r, s = theta
    lac = math.hypot(0.5, _G)
    yr = (r, r / SQRT3)
    ys_pt = ((1 + s) / 4.0, SQRT3 * (1 + s) / 12.0)
    xs_pt = (0.5, s * _G)
    d_yr = math.hypot(*yr)                 # |A Y_r| along the median
    d_ys = math.hypot(*ys_pt)              # |A Y_s|
    if d_yr + 0.02 >= d_ys:
        raise ValueError("median points out of order")
    parts = (
        _seg("dirichlet", (0, 0), (0.5, 0), True),
        _seg("dirichlet", (0.5, 0), xs_pt),
        _seg("neumann", xs_pt, (0.5, _G)),
        _seg("neumann", (0, 0), yr),
        _seg("dirichlet", yr, ys_pt),
        _seg("neumann", ys_pt, (0.5, _G)),
    )
    along = (0.5 / lac, _G / lac)          # unit vector from corner to centroid
    inward = (along[1], -along[0])         # into the sixth (below the median)
    mobile = d_ys - d_yr
    targets = (
        TouchTarget(origin=yr, direction=(-along[0], -along[1]), inward=inward,
                    span=(-mobile + _TRIM, d_yr - _TRIM), length=mobile),
        TouchTarget(origin=ys_pt, direction=along, inward=inward,
                    span=(-mobile + _TRIM, (lac - d_ys) - _TRIM), length=mobile),
    )
    return MixedGeometry(
        polygon=((0, 0), (0.5, 0), (0.5, _G)),
        boundary_parts=parts, interior_segments=(),
        touch_targets=targets, bbox=(0.0, 0.0, 0.5, _G))


# --------------------------------------------------------------------------
# disk sectors

def _disk_sector_geometry(theta, k: int):
    """Rotational sector of opening 2*pi/(k-1): Neumann on the inner parts of
    the radial edges, Dirichlet beyond the mobile radius and on the arc."""
    (r,) = theta
    beta = 2.0 * math.pi / (k - 1)
    half = 0.5 * beta
    ca, sa = math.cos(half), math.sin(half)
    a_r = (r * ca, r * sa)
    a_pt = (ca, sa)
    b_r = (r * ca, -r * sa)
    b_pt = (ca, -sa)
    parts = (
        _seg("neumann", (0, 0), a_r),
        _seg("dirichlet", a_r, a_pt),
        _seg("neumann", (0, 0), b_r),
        _seg("dirichlet", b_r, b_pt),
        BoundaryPart(tag="dirichlet", kind="arc", center=(0.0, 0.0),
                     radius=1.0, a0=-half, a1=half, on_boundary=True),
    )
    arc = [(math.cos(-half + t * beta), math.sin(-half + t * beta))
           for t in np.linspace(0.0, 1.0, 181)]
    polygon = tuple([(0.0, 0.0)] + arc)
    target = TouchTarget(origin=a_r, direction=(-ca, -sa),
                         inward=(sa, -ca),
                         span=(-(1 - r) + _TRIM, r - _TRIM), length=1 - r)

    def inside(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r2 = x * x + y * y
        return (r2 > 0) & (r2 < 1.0) & (np.abs(np.arctan2(y, x)) < half)

    x0 = min(0.0, ca)
    return MixedGeometry(
        polygon=polygon, boundary_parts=parts, interior_segments=(),
        touch_targets=(target,), bbox=(x0, -sa, 1.0, sa), inside=inside)


# --------------------------------------------------------------------------
# the catalog

def _mirror(point, direction):
    return Transform.reflection(point, direction)


def builtin_specs() -> dict:
    """Catalog of the named mixed-problem configurations."""
    square = DomainSpec.square()
    triangle = DomainSpec.triangle()
    disk = DomainSpec.disk()
    centroid = (0.5, _G)

    half_mirror_y = _mirror((0.0, 0.5), (1.0, 0.0))
    quarter_group = generate_group([_mirror((0.5, 0.0), (0.0, 1.0)),
                                    _mirror((0.0, 0.5), (1.0, 0.0))])
    eighth_group = generate_group([
        Transform.rotation((0.5, 0.5), 0.5 * math.pi),
        _mirror((0.5, 0.5), (1.0, 0.0))])
    tri_mirror = _mirror((0.5, 0.0), (0.0, 1.0))
    sixth_group = generate_group([
        tri_mirror, _mirror((0.0, 0.0), (math.cos(math.pi / 6),
                                         math.sin(math.pi / 6)))])

    specs = {
        "square3": MixedProblemSpec(
            name="square3", k=3, domain=square, eigen_index=2,
            param_box=((0.05, 0.95),), geometry=_square3_geometry,
            transforms=generate_group([half_mirror_y]),
            bracket=(0.3, 0.7),
            description="half square, mobile junction on the symmetry axis"),
        "square5": MixedProblemSpec(
            name="square5", k=5, domain=square, eigen_index=2,
            param_box=((0.02, 0.48),), geometry=_square5_geometry,
            transforms=eighth_group, bracket=(0.08, 0.40),
            description="eighth of the square between midline and diagonal"),
        "square7": MixedProblemSpec(
            name="square7", k=7, domain=square, eigen_index=3,
            param_box=((0.05, 0.45), (0.05, 0.55)),
            geometry=lambda th: _square_quarter_geometry(th, False),
            transforms=quarter_group, minimize_free=True,
            description="quarter square, interior slit at 120 deg to the axis"),
        "square8": MixedProblemSpec(
            name="square8", k=8, domain=square, eigen_index=3,
            param_box=((0.05, 0.45), (0.05, 0.55)),
            geometry=lambda th: _square_quarter_geometry(th, True),
            transforms=quarter_group, minimize_free=True,
            description="quarter square, interior slit at 60 deg to the axis"),
        "triangle3": MixedProblemSpec(
            name="triangle3", k=3, domain=triangle, eigen_index=2,
            param_box=((0.04, 0.82),),
            geometry=_triangle_half_geometry,
            transforms=generate_group([tri_mirror]), bracket=(0.12, 0.60),
            description="half triangle, Dirichlet on the lower height"),
        "triangle3_swapped": MixedProblemSpec(
            name="triangle3_swapped", k=3, domain=triangle, eigen_index=2,
            param_box=((0.04, 0.82),),
            geometry=lambda th: _triangle_half_geometry(th, swap=True),
            transforms=generate_group([tri_mirror]), bracket=(0.12, 0.60),
            description="half triangle with the height tags interchanged"),
        "triangle5": MixedProblemSpec(
            name="triangle5", k=5, domain=triangle, eigen_index=3,
            param_box=((0.04, 0.82),),
            geometry=_triangle_half_geometry,
            transforms=generate_group([tri_mirror]), bracket=(0.25, 0.70),
            description="half triangle, third eigenfunction"),
        "triangle6": MixedProblemSpec(
            name="triangle6", k=6, domain=triangle, eigen_index=2,
            param_box=((0.05, 0.95),), geometry=_triangle6_geometry,
            transforms=sixth_group, bracket=(0.15, 0.80),
            description="sixth of the triangle, mobile junction on the median"),
        "triangle8": MixedProblemSpec(
            name="triangle8", k=8, domain=triangle, eigen_index=5,
            param_box=((0.05, 0.60), (0.05, 0.50), (0.08, 0.45), (0.05, 0.60)),
            geometry=_triangle8_geometry,
            transforms=generate_group([tri_mirror]),
            bracket=((0.22, 0.25, 0.28, 0.25), (0.30, 0.25, 0.28, 0.25),
                     (0.22, 0.33, 0.28, 0.25), (0.22, 0.25, 0.36, 0.25),
                     (0.22, 0.25, 0.28, 0.33)),
            description="half triangle, four mobile points, fifth eigenfunction"),
        "triangle10": MixedProblemSpec(
            name="triangle10", k=10, domain=triangle, eigen_index=3,
            param_box=((0.02, 0.45), (0.05, 0.95)),
            geometry=_triangle10_geometry,
            transforms=sixth_group,
            bracket=((0.16, 0.55), (0.22, 0.55), (0.16, 0.70)),
            description="sixth of the triangle, two junctions, third eigenfunction"),
    }
    for k in range(6, 11):
        specs[f"disk{k}"] = MixedProblemSpec(
            name=f"disk{k}", k=k, domain=disk, eigen_index=2,
            param_box=((0.05, 0.98),),
            geometry=lambda th, kk=k: _disk_sector_geometry(th, kk),
            transforms=generate_group(
                [Transform.rotation((0.0, 0.0), 2.0 * math.pi / (k - 1))]),
            bracket=(0.15, 0.70),
            description=f"sector of opening 2*pi/{k - 1} with mobile radius")
    return specs


def get_spec(name: str) -> MixedProblemSpec:
    specs = builtin_specs()
    if name not in specs:
        known = ", ".join(sorted(specs))
        raise KeyError(f"unknown mixed configuration {name!r}; known: {known}")
    return specs[name]
