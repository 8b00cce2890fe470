"""Certified coverings of unit spheres and the induced sup-norm embedding.

A covering is a finite set of unit directions such that every unit vector is
within chord distance 1/m of a stored direction or its negative.  Three
constructions are available:

* ``grid``   -- normalize the integer box {h / (n*m) : |h_i| <= n*m}^n minus
                the origin.  The rounding argument certifies chord radius
                1/m; the box has (2nm+1)^n points before deduplication.
* ``circle`` -- equally spaced directions on the unit circle (dim 2 only),
                antipodal-reduced, with the exact chord radius recorded.
* ``ring``   -- recursive latitude-ring net for any dim >= 2.  Orders of
                magnitude smaller than the grid at the same certified radius
                for dim >= 3, which is what keeps separation affordable on
                doubled (realified) factors.

Every downstream consumer (error constants, brackets) uses only the
certified radius, so the constructions are interchangeable.

The embedding I(x) = (<x, b>)_b satisfies gamma1 * |x| <= sup_b |<x, b>| <= |x|
with gamma1 = 1 - delta (linear mode) or gamma1 = 1 - delta^2/2 (tight mode),
where delta is the certified chord radius.  Antipodal reduction is sound
because the sup runs over absolute values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import BudgetExceeded, ShapeMismatch

__all__ = [
    "Covering",
    "GuaranteeMode",
    "gamma1",
    "grid_covering",
    "circle_covering",
    "ring_covering",
    "get_covering",
    "embed",
    "embed_sup",
    "embed_sup_batch",
    "coefficient",
    "covering_stats",
    "grid_size_bound",
    "DEFAULT_GRID_BUDGET",
]

DEFAULT_GRID_BUDGET = 100_000_000


class GuaranteeMode(str, Enum):
    """Per-factor lower constant of the embedding sandwich."""

    LINEAR = "linear"  # gamma1 = 1 - delta
    TIGHT = "tight"    # gamma1 = 1 - delta^2 / 2


@dataclass(frozen=True, eq=False)
class Covering:
    """A certified 1/m-covering of the unit sphere, antipodal representatives only."""

    dim: int
    m: int
    radius: float            # certified chord covering radius bound (1/m)
    directions: np.ndarray   # (N, dim), unit rows
    construction: str        # 'grid' | 'circle' | 'ring'
    pre_dedup_count: int     # points enumerated before normalization/dedup
    exact_radius: float      # analytic radius of the construction (<= radius)

    def __post_init__(self):
        d = np.ascontiguousarray(np.asarray(self.directions, dtype=np.float64))
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def stored_count(self) -> int:
        return int(self.directions.shape[0])


def gamma1(radius: float, mode: GuaranteeMode | str = GuaranteeMode.LINEAR) -> float:
    """Lower constant of the embedding sandwich for a net of chord radius ``radius``."""
    mode = GuaranteeMode(mode)
    if mode is GuaranteeMode.LINEAR:
        g = 1.0 - radius
    else:
        # On the sphere, <x, b> = 1 - |x - b|^2 / 2 for the nearest direction.
        g = 1.0 - radius * radius / 2.0
    if not 0.0 < g < 1.0:
        raise ShapeMismatch(f"guarantee constant {g} outside (0, 1); radius={radius}")
    return g


def grid_size_bound(n: int, m: int) -> int:
    """Pre-dedup cardinality of the integer grid: (2nm+1)^n."""
    return (2 * n * m + 1) ** n


def grid_covering(n: int, m: int, budget: int = DEFAULT_GRID_BUDGET) -> Covering:
    """Normalized integer-grid covering of the unit sphere in R^n.

    Deduplication is exact: grid points are reduced to primitive integer
    vectors with a positive leading entry before normalization, so coincident
    and antipodal rays collapse without floating-point comparisons.
    """
    if n < 1:
        raise ShapeMismatch(f"dimension must be >= 1, got {n}")
    if m < 2:
        raise ShapeMismatch(f"resolution m must be >= 2, got {m}")
    pre = grid_size_bound(n, m)
    if pre > budget:
        raise BudgetExceeded(
            f"grid enumeration needs {pre} points, budget is {budget}",
            required=pre,
            budget=budget,
        )
    axis = np.arange(-n * m, n * m + 1, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    ints = np.stack(mesh, axis=-1).reshape(-1, n)
    ints = ints[np.any(ints != 0, axis=1)]
    g = np.gcd.reduce(np.abs(ints), axis=1)
    prim = ints // g[:, None]
    lead_idx = np.argmax(prim != 0, axis=1)
    lead = prim[np.arange(prim.shape[0]), lead_idx]
    prim[lead < 0] *= -1
    uniq = np.unique(prim, axis=0)
    dirs = uniq / np.linalg.norm(uniq, axis=1, keepdims=True)
    return Covering(
        dim=n,
        m=m,
        radius=1.0 / m,
        directions=dirs,
        construction="grid",
        pre_dedup_count=pre,
        exact_radius=1.0 / m,
    )


def circle_covering(m: int) -> Covering:
    """Equally spaced directions on the unit circle, antipodal-reduced.

    M = ceil(2*pi / (4*arcsin(1/(2m)))) points give exact chord covering
    radius 2*sin(pi/(2M)) <= 1/m.  For even M antipodal pairs collapse to
    M/2 stored directions; for odd M no two points are antipodal.
    """
    if m < 2:
        raise ShapeMismatch(f"resolution m must be >= 2, got {m}")
    M = math.ceil(2.0 * math.pi / (4.0 * math.asin(1.0 / (2.0 * m))))
    count = M // 2 if M % 2 == 0 else M
    theta = 2.0 * math.pi * np.arange(count) / M
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    exact = 2.0 * math.sin(math.pi / (2.0 * M))
    return Covering(
        dim=2,
        m=m,
        radius=1.0 / m,
        directions=dirs,
        construction="circle",
        pre_dedup_count=M,
        exact_radius=exact,
    )


def _ring_points(dim: int, geo: float) -> np.ndarray:
    """Full-sphere net on S^{dim-1} with geodesic covering radius <= geo.

    dim == 2: a full circle of ceil(pi/geo) points.  dim >= 3: latitude bands
    theta_t = (2t+1)*u with u = geo/2; every point has a band within u, and
    the ring at band t carries a sub-net fine enough that the spherical
    triangle bound closes:

        cos d >= cos(|dtheta|) - sin(theta_p) sin(theta_t) (1 - cos v_t)

    so it suffices that 1 - cos(v_t) <= (cos u - cos geo) / s_t with s_t the
    worst product of sines over the band.
    """
    if geo >= math.pi:
        e1 = np.zeros((1, dim))
        e1[0, 0] = 1.0
        return e1
    if dim == 2:
        M = max(1, math.ceil(math.pi / geo))
        theta = 2.0 * math.pi * np.arange(M) / M
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    u = geo / 2.0
    T = math.ceil(math.pi / (2.0 * u))
    slack = math.cos(u) - math.cos(geo)
    rings = []
    for t in range(T):
        theta = (2 * t + 1) * u
        s_t = math.sin(theta)
        lo, hi = theta - u, theta + u
        if lo <= math.pi / 2.0 <= hi:
            band_max = 1.0
        else:
            band_max = max(math.sin(lo), math.sin(hi))
        denom = s_t * band_max
        if denom <= slack or denom <= 1e-15:
            # Any transverse angle keeps d <= geo: one point suffices.
            sub = np.zeros((1, dim - 1))
            sub[0, 0] = 1.0
        else:
            v = math.acos(max(-1.0, 1.0 - slack / denom))
            sub = _ring_points(dim - 1, v)
        ring = np.empty((sub.shape[0], dim))
        ring[:, : dim - 1] = s_t * sub
        ring[:, dim - 1] = math.cos(theta)
        rings.append(ring)
    return np.concatenate(rings, axis=0)


def ring_covering(dim: int, m: int) -> Covering:
    """Recursive latitude-ring covering of the unit sphere in R^dim.

    The geodesic target 2*arcsin(1/(2m)) converts exactly to chord radius
    1/m, the budget every level of the recursion certifies against.
    """
    if dim < 2:
        raise ShapeMismatch(f"ring construction needs dim >= 2, got {dim}")
    if m < 2:
        raise ShapeMismatch(f"resolution m must be >= 2, got {m}")
    geo = 2.0 * math.asin(1.0 / (2.0 * m))
    if dim == 2:
        # Half circle: together with the implicit negatives this is 2M
        # equally spaced points, so no stored pair is antipodal.
        M = math.ceil(math.pi / (2.0 * geo))
        theta = math.pi * np.arange(M) / M
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return Covering(
            dim=2,
            m=m,
            radius=1.0 / m,
            directions=dirs,
            construction="ring",
            pre_dedup_count=M,
            exact_radius=2.0 * math.sin(math.pi / (4.0 * M)),
        )
    pts = _ring_points(dim, geo)
    pre = pts.shape[0]
    # Fold signs so the first significant coordinate is positive, then drop
    # bitwise duplicates; the constraint family is two-sided so this is free.
    lead_idx = np.argmax(np.abs(pts) > 1e-9, axis=1)
    lead = pts[np.arange(pts.shape[0]), lead_idx]
    pts = np.where((lead < 0)[:, None], -pts, pts)
    pts = np.unique(pts, axis=0)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    return Covering(
        dim=dim,
        m=m,
        radius=1.0 / m,
        directions=pts,
        construction="ring",
        pre_dedup_count=pre,
        exact_radius=1.0 / m,
    )


@lru_cache(maxsize=128)
def get_covering(
    dim: int, m: int, construction: str = "grid", budget: int = DEFAULT_GRID_BUDGET
) -> Covering:
    """Cached covering factory; coverings are immutable and safely shared."""
    if construction == "grid":
        return grid_covering(dim, m, budget=budget)
    if construction == "circle":
        if dim != 2:
            raise ShapeMismatch(
                f"circle construction only covers dim 2, got dim {dim}"
            )
        return circle_covering(m)
    if construction == "ring":
        return ring_covering(dim, m)
    raise ShapeMismatch(f"unknown covering construction {construction!r}")


def embed(x: np.ndarray, cov: Covering) -> np.ndarray:
    """Coordinates <x, b> for each stored direction b."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cov.dim,):
        raise ShapeMismatch(f"vector shape {x.shape} does not match dim {cov.dim}")
    return cov.directions @ x


def embed_sup(x: np.ndarray, cov: Covering) -> float:
    """Sup norm of the embedding, i.e. max |<x, b>| over stored directions."""
    return float(np.abs(embed(x, cov)).max())


def embed_sup_batch(xs: np.ndarray, cov: Covering, dir_chunk: int = 32768) -> np.ndarray:
    """Sup norms of the embedding for a batch of vectors, chunked over directions."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != cov.dim:
        raise ShapeMismatch(f"batch shape {xs.shape} does not match dim {cov.dim}")
    out = np.zeros(xs.shape[0])
    dirs = cov.directions
    for lo in range(0, dirs.shape[0], dir_chunk):
        block = xs @ dirs[lo : lo + dir_chunk].T
        np.abs(block, out=block)
        np.maximum(out, block.max(axis=1), out=out)
    return out


def coefficient(cov: Covering, basis_index: int, direction_index: int) -> float:
    """The basis_index-th coordinate of stored direction direction_index."""
    if not 0 <= basis_index < cov.dim:
        raise IndexError(f"basis index {basis_index} out of range for dim {cov.dim}")
    if not 0 <= direction_index < cov.stored_count:
        raise IndexError(
            f"direction index {direction_index} out of range for {cov.stored_count} stored"
        )
    return float(cov.directions[direction_index, basis_index])


def covering_stats(cov: Covering, mode: GuaranteeMode | str = GuaranteeMode.LINEAR) -> dict:
    mode = GuaranteeMode(mode)
    return {
        "dim": cov.dim,
        "m": cov.m,
        "construction": cov.construction,
        "stored_count": cov.stored_count,
        "pre_dedup_count": cov.pre_dedup_count,
        "certified_radius": cov.exact_radius,
        "radius": cov.radius,
        "grid_bound": grid_size_bound(cov.dim, cov.m),
        "guarantee_mode": mode.value,
        "gamma1": gamma1(cov.radius, mode),
    }
