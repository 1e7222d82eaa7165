"""Brute-force ground truth for low-dimensional projections (hull dimension at most 3).

The projected body is rebuilt as the convex hull of its projected vertices,
fanned into simplices from the vertex centroid, and monomials up to degree 4
are integrated exactly with the barycentric formula

    int_S prod_k lambda_k^{b_k} dx = vol(S) d! prod_k b_k! / (d + |b|)!

after expanding each coordinate as ``x = sum_k lambda_k v_k``.
"""

import functools
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from polyvar.config import settings
from polyvar.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    DimensionTooLargeError,
    PolyvarError,
    UnsupportedDegreeError,
)
from polyvar.exactmoments import MultiIndex, as_multi_index
from polyvar.geomcore import HyperplaneFrame, UnitDirection, top_eigenvalue_sym

logger = logging.getLogger(__name__)

DEDUP_TOL = 1e-10
MAX_DEGREE = 4
CUBE_MAX_N = 4
CROSS_MAX_N = 6


@dataclass(frozen=True, eq=False)
class HullModel:
    """Convex hull with facet inequalities and a centroid-fan triangulation.

    ``simplices`` has shape ``(S, d + 1, d)``: the coordinates of the corners of
    each fan simplex, the first corner being ``centroid``.
    """

    dim: int
    vertices: np.ndarray
    facets: tuple[tuple[int, ...], ...]
    normals: np.ndarray
    offsets: np.ndarray
    centroid: np.ndarray
    simplices: np.ndarray
    simplex_volumes: np.ndarray
    volume: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "volume", float(self.simplex_volumes.sum()))


# ---------------------------------------------------------------------------
# Vertices
# ---------------------------------------------------------------------------


def projected_vertices(body: str, theta: UnitDirection, frame: HyperplaneFrame) -> np.ndarray:
    """Frame coordinates of every vertex of the cube or cross-polytope.

    Raises:
        DimensionTooLargeError: ``n > 4`` for ``cube``, ``n > 6`` for ``cross``.
    """
    n = theta.n
    if body in ("cube", "cube-proj"):
        if n > CUBE_MAX_N:
            raise DimensionTooLargeError(n, CUBE_MAX_N)
        vertices = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    elif body in ("cross", "cross-proj"):
        if n > CROSS_MAX_N:
            raise DimensionTooLargeError(n, CROSS_MAX_N)
        vertices = np.vstack([np.eye(n), -np.eye(n)])
    else:
        raise PolyvarError(f"oracle supports cube and cross bodies, got {body!r}")
    return vertices @ frame.basis.T


def _dedup(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.linalg.norm(p - q) > tol for q in kept):
            kept.append(p)
    return np.array(kept)


# ---------------------------------------------------------------------------
# Hull construction
# ---------------------------------------------------------------------------


def convex_hull(points, d: int | None = None) -> HullModel:
    """Convex hull of ``points`` in dimension ``d`` (1, 2 or 3).

    Raises:
        DegenerateInputError: the points do not affinely span dimension ``d``.
        DimensionTooLargeError: ``d > 3``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = pts.shape[1] if d is None else d
    if pts.shape[1] != d:
        raise DimensionMismatchError(f"points have dimension {pts.shape[1]}, expected {d}")
    if d > settings.ORACLE_MAX_HULL_DIM:
        raise DimensionTooLargeError(d, settings.ORACLE_MAX_HULL_DIM)
    if d < 1:
        raise DegenerateInputError("hull dimension must be at least 1")

    pts = _dedup(pts)
    if len(pts) < d + 1:
        raise DegenerateInputError(f"{len(pts)} distinct points cannot span dimension {d}")
    scale = float(np.max(np.abs(pts - pts.mean(axis=0))))
    singular = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if singular[d - 1] <= 1e-9 * max(scale, 1e-300) * math.sqrt(len(pts)):
        raise DegenerateInputError(f"points do not affinely span dimension {d}")

    if d == 1:
        return _hull_1d(pts)
    if d == 2:
        return _hull_2d(pts, scale)
    return _hull_3d(pts, scale)


def _fan(
    d: int, pts: np.ndarray, facets: list[tuple[int, ...]], normals: np.ndarray, offsets: np.ndarray
) -> HullModel:
    used = sorted({i for facet in facets for i in facet})
    centroid = pts[used].mean(axis=0)
    simplices = np.array([[centroid, *pts[list(facet)]] for facet in facets])
    edges = simplices[:, 1:, :] - simplices[:, :1, :]
    volumes = np.abs(np.linalg.det(edges)) / math.factorial(d)
    return HullModel(
        dim=d,
        vertices=pts[used],
        facets=tuple(facets),
        normals=normals,
        offsets=offsets,
        centroid=centroid,
        simplices=simplices,
        simplex_volumes=volumes,
    )


def _hull_1d(pts: np.ndarray) -> HullModel:
    lo = int(np.argmin(pts[:, 0]))
    hi = int(np.argmax(pts[:, 0]))
    normals = np.array([[-1.0], [1.0]])
    offsets = np.array([-pts[lo, 0], pts[hi, 0]])
    return _fan(1, pts, [(lo,), (hi,)], normals, offsets)


def _orient(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def _hull_2d(pts: np.ndarray, scale: float) -> HullModel:
    """Gift wrapping, counter-clockwise, keeping the farthest of collinear candidates."""
    eps = 1e-12 * scale * scale
    start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    order = [start]
    current = start
    for _ in range(len(pts) + 1):
        candidate = (current + 1) % len(pts)
        for r in range(len(pts)):
            if r == current:
                continue
            turn = _orient(pts[current], pts[candidate], pts[r])
            farther = np.sum((pts[r] - pts[current]) ** 2) > np.sum(
                (pts[candidate] - pts[current]) ** 2
            )
            if turn < -eps or (abs(turn) <= eps and farther):
                candidate = r
        if candidate == start:
            break
        order.append(candidate)
        current = candidate
    else:
        raise DegenerateInputError("gift wrapping did not close")

    facets = [(order[k], order[(k + 1) % len(order)]) for k in range(len(order))]
    normals = []
    offsets = []
    for a, b in facets:
        edge = pts[b] - pts[a]
        normal = np.array([edge[1], -edge[0]]) / np.linalg.norm(edge)
        normals.append(normal)
        offsets.append(float(normal @ pts[a]))
    return _fan(2, pts, facets, np.array(normals), np.array(offsets))


def _plane(pts: np.ndarray, face: tuple[int, int, int]) -> tuple[np.ndarray, float]:
    a, b, c = (pts[i] for i in face)
    normal = np.cross(b - a, c - a)
    length = np.linalg.norm(normal)
    if length == 0.0:
        return normal, 0.0
    normal = normal / length
    return normal, float(normal @ a)


def _initial_tetrahedron(pts: np.ndarray, eps: float) -> list[int]:
    i0 = int(np.argmin(pts[:, 0]))
    i1 = int(np.argmax(np.linalg.norm(pts - pts[i0], axis=1)))
    line = (pts[i1] - pts[i0]) / np.linalg.norm(pts[i1] - pts[i0])
    rel = pts - pts[i0]
    off_line = rel - np.outer(rel @ line, line)
    i2 = int(np.argmax(np.linalg.norm(off_line, axis=1)))
    normal = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    normal /= np.linalg.norm(normal)
    heights = np.abs(rel @ normal)
    i3 = int(np.argmax(heights))
    if heights[i3] <= eps:
        raise DegenerateInputError("points are coplanar")
    return [i0, i1, i2, i3]


def _hull_3d(pts: np.ndarray, scale: float) -> HullModel:
    """Incremental hull: replace the faces visible from each new point by a cone."""
    eps = 1e-10 * scale
    seed = _initial_tetrahedron(pts, eps)
    interior = pts[seed].mean(axis=0)

    faces: list[tuple[int, int, int]] = []
    for face in itertools.combinations(seed, 3):
        normal, offset = _plane(pts, face)
        if normal @ interior > offset:
            face = (face[0], face[2], face[1])
        faces.append(face)

    # farthest first
    remaining = sorted(
        (i for i in range(len(pts)) if i not in seed),
        key=lambda i: -float(np.linalg.norm(pts[i] - interior)),
    )
    for idx in remaining:
        visible = []
        for face in faces:
            normal, offset = _plane(pts, face)
            if normal @ pts[idx] - offset > eps:
                visible.append(face)
        if not visible:
            continue
        directed = Counter()
        for a, b, c in visible:
            directed.update([(a, b), (b, c), (c, a)])
        horizon = [edge for edge in directed if (edge[1], edge[0]) not in directed]
        visible_set = set(visible)
        faces = [f for f in faces if f not in visible_set] + [(a, b, idx) for a, b in horizon]

    areas = [np.linalg.norm(np.cross(pts[b] - pts[a], pts[c] - pts[a])) for a, b, c in faces]
    planes = [_plane(pts, face) for face in faces]
    keep = [k for k, area in enumerate(areas) if area > 1e-12 * scale * scale]
    faces = [faces[k] for k in keep]
    normals = np.array([planes[k][0] for k in keep])
    offsets = np.array([planes[k][1] for k in keep])
    return _fan(3, pts, faces, normals, offsets)


# ---------------------------------------------------------------------------
# Integration, membership, sampling
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=512)
def _barycentric_weight(d: int, counts: tuple[int, ...]) -> float:
    """``d! prod b_k! / (d + |b|)!``: normalized integral of ``prod lambda_k^{b_k}``."""
    numerator = math.factorial(d) * math.prod(math.factorial(b) for b in counts)
    return numerator / math.factorial(d + sum(counts))


def exact_monomial_moment(hull: HullModel, alpha, normalized: bool = False) -> float:
    """``int_K x^alpha dx`` over the hull, or its average when ``normalized``.

    Raises:
        UnsupportedDegreeError: ``|alpha| > 4``.
    """
    index = as_multi_index(alpha)
    if len(index.exponents) != hull.dim:
        raise DimensionMismatchError(
            f"multi-index has {len(index.exponents)} entries, hull dimension is {hull.dim}"
        )
    if index.degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree {index.degree} exceeds {MAX_DEGREE}")

    factors = [axis for axis, e in enumerate(index.exponents) for _ in range(e)]
    corners = hull.dim + 1
    per_simplex = np.zeros(len(hull.simplices))
    for choice in itertools.product(range(corners), repeat=len(factors)):
        term = np.ones(len(hull.simplices))
        for corner, axis in zip(choice, factors, strict=True):
            term = term * hull.simplices[:, corner, axis]
        counts = tuple(sorted(Counter(choice).values()))
        per_simplex += term * _barycentric_weight(hull.dim, counts)

    integral = float(per_simplex @ hull.simplex_volumes)
    return integral / hull.volume if normalized else integral


def hull_contains(hull: HullModel, point, tol: float = 1e-9) -> bool:
    """Whether ``point`` satisfies every facet inequality up to ``tol``."""
    p = np.atleast_1d(np.asarray(point, dtype=float))
    return bool(np.all(hull.normals @ p - hull.offsets <= tol))


def oracle_uniform_sample(
    hull: HullModel, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Uniform point(s) of the hull: volume-weighted simplex, then Dirichlet barycentrics."""
    draws = 1 if size is None else size
    cdf = np.cumsum(hull.simplex_volumes)
    chosen = np.searchsorted(cdf, rng.uniform(0.0, cdf[-1], draws), side="right")
    np.minimum(chosen, len(cdf) - 1, out=chosen)
    spacings = rng.standard_exponential((draws, hull.dim + 1))
    barycentric = spacings / spacings.sum(axis=1, keepdims=True)
    points = np.einsum("mk,mkd->md", barycentric, hull.simplices[chosen])
    return points[0] if size is None else points


# ---------------------------------------------------------------------------
# Moment tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OracleMoments:
    """Normalized monomial moments up to degree 4 of a projected body, in frame coordinates."""

    body: str
    hull: HullModel
    table: dict[tuple[int, ...], float]
    second: np.ndarray
    fourth: np.ndarray

    @property
    def volume(self) -> float:
        """Hull volume."""
        return self.hull.volume

    @property
    def e_x2(self) -> float:
        """``E|X|^2 = sum_i m(2 e_i)``."""
        return float(np.trace(self.second))

    @property
    def e_x4(self) -> float:
        """``E|X|^4 = sum_{i,j} E x_i^2 x_j^2``."""
        return float(np.einsum("iijj->", self.fourth))

    @property
    def var_x2(self) -> float:
        """``Var|X|^2``."""
        return self.e_x4 - self.e_x2**2

    @property
    def b2(self) -> float:
        """Spectral condition number of the second-moment matrix."""
        top, bottom = top_eigenvalue_sym(self.second)
        return top / bottom

    def directional_second(self, u) -> float:
        """``E<X, u>^2`` for ``u`` in frame coordinates."""
        u = np.asarray(u, dtype=float)
        return float(u @ self.second @ u)

    def mixed_fourth(self, u, v) -> float:
        """``E<X, u>^2 <X, v>^2`` for ``u``, ``v`` in frame coordinates."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return float(np.einsum("ijkl,i,j,k,l->", self.fourth, u, u, v, v))


def _multi_indices(d: int, max_degree: int):
    for exponents in itertools.product(range(max_degree + 1), repeat=d):
        if sum(exponents) <= max_degree:
            yield exponents


def oracle_moments(body: str, theta: UnitDirection, frame: HyperplaneFrame) -> OracleMoments:
    """Hull of the projected vertices and every normalized moment of degree at most 4."""
    hull = convex_hull(projected_vertices(body, theta, frame), d=frame.dim)
    table = {
        exponents: exact_monomial_moment(hull, MultiIndex(exponents), normalized=True)
        for exponents in _multi_indices(hull.dim, MAX_DEGREE)
    }

    d = hull.dim
    second = np.empty((d, d))
    for i, j in itertools.product(range(d), repeat=2):
        second[i, j] = table[_exponents_of(d, (i, j))]
    fourth = np.empty((d,) * 4)
    for axes in itertools.product(range(d), repeat=4):
        fourth[axes] = table[_exponents_of(d, axes)]

    logger.debug(
        f"oracle {body} n={theta.n}: volume={hull.volume:.12g}, {len(hull.facets)} facets"
    )
    return OracleMoments(body=body, hull=hull, table=table, second=second, fourth=fourth)


def _exponents_of(d: int, axes: tuple[int, ...]) -> tuple[int, ...]:
    exponents = [0] * d
    for axis in axes:
        exponents[axis] += 1
    return tuple(exponents)
