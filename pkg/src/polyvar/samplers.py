"""Exact uniform samplers for the simplex, cube facets and the projected polytopes.

A uniform point of ``P_H K`` for a polytope ``K`` is a projected-facet-volume
weighted mixture of projected uniform facet points. For the cube the facet
``{y_i = +-1}`` projects to volume ``2^{n-1} |theta_i|``; for the cross-polytope
the facet ``eps * Delta`` projects to a volume proportional to ``|<eps, theta>|``.

Every sampler accepts ``size``: ``None`` returns one point, an integer returns a
``(size, dim)`` batch drawn in one vectorized call.
"""

import functools
import logging
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np

from polyvar.config import settings
from polyvar.errors import (
    DimensionTooLargeError,
    DimensionTooSmallError,
    IndexOutOfRangeError,
    InsufficientDataError,
    PolyvarError,
)
from polyvar.geomcore import (
    HyperplaneFrame,
    LinearMapSpec,
    UnitDirection,
    hyperplane_frame,
    normalize_direction,
)

logger = logging.getLogger(__name__)

BODIES = ("cube-proj", "cross-proj", "cube", "simplex", "gauss")


@dataclass(frozen=True, eq=False)
class SignVector:
    """A point of ``{-1, +1}^n``."""

    n: int
    signs: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightedBatch:
    """Frame-coordinate points with nonnegative self-normalizing weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.points.shape[0] != self.weights.shape[0]:
            raise PolyvarError(
                f"batch has {self.points.shape[0]} points but {self.weights.shape[0]} weights"
            )
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise PolyvarError("weights must be finite and nonnegative")

    def _total(self) -> float:
        total = float(self.weights.sum())
        if not total > 0.0:
            raise InsufficientDataError(
                f"batch of {len(self.weights)} points has zero total weight"
            )
        return total

    def ratio_estimate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """Self-normalized estimate ``sum(w f(x)) / sum(w)`` of ``E f(X)``.

        Raises:
            InsufficientDataError: every weight is zero.
        """
        total = self._total()
        values = np.broadcast_to(np.asarray(f(self.points), dtype=float), self.weights.shape)
        return float(self.weights @ values / total)

    @property
    def effective_size(self) -> float:
        """Kish effective sample size ``(sum w)^2 / sum w^2``."""
        total = self._total()
        return float(total * total / (self.weights @ self.weights))


def _check_dimension(n: int) -> None:
    if n < 2:
        raise DimensionTooSmallError(f"n must be >= 2, got {n}")


def _random_signs(rng: np.random.Generator, shape) -> np.ndarray:
    return 2 * rng.integers(0, 2, size=shape, dtype=np.int8) - 1


# ---------------------------------------------------------------------------
# Simplex and cube facets
# ---------------------------------------------------------------------------


def sample_simplex(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) of the standard simplex ``Delta_{n-1}`` from normalized exponentials."""
    _check_dimension(n)
    shape = (n,) if size is None else (size, n)
    spacings = rng.standard_exponential(shape)
    return spacings / spacings.sum(axis=-1, keepdims=True)


def sample_cube_facet(
    n: int, axis: int, sign: int, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Uniform point(s) of the cube facet ``{y_axis = sign}``; ``axis`` is 1-based."""
    _check_dimension(n)
    if not 1 <= axis <= n:
        raise IndexOutOfRangeError(f"axis must lie in 1..{n}, got {axis}")
    if sign not in (-1, 1):
        raise PolyvarError(f"sign must be +1 or -1, got {sign}")
    shape = (n,) if size is None else (size, n)
    points = rng.uniform(-1.0, 1.0, shape)
    points[..., axis - 1] = float(sign)
    return points


def cube_mixture_weights(theta: UnitDirection) -> np.ndarray:
    """Facet-axis probabilities ``|theta_i| / ||theta||_1`` of the projected cube."""
    return theta.weights


def _cube_facet_points(theta: UnitDirection, rng: np.random.Generator, size: int) -> np.ndarray:
    cdf = np.cumsum(np.abs(theta.coords))
    axes = np.searchsorted(cdf, rng.uniform(0.0, cdf[-1], size), side="right")
    np.minimum(axes, theta.n - 1, out=axes)
    points = rng.uniform(-1.0, 1.0, (size, theta.n))
    points[np.arange(size), axes] = _random_signs(rng, size)
    return points


def sample_cube_projection(
    theta: UnitDirection,
    frame: HyperplaneFrame,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Uniform point(s) of ``P_H B_inf^n`` in frame coordinates."""
    points = _cube_facet_points(theta, rng, 1 if size is None else size) @ frame.basis.T
    return points[0] if size is None else points


# ---------------------------------------------------------------------------
# Tilted sign measure and the cross-polytope
# ---------------------------------------------------------------------------


def sign_sums(theta: UnitDirection) -> np.ndarray:
    """``<eps, theta>`` for all ``2^n`` sign vectors.

    Index ``k`` encodes ``eps_j = -1`` exactly when bit ``j`` of ``k`` is set.
    """
    return _sign_table(theta.as_tuple())[0]


@functools.lru_cache(maxsize=16)
def _sign_table(coords: tuple[float, ...]) -> tuple[np.ndarray, np.ndarray]:
    sums = np.zeros(1)
    for c in coords:
        sums = np.concatenate([sums + c, sums - c])
    cdf = np.cumsum(np.abs(sums))
    sums.setflags(write=False)
    cdf.setflags(write=False)
    return sums, cdf


def _check_enumerable(theta: UnitDirection) -> None:
    limit = settings.ENUMERATION_LIMIT
    if theta.n > limit:
        raise DimensionTooLargeError(theta.n, limit, hint="use weighted_cross_batch")


def signs_from_index(index: np.ndarray, n: int) -> np.ndarray:
    """Decode enumeration indices into rows of ``+-1`` (int8)."""
    bits = (np.asarray(index, dtype=np.int64)[..., None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def sample_sign_tilted(
    theta: UnitDirection, rng: np.random.Generator, size: int | None = None
) -> SignVector | np.ndarray:
    """Draw ``eps`` with ``P(eps) proportional to |<eps, theta>|``.

    The ``2^n`` masses are enumerated once per direction and inverted by
    binary search on their cumulative sum. A single draw returns a
    :class:`SignVector`; a batch returns an ``(size, n)`` int8 array.

    Raises:
        DimensionTooLargeError: ``n`` exceeds the enumeration limit.
    """
    _check_enumerable(theta)
    _, cdf = _sign_table(theta.as_tuple())
    draws = 1 if size is None else size
    index = np.searchsorted(cdf, rng.uniform(0.0, cdf[-1], draws), side="right")
    np.minimum(index, cdf.size - 1, out=index)
    signs = signs_from_index(index, theta.n)
    if size is None:
        return SignVector(n=theta.n, signs=signs[0])
    return signs


def sample_cross_projection(
    theta: UnitDirection,
    frame: HyperplaneFrame,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Uniform point(s) of ``P_H B_1^n`` in frame coordinates (exact tilted-sign path)."""
    draws = 1 if size is None else size
    signs = sample_sign_tilted(theta, rng, size=draws)
    simplex = sample_simplex(theta.n, rng, size=draws)
    points = (signs * simplex) @ frame.basis.T
    return points[0] if size is None else points


def weighted_cross_batch(
    theta: UnitDirection, frame: HyperplaneFrame, m: int, rng: np.random.Generator
) -> WeightedBatch:
    """Uniform-sign proposal with weights ``|<eps, theta>|`` for any ``n``."""
    if m < 1:
        raise PolyvarError(f"batch size must be >= 1, got {m}")
    signs = _random_signs(rng, (m, theta.n))
    simplex = sample_simplex(theta.n, rng, size=m)
    weights = np.abs(signs @ theta.coords)
    return WeightedBatch(points=(signs * simplex) @ frame.basis.T, weights=weights)


# ---------------------------------------------------------------------------
# Body samplers used by the engine and the CLI
# ---------------------------------------------------------------------------

DrawFn = Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray | None]]


@dataclass(frozen=True, eq=False)
class BodySampler:
    """A named body with a batch draw ``(rng, m) -> (points, weights or None)``."""

    body: str
    n: int
    dim: int
    draw: DrawFn
    theta: UnitDirection | None = None
    frame: HyperplaneFrame | None = None

    @property
    def weighted(self) -> bool:
        """Whether draws carry self-normalizing weights."""
        return self.body == "cross-proj" and self.n > settings.ENUMERATION_LIMIT


def make_body_sampler(body: str, n: int, theta: UnitDirection | None = None) -> BodySampler:
    """Build the batch sampler for ``body`` in dimension ``n``.

    ``cube`` is ``sqrt(3) * Uniform[-1, 1]^n`` (isotropic), ``gauss`` the standard
    Gaussian, ``simplex`` the centered simplex ``Delta_{n-1} - 1/n`` expressed in
    the frame of ``(1, ..., 1)/sqrt(n)``. The projected bodies need ``theta``;
    ``cross-proj`` switches to the weighted path beyond the enumeration limit.
    """
    _check_dimension(n)
    if body == "cube":
        scale = np.sqrt(3.0)

        def draw_cube(rng, m):
            return scale * rng.uniform(-1.0, 1.0, (m, n)), None

        return BodySampler(body, n, n, draw_cube)
    if body == "gauss":
        return BodySampler(body, n, n, lambda rng, m: (rng.standard_normal((m, n)), None))
    if body == "simplex":
        frame = hyperplane_frame(normalize_direction(np.ones(n)))

        def draw_simplex(rng, m):
            return (sample_simplex(n, rng, size=m) - 1.0 / n) @ frame.basis.T, None

        return BodySampler(body, n, n - 1, draw_simplex, frame.theta, frame)

    if body not in BODIES:
        raise PolyvarError(f"unknown body {body!r}; expected one of {', '.join(BODIES)}")
    if theta is None:
        raise PolyvarError(f"body {body!r} needs a hyperplane direction")
    if theta.n != n:
        raise PolyvarError(f"direction has n={theta.n}, expected n={n}")
    frame = hyperplane_frame(theta)

    if body == "cube-proj":

        def draw_cube(rng, m):
            return sample_cube_projection(theta, frame, rng, size=m), None

        return BodySampler(body, n, n - 1, draw_cube, theta, frame)

    if n <= settings.ENUMERATION_LIMIT:

        def draw_cross(rng, m):
            return sample_cross_projection(theta, frame, rng, size=m), None

        return BodySampler(body, n, n - 1, draw_cross, theta, frame)

    logger.warning(
        f"n={n} exceeds the enumeration limit {settings.ENUMERATION_LIMIT}; "
        "using the weighted cross-polytope estimator"
    )

    def draw_weighted(rng, m):
        batch = weighted_cross_batch(theta, frame, m, rng)
        return batch.points, batch.weights

    return BodySampler(body, n, n - 1, draw_weighted, theta, frame)


def with_linear_map(sampler: BodySampler, t: LinearMapSpec) -> BodySampler:
    """Sampler of ``TX`` for ``X`` drawn by ``sampler``; weights pass through unchanged."""
    if t.n != sampler.dim:
        raise PolyvarError(f"map acts on R^{t.n} but {sampler.body} lives in R^{sampler.dim}")
    draw = sampler.draw

    def draw_mapped(rng, m):
        points, weights = draw(rng, m)
        return t.apply(points), weights

    return replace(sampler, draw=draw_mapped)
