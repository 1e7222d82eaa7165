"""Small dense linear algebra: hyperplane frames, Haar rotations, Jacobi eigensolver, SVD.

Every random operation takes an explicit ``numpy.random.Generator``. Streams are
built by :func:`make_stream` from a ``(seed, *keys)`` tuple on the counter-based
Philox bit generator, so a chunk of work always sees the same random numbers no
matter which worker thread runs it.
"""

import math
from dataclasses import dataclass

import numpy as np

from polyvar.errors import (
    DimensionMismatchError,
    DimensionTooSmallError,
    NotFiniteError,
    SingularMatrixError,
    ZeroVectorError,
)

JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 60
SINGULAR_RTOL = 1e-12
MAX_SEED = 2**64 - 1


def make_stream(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent Philox stream for ``(seed, *keys)``.

    ``seed`` must be a 64-bit unsigned value; ``keys`` identify the stream
    (chunk index, dimension, rotation index, ...).
    """
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(sequence))


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class UnitDirection:
    """Unit normal ``theta`` of the hyperplane ``H = theta^perp``, with cached l1 norm."""

    n: int
    coords: np.ndarray
    l1: float

    @property
    def weights(self) -> np.ndarray:
        """Facet mixture weights ``|theta_i| / ||theta||_1`` of the projected cube."""
        return np.abs(self.coords) / self.l1

    def as_tuple(self) -> tuple[float, ...]:
        """Plain-float coordinates, used as a cache key and in reports."""
        return tuple(float(c) for c in self.coords)


@dataclass(frozen=True, eq=False)
class HyperplaneFrame:
    """Orthonormal basis of ``theta^perp`` stored as the rows of ``basis`` ((n-1) x n)."""

    theta: UnitDirection
    basis: np.ndarray

    @property
    def dim(self) -> int:
        """Dimension of the hyperplane, ``n - 1``."""
        return self.theta.n - 1

    def lift(self, coords: np.ndarray) -> np.ndarray:
        """Map frame coordinates (one point or a batch) back into R^n."""
        return np.asarray(coords, dtype=float) @ self.basis


@dataclass(frozen=True, eq=False)
class LinearMapSpec:
    """Invertible map ``T = V diag(singular_values) U1`` with its norms."""

    n: int
    matrix: np.ndarray
    singular_values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    op_norm: float
    hs_norm: float

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Apply ``T`` to one point or to each row of a batch."""
        return np.asarray(points, dtype=float) @ self.matrix.T

    def rebuild(self) -> np.ndarray:
        """Reassemble ``V diag(Lambda) U1`` from the cached factors."""
        return (self.left * self.singular_values) @ self.right


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    """Symmetric matrix in packed upper-triangle storage (row-major)."""

    n: int
    entries: np.ndarray

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "SymmetricMatrix":
        """Pack the upper triangle of ``(dense + dense.T) / 2``."""
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DimensionMismatchError(f"expected a square matrix, got shape {dense.shape}")
        sym = 0.5 * (dense + dense.T)
        rows, cols = np.triu_indices(sym.shape[0])
        return cls(n=sym.shape[0], entries=_frozen(sym[rows, cols].copy()))

    def to_dense(self) -> np.ndarray:
        """Unpack into a full ``n x n`` array."""
        dense = np.zeros((self.n, self.n))
        rows, cols = np.triu_indices(self.n)
        dense[rows, cols] = self.entries
        dense[cols, rows] = self.entries
        return dense


# ---------------------------------------------------------------------------
# Directions and frames
# ---------------------------------------------------------------------------


def normalize_direction(v) -> UnitDirection:
    """Normalize ``v`` into a :class:`UnitDirection`.

    Raises:
        DimensionTooSmallError: fewer than two coordinates.
        ZeroVectorError: ``|v| < 1e-300``.
    """
    vector = np.asarray(v, dtype=float).ravel()
    if vector.size < 2:
        raise DimensionTooSmallError(f"a hyperplane direction needs n >= 2, got n={vector.size}")
    if not np.all(np.isfinite(vector)):
        raise NotFiniteError("direction has non-finite coordinates")
    norm = float(np.linalg.norm(vector))
    if norm < 1e-300:
        raise ZeroVectorError("cannot normalize a zero vector")
    coords = vector / norm
    return UnitDirection(n=vector.size, coords=_frozen(coords), l1=float(np.abs(coords).sum()))


def random_direction(n: int, rng: np.random.Generator) -> UnitDirection:
    """Draw ``theta`` uniformly from the sphere ``S^{n-1}``."""
    while True:
        v = rng.standard_normal(n)
        if np.linalg.norm(v) > 1e-12:
            return normalize_direction(v)


def axis_direction(n: int, i: int) -> UnitDirection:
    """The standard basis direction ``e_i`` (1-based) in R^n."""
    v = np.zeros(n)
    v[i - 1] = 1.0
    return normalize_direction(v)


def hyperplane_frame(theta: UnitDirection) -> HyperplaneFrame:
    """Orthonormal basis of ``theta^perp`` from one Householder reflection.

    The reflection ``I - 2 v v^T / |v|^2`` with ``v = theta + copysign(1, theta_n) e_n``
    maps ``e_n`` to ``-+theta``; its first ``n - 1`` columns span the hyperplane.
    """
    n = theta.n
    s = math.copysign(1.0, theta.coords[-1])
    v = theta.coords.copy()
    v[-1] += s
    reflection = np.eye(n) - (2.0 / float(v @ v)) * np.outer(v, v)
    basis = reflection[:, : n - 1].T.copy()
    return HyperplaneFrame(theta=theta, basis=_frozen(basis))


def project_to_frame(x: np.ndarray, frame: HyperplaneFrame) -> np.ndarray:
    """Frame coordinates of ``P_H x`` for one point (length n) or a batch (m x n)."""
    points = np.asarray(x, dtype=float)
    if points.shape[-1] != frame.theta.n:
        raise DimensionMismatchError(
            f"point has dimension {points.shape[-1]}, frame expects {frame.theta.n}"
        )
    return points @ frame.basis.T


def random_frame_basis(frame: HyperplaneFrame, rng: np.random.Generator) -> np.ndarray:
    """A Haar-random orthonormal basis of the hyperplane, as rows in R^n."""
    q = haar_orthogonal(frame.dim, rng)
    return q.T @ frame.basis


# ---------------------------------------------------------------------------
# Haar measure on O(n)
# ---------------------------------------------------------------------------


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR of a Gaussian matrix.

    The columns of ``Q`` are multiplied by the signs of ``diag(R)`` so that the
    factorization is unique and the law of ``Q`` is invariant.
    """
    if n < 1:
        raise DimensionTooSmallError(f"n must be >= 1, got {n}")
    gaussian = rng.standard_normal((n, n))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


# ---------------------------------------------------------------------------
# Eigen / singular decompositions
# ---------------------------------------------------------------------------


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm is at
    most ``tol * ||A||_F``. Returns ``(eigenvalues, eigenvectors)`` with
    ``A = V diag(w) V^T`` and eigenvectors in the columns of ``V``.
    """
    a = np.array(matrix, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotFiniteError("matrix has non-finite entries")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if scale == 0.0 or n == 1:
        return np.diag(a).copy(), v

    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q

    return np.diag(a).copy(), v


def top_eigenvalue_sym(m: SymmetricMatrix | np.ndarray) -> tuple[float, float]:
    """Extreme eigenvalues ``(lambda_max, lambda_min)`` of a symmetric matrix."""
    dense = m.to_dense() if isinstance(m, SymmetricMatrix) else np.asarray(m, dtype=float)
    eigenvalues, _ = jacobi_eigh(dense)
    return float(eigenvalues.max()), float(eigenvalues.min())


def svd_decompose(matrix: np.ndarray) -> LinearMapSpec:
    """Singular decomposition ``T = V diag(Lambda) U1`` via the Jacobi eigensolver on ``T^T T``.

    Singular values are recomputed as ``|T w_i|`` for each eigenvector ``w_i``,
    which keeps small singular values accurate enough for the singularity test.

    Raises:
        SingularMatrixError: ``min(Lambda) <= 1e-12 * max(Lambda)``.
    """
    t = np.asarray(matrix, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {t.shape}")
    if not np.all(np.isfinite(t)):
        raise NotFiniteError("matrix has non-finite entries")

    _, w = jacobi_eigh(t.T @ t)
    tw = t @ w
    singular_values = np.linalg.norm(tw, axis=0)
    order = np.argsort(singular_values)[::-1]
    singular_values = singular_values[order]
    w = w[:, order]
    tw = tw[:, order]

    if singular_values[0] == 0.0 or singular_values[-1] <= SINGULAR_RTOL * singular_values[0]:
        raise SingularMatrixError(
            f"matrix is singular: singular values span [{singular_values[-1]:.3e}, "
            f"{singular_values[0]:.3e}]"
        )

    left = tw / singular_values
    return LinearMapSpec(
        n=t.shape[0],
        matrix=_frozen(t.copy()),
        singular_values=_frozen(singular_values),
        left=_frozen(left),
        right=_frozen(w.T.copy()),
        op_norm=float(singular_values[0]),
        hs_norm=float(np.sqrt(np.sum(singular_values**2))),
    )
