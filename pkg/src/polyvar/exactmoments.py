"""Closed-form moments of projected cubes, projected cross-polytopes, simplices and spheres.

Rational quantities (Dirichlet and spherical moments) are returned as
``fractions.Fraction``; anything depending on ``theta`` is a double.

Cube projections: with ``w_i = |theta_i| / ||theta||_1`` the uniform measure on
``P_H B_inf^n`` is the image of the facet mixture ``sum_i w_i * Unif(+-F_i)``.
Cross-polytope projections: ``X = P_H(eps Y)`` with ``Y`` uniform on the
simplex and ``eps`` drawn with mass proportional to ``|<eps, theta>|``.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from polyvar.config import settings
from polyvar.errors import (
    DimensionMismatchError,
    DimensionTooLargeError,
    DimensionTooSmallError,
    IndexOutOfRangeError,
    MomentOverflowError,
    NotOrthogonalError,
    NotOrthonormalTripleError,
    NotUnitError,
    PolyvarError,
    UnsupportedDegreeError,
)
from polyvar.geomcore import UnitDirection, hyperplane_frame
from polyvar.samplers import sign_sums

IN_PLANE_TOL = 1e-10
MAX_FACTORIAL_ARG = 100_000

# E<X,eta1>^2<X,eta2>^2 = 1/9 + sum_i w_i [C1 (a_i + b_i) + C2 a_i b_i + C3 sum_{l != i} a_l b_l]
# with a = eta1^2, b = eta2^2 (coordinatewise).
MIXED_FOURTH_C1 = 2.0 / 9.0
MIXED_FOURTH_C2 = -2.0 / 3.0
MIXED_FOURTH_C3 = -2.0 / 15.0


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of a monomial."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(int(a) != a or a < 0 for a in self.exponents):
            raise PolyvarError(f"exponents must be nonnegative integers, got {self.exponents}")

    @property
    def degree(self) -> int:
        """Total degree ``|a|``."""
        return sum(self.exponents)


def as_multi_index(a) -> MultiIndex:
    """Coerce a sequence of exponents into a :class:`MultiIndex`."""
    return a if isinstance(a, MultiIndex) else MultiIndex(tuple(int(x) for x in a))


def _check_in_plane(theta: UnitDirection, eta: np.ndarray) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (theta.n,):
        raise DimensionMismatchError(f"eta has shape {eta.shape}, expected ({theta.n},)")
    if abs(float(eta @ eta) - 1.0) > IN_PLANE_TOL:
        raise NotUnitError(f"|eta| = {np.linalg.norm(eta):.12g}, expected 1")
    if abs(float(eta @ theta.coords)) > IN_PLANE_TOL:
        raise NotOrthogonalError(f"<eta, theta> = {eta @ theta.coords:.3e}, expected 0")
    return eta


# ---------------------------------------------------------------------------
# Cube projections
# ---------------------------------------------------------------------------


def cube_proj_second_moment(theta: UnitDirection, eta) -> float:
    """``E<X, eta>^2 = 1/3 + (2/3) sum_j eta_j^2 |theta_j| / ||theta||_1``."""
    eta = _check_in_plane(theta, eta)
    return 1.0 / 3.0 + (2.0 / 3.0) * float(eta**2 @ theta.weights)


def cube_proj_mixed_fourth(theta: UnitDirection, eta1, eta2) -> float:
    """``E<X, eta1>^2 <X, eta2>^2`` for ``X`` uniform on ``P_H B_inf^n``.

    On facet ``i`` the fixed coordinate contributes ``a_i b_i`` and the free
    coordinates are independent ``Uniform[-1, 1]``; summing the facet terms with
    weights ``w_i`` gives the coefficients ``(2/9, -2/3, -2/15)`` above.

    Raises:
        NotOrthonormalTripleError: ``(theta, eta1, eta2)`` is not orthonormal.
    """
    try:
        eta1 = _check_in_plane(theta, eta1)
        eta2 = _check_in_plane(theta, eta2)
    except (NotUnitError, NotOrthogonalError) as e:
        raise NotOrthonormalTripleError(str(e)) from e
    if abs(float(eta1 @ eta2)) > IN_PLANE_TOL:
        raise NotOrthonormalTripleError(f"<eta1, eta2> = {eta1 @ eta2:.3e}, expected 0")

    a = eta1**2
    b = eta2**2
    ab = a * b
    per_facet = MIXED_FOURTH_C1 * (a + b) + MIXED_FOURTH_C2 * ab + MIXED_FOURTH_C3 * (ab.sum() - ab)
    return 1.0 / 9.0 + float(theta.weights @ per_facet)


def cube_proj_snc_gap(theta: UnitDirection, eta1, eta2) -> float:
    """``E<X,eta1>^2<X,eta2>^2 - E<X,eta1>^2 E<X,eta2>^2``; nonpositive for every input."""
    mixed = cube_proj_mixed_fourth(theta, eta1, eta2)
    return mixed - cube_proj_second_moment(theta, eta1) * cube_proj_second_moment(theta, eta2)


def cube_proj_volume(theta: UnitDirection) -> float:
    """``Vol(P_H B_inf^n) = 2^{n-1} ||theta||_1``."""
    return math.ldexp(theta.l1, theta.n - 1)


def cube_facet_proj_volume(theta: UnitDirection, i: int) -> float:
    """Volume ``2^{n-1} |theta_i|`` of the projected facet ``F_i`` (1-based ``i``)."""
    if not 1 <= i <= theta.n:
        raise IndexOutOfRangeError(f"facet index must lie in 1..{theta.n}, got {i}")
    return math.ldexp(abs(float(theta.coords[i - 1])), theta.n - 1)


def cube_quadratic_form(theta: UnitDirection) -> np.ndarray:
    """Second-moment matrix of ``P_H B_inf^n`` in the coordinates of :func:`hyperplane_frame`.

    This is ``B Q B^T`` with ``Q = (1/3) I + (2/3) diag(w)`` and ``B`` the frame basis.
    """
    basis = hyperplane_frame(theta).basis
    q = np.eye(theta.n) / 3.0 + (2.0 / 3.0) * np.diag(theta.weights)
    return basis @ q @ basis.T


def cube_proj_condition_number(theta: UnitDirection) -> float:
    """Spectral condition number ``B^2`` of the projected cube's covariance (at most 3)."""
    eigenvalues = np.linalg.eigvalsh(cube_quadratic_form(theta))
    return float(eigenvalues[-1] / eigenvalues[0])


@dataclass(frozen=True)
class RadialMoments:
    """Exact radial moments of a projected body."""

    e_x2: float
    e_x4: float

    @property
    def var_x2(self) -> float:
        """``Var|X|^2 = E|X|^4 - (E|X|^2)^2``."""
        return self.e_x4 - self.e_x2 * self.e_x2


def cube_proj_radial_moments(theta: UnitDirection) -> RadialMoments:
    """Exact ``E|X|^2`` and ``E|X|^4`` for ``X`` uniform on ``P_H B_inf^n``.

    ``|P_H y|^2 = y^T A y`` with ``A = I - theta theta^T``. Facet ``i`` has
    independent symmetric coordinates with second moments ``m_2`` (``1`` on axis
    ``i``, ``1/3`` elsewhere) and fourth moments ``m_4`` (``1``, ``1/5``), so
    ``E (y^T A y)^2 = tr(AM)^2 + 2 tr(AMAM) + sum_j A_jj^2 (m4_j - 3 m2_j^2)``.
    """
    n = theta.n
    a = np.eye(n) - np.outer(theta.coords, theta.coords)
    diag = np.diag(a)
    e_x2 = 0.0
    e_x4 = 0.0
    for i, w in enumerate(theta.weights):
        if w == 0.0:
            continue
        m2 = np.full(n, 1.0 / 3.0)
        m4 = np.full(n, 1.0 / 5.0)
        m2[i] = 1.0
        m4[i] = 1.0
        am = a * m2
        trace = float(np.trace(am))
        e_x2 += w * trace
        kurtosis = float(diag**2 @ (m4 - 3.0 * m2 * m2))
        e_x4 += w * (trace * trace + 2.0 * float(np.sum(am * am.T)) + kurtosis)
    return RadialMoments(e_x2=e_x2, e_x4=e_x4)


# ---------------------------------------------------------------------------
# Dirichlet moments
# ---------------------------------------------------------------------------


def _rising_range_product(n: int, k: int) -> int:
    """``(n - 1 + k)! / (n - 1)!``."""
    if n - 1 + k > MAX_FACTORIAL_ARG:
        raise MomentOverflowError(
            f"factorial argument {n - 1 + k} exceeds the limit {MAX_FACTORIAL_ARG}"
        )
    return math.prod(range(n, n + k))


def simplex_moment(n: int, a) -> Fraction:
    """``E Y^a = (n-1)! prod a_i! / (n-1+|a|)!`` for ``Y`` uniform on ``Delta_{n-1}``."""
    if n < 1:
        raise DimensionTooSmallError(f"n must be >= 1, got {n}")
    index = as_multi_index(a)
    if len(index.exponents) > n:
        raise DimensionMismatchError(f"{len(index.exponents)} exponents for n={n}")
    if any(e > MAX_FACTORIAL_ARG for e in index.exponents):
        raise MomentOverflowError(f"exponent exceeds the limit {MAX_FACTORIAL_ARG}")
    numerator = math.prod(math.factorial(e) for e in index.exponents)
    return Fraction(numerator, _rising_range_product(n, index.degree))


def simplex_radial_moments(n: int) -> tuple[Fraction, Fraction]:
    """``(E|Y|^2, E|Y|^4) = (2/(n+1), 4(n+5)/((n+1)(n+2)(n+3)))``."""
    if n < 2:
        raise DimensionTooSmallError(f"n must be >= 2, got {n}")
    m2 = n * simplex_moment(n, (2,))
    m4 = n * simplex_moment(n, (4,)) + n * (n - 1) * simplex_moment(n, (2, 2))
    return m2, m4


def _complete_homogeneous(c: np.ndarray, k: int) -> float:
    """``h_k(c)`` from power sums by Newton's identity ``k h_k = sum_i p_i h_{k-i}``."""
    power_sums = [float(np.sum(c**i)) for i in range(1, k + 1)]
    h = [1.0]
    for j in range(1, k + 1):
        h.append(sum(power_sums[i - 1] * h[j - i] for i in range(1, j + 1)) / j)
    return h[k]


def simplex_linear_form_moment(c, k: int) -> float:
    """``E(sum_i c_i Y_i)^k = k! (n-1)! / (n-1+k)! * h_k(c)``, ``k <= 4``."""
    c = np.asarray(c, dtype=float).ravel()
    if not 0 <= k <= 4:
        raise UnsupportedDegreeError(f"degree must lie in 0..4, got {k}")
    if c.size < 1:
        raise DimensionTooSmallError("coefficient vector is empty")
    return math.factorial(k) * _complete_homogeneous(c, k) / _rising_range_product(c.size, k)


# ---------------------------------------------------------------------------
# Tilted sign measure and cross-polytope projections
# ---------------------------------------------------------------------------


def _check_enumerable(theta: UnitDirection) -> None:
    if theta.n > settings.ENUMERATION_LIMIT:
        raise DimensionTooLargeError(theta.n, settings.ENUMERATION_LIMIT)


def tilted_sign_moment(theta: UnitDirection, p: int) -> float:
    """``E |<eps, theta>|^p = sum |s|^{p+1} / sum |s|`` over all ``2^n`` sign sums ``s``."""
    if p < 1:
        raise PolyvarError(f"p must be >= 1, got {p}")
    _check_enumerable(theta)
    s = np.abs(sign_sums(theta))
    return float(np.sum(s ** (p + 1)) / np.sum(s))


def cross_proj_second_moment(theta: UnitDirection) -> float:
    """``E<eps Y, theta>^2 = (1 + E|<eps, theta>|^2) / (n (n+1))``."""
    n = theta.n
    return (1.0 + tilted_sign_moment(theta, 2)) / (n * (n + 1))


def cross_proj_volume(theta: UnitDirection) -> float:
    """``Vol(P_H B_1^n) = sum_eps |<eps, theta>| / (2 (n-1)!)``."""
    _check_enumerable(theta)
    return float(np.sum(np.abs(sign_sums(theta)))) / (2.0 * math.factorial(theta.n - 1))


@dataclass(frozen=True)
class CrossRadialMoments(RadialMoments):
    """Exact radial moments of ``P_H B_1^n`` with the theta-component moments of ``eps Y``."""

    e_dot2: float
    e_dot4: float


def cross_proj_radial_moments(theta: UnitDirection) -> CrossRadialMoments:
    """Exact ``E|X|^2``, ``E|X|^4`` for ``X`` uniform on ``P_H B_1^n`` (``n`` enumerable).

    For a fixed sign vector put ``c = eps theta``, ``s = <eps, theta>``,
    ``p3 = sum eps_i theta_i^3``, ``p4 = sum theta_i^4`` and
    ``D = n(n+1)(n+2)(n+3)``. Then ``|X|^2 = |Y|^2 - <Y, c>^2`` and

    * ``E<Y,c>^2 = (1 + s^2) / (n(n+1))``
    * ``E<Y,c>^4 = (s^4 + 6 s^2 + 3 + 8 s p3 + 6 p4) / D``
    * ``E|Y|^2<Y,c>^2 = (2n + 12 + (2n + 8) s^2) / D``
    * ``E|Y|^4 = 4n(n+5) / D``

    averaged over the tilted sign measure.
    """
    _check_enumerable(theta)
    n = theta.n
    s = sign_sums(theta)
    p3 = np.zeros(1)
    for c in theta.coords:
        p3 = np.concatenate([p3 + c**3, p3 - c**3])
    p4 = float(np.sum(theta.coords**4))
    weights = np.abs(s)
    weights = weights / weights.sum()

    d = n * (n + 1) * (n + 2) * (n + 3)
    s2 = s * s
    dot2 = (1.0 + s2) / (n * (n + 1))
    dot4 = (s2 * s2 + 6.0 * s2 + 3.0 + 8.0 * s * p3 + 6.0 * p4) / d
    y2_dot2 = (2.0 * n + 12.0 + (2.0 * n + 8.0) * s2) / d
    y4 = 4.0 * n * (n + 5) / d

    e_dot2 = float(weights @ dot2)
    e_dot4 = float(weights @ dot4)
    return CrossRadialMoments(
        e_x2=2.0 / (n + 1) - e_dot2,
        e_x4=y4 - 2.0 * float(weights @ y2_dot2) + e_dot4,
        e_dot2=e_dot2,
        e_dot4=e_dot4,
    )


# ---------------------------------------------------------------------------
# Sphere
# ---------------------------------------------------------------------------


def sphere_fourth_moment(n: int) -> Fraction:
    """``int_{S^{n-1}} <e_1, eta>^4 d nu(eta) = 3 / (n (n+2))``."""
    if n < 1:
        raise DimensionTooSmallError(f"n must be >= 1, got {n}")
    return Fraction(3, n * (n + 2))
