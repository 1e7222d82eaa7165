"""Streaming estimators for the variance, thin-shell and negative-correlation statistics.

A :class:`MomentAccumulator` keeps weighted power sums split over ``B`` batch
slots. Slots are merged for the point estimates and compared against each other
for batch-means standard errors. The accumulator is single-writer; parallel
producers fill their own accumulators and :func:`merge` them.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np

from polyvar.config import settings
from polyvar.errors import (
    AssertionFailedError,
    DegenerateMarginalError,
    DimensionMismatchError,
    DimensionTooSmallError,
    IndexOutOfRangeError,
    InsufficientDataError,
    NoBasisError,
    NotIsotropicError,
    NotOrthogonalError,
    PolyvarError,
)
from polyvar.geomcore import LinearMapSpec, haar_orthogonal, jacobi_eigh

logger = logging.getLogger(__name__)

BASIS_TOL = 1e-9
DECOMPOSITION_RTOL = 1e-10
SANDWICH_RTOL = 1e-12
ISOTROPY_TOL = 0.05
HS_IDENTITY_RTOL = 0.01
OP_IDENTITY_RTOL = 0.05
MIN_ROTATIONS = 8
MIN_ROTATION_SAMPLES = 100_000


def _safe_ratio(numerator: float, denominator: float) -> float:
    if denominator > 0.0:
        return numerator / denominator
    return 0.0 if numerator == 0.0 else math.inf


def _check_basis(basis, dim: int) -> np.ndarray:
    basis = np.array(basis, dtype=float)
    if basis.shape != (dim, dim):
        raise DimensionMismatchError(f"basis has shape {basis.shape}, expected ({dim}, {dim})")
    if np.max(np.abs(basis @ basis.T - np.eye(dim))) > BASIS_TOL:
        raise NotOrthogonalError("basis rows are not orthonormal")
    basis.setflags(write=False)
    return basis


# ---------------------------------------------------------------------------
# Accumulator
# ---------------------------------------------------------------------------


class MomentAccumulator:
    """Weighted sums of ``|x|``, ``|x|^2``, ``|x|^4``, ``x``, ``x x^T`` and basis marginals.

    For each basis ``eta`` (rows of an orthonormal ``dim x dim`` matrix) it also
    keeps ``p2_i = sum w <x, eta_i>^2`` and ``q_ij = sum w <x, eta_i>^2 <x, eta_j>^2``;
    the diagonal of ``q`` is ``p4``.
    """

    def __init__(self, dim: int, bases=None, batches: int | None = None):
        """Create an empty accumulator for points of dimension ``dim``."""
        if dim < 1:
            raise DimensionTooSmallError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.batches = batches or settings.BATCHES
        self.bases = tuple(_check_basis(b, dim) for b in (bases or ()))
        slots = self.batches
        self.count = np.zeros(slots, dtype=np.int64)
        self.weight_sum = np.zeros(slots)
        self.s1 = np.zeros(slots)
        self.s2 = np.zeros(slots)
        self.s4 = np.zeros(slots)
        self.mean_sum = np.zeros((slots, dim))
        self.cov = np.zeros((slots, dim, dim))
        self.p2 = np.zeros((len(self.bases), slots, dim))
        self.q = np.zeros((len(self.bases), slots, dim, dim))
        self._cursor = 0

    @property
    def total_count(self) -> int:
        """Number of accumulated points."""
        return int(self.count.sum())

    def accumulate(self, x, w=None, slot: int | None = None) -> "MomentAccumulator":
        """Add one point or a batch (rows) with optional weights.

        Without an explicit ``slot`` each call fills the next batch slot in turn.
        """
        points = np.asarray(x, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"points have dimension {points.shape[-1]}, accumulator expects {self.dim}"
            )
        m = points.shape[0]
        if w is None:
            weights = np.ones(m)
        else:
            weights = np.broadcast_to(np.asarray(w, dtype=float), (m,))
            if not np.all(np.isfinite(weights)) or np.any(weights < 0):
                raise PolyvarError("weights must be finite and nonnegative")
        if slot is None:
            slot = self._cursor
            self._cursor = (self._cursor + 1) % self.batches
        elif not 0 <= slot < self.batches:
            raise IndexOutOfRangeError(f"slot must lie in 0..{self.batches - 1}, got {slot}")
        if m:
            self._add(slot, points, weights)
        return self

    def accumulate_split(self, x, w=None) -> "MomentAccumulator":
        """Spread a batch over all slots in contiguous, nearly equal pieces."""
        points = np.asarray(x, dtype=float)
        pieces = np.array_split(np.arange(points.shape[0]), self.batches)
        weights = None if w is None else np.asarray(w, dtype=float)
        for slot, rows in enumerate(pieces):
            self.accumulate(points[rows], None if weights is None else weights[rows], slot=slot)
        return self

    def absorb(self, part: "MomentAccumulator", slot: int) -> "MomentAccumulator":
        """Add every sum of ``part`` (all of its slots) into one slot of ``self``."""
        if part.dim != self.dim or len(part.bases) != len(self.bases):
            raise DimensionMismatchError("accumulators differ in dimension or bases")
        if not 0 <= slot < self.batches:
            raise IndexOutOfRangeError(f"slot must lie in 0..{self.batches - 1}, got {slot}")
        self.count[slot] += part.count.sum()
        self.weight_sum[slot] += part.weight_sum.sum()
        self.s1[slot] += part.s1.sum()
        self.s2[slot] += part.s2.sum()
        self.s4[slot] += part.s4.sum()
        self.mean_sum[slot] += part.mean_sum.sum(axis=0)
        self.cov[slot] += part.cov.sum(axis=0)
        if self.bases:
            self.p2[:, slot] += part.p2.sum(axis=1)
            self.q[:, slot] += part.q.sum(axis=1)
        return self

    def _add(self, slot: int, points: np.ndarray, weights: np.ndarray) -> None:
        r2 = np.einsum("ij,ij->i", points, points)
        wr2 = weights * r2
        self.count[slot] += points.shape[0]
        self.weight_sum[slot] += weights.sum()
        self.s1[slot] += weights @ np.sqrt(r2)
        self.s2[slot] += wr2.sum()
        self.s4[slot] += wr2 @ r2
        self.mean_sum[slot] += weights @ points
        self.cov[slot] += (points * weights[:, None]).T @ points
        for k, basis in enumerate(self.bases):
            z2 = (points @ basis.T) ** 2
            self.p2[k, slot] += weights @ z2
            self.q[k, slot] += (z2 * weights[:, None]).T @ z2


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    """Slot-wise sum of two compatible accumulators (neither input is modified)."""
    if a.dim != b.dim or a.batches != b.batches or len(a.bases) != len(b.bases):
        raise DimensionMismatchError("accumulators differ in dimension, batches or bases")
    if any(not np.array_equal(x, y) for x, y in zip(a.bases, b.bases, strict=True)):
        raise DimensionMismatchError("accumulators use different bases")
    merged = MomentAccumulator(a.dim, bases=a.bases, batches=a.batches)
    for name in ("count", "weight_sum", "s1", "s2", "s4", "mean_sum", "cov", "p2", "q"):
        setattr(merged, name, getattr(a, name) + getattr(b, name))
    merged._cursor = a._cursor
    return merged


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasisMoments:
    """Normalized marginal moments with respect to one orthonormal basis."""

    basis: np.ndarray
    m2: np.ndarray
    mixed: np.ndarray

    @property
    def m4(self) -> np.ndarray:
        """``E<X, eta_i>^4``."""
        return np.diag(self.mixed).copy()

    @property
    def snc(self) -> np.ndarray:
        """``C_ij = E<X,eta_i>^2<X,eta_j>^2 - E<X,eta_i>^2 E<X,eta_j>^2``."""
        return self.mixed - np.outer(self.m2, self.m2)

    @property
    def a_eta(self) -> float:
        """Weak averaged square negative correlation ``sum_{i != j} C_ij``."""
        c = self.snc
        return float(c.sum() - np.trace(c))

    def residual(self, var_x2: float) -> float:
        """``|Var|X|^2 - sum_i (m4_i - m2_i^2) - A(eta)|``."""
        diagonal = float(np.sum(self.m4 - self.m2 * self.m2))
        return abs(var_x2 - diagonal - self.a_eta)


@dataclass(frozen=True, eq=False)
class ConjectureReport:
    """Finalized statistics of one sample of ``X`` with batch-means standard errors."""

    n: int
    dim: int
    body: str
    theta: tuple[float, ...] | None
    samples: int
    weight_sum: float
    e_x2: float
    e_x4: float
    mean_abs: float
    var_x2: float
    var_se: float | None
    lambda2: float
    lambda2_min: float
    variance_ratio: float
    ratio_se: float | None
    sigma: float
    sigma_se: float | None
    thin_shell_ratio: float
    b2: float
    snc_min: float | None
    snc_max: float | None
    a_eta: float | None
    decomposition_residual: float | None
    bases: tuple[BasisMoments, ...] = field(default=(), repr=False)

    @property
    def sigma2(self) -> float:
        """Squared thin-shell width."""
        return self.sigma * self.sigma

    def to_dict(self) -> dict:
        """Plain scalars for reports; basis matrices are summarized."""
        data = asdict(self)
        data.pop("bases")
        data["theta"] = list(self.theta) if self.theta is not None else None
        data["decomposition_residuals"] = [b.residual(self.var_x2) for b in self.bases]
        ratios = [
            borell_ratio(self, i) for i in range(self.dim) if self.bases and self.bases[0].m2[i] > 0
        ]
        data["borell_max"] = max(ratios) if ratios else None
        return data


def _batch_se(values: list[float]) -> float | None:
    if len(values) < 2:
        return None
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _radial(w: float, s1: float, s2: float, s4: float) -> tuple[float, float, float, float]:
    """``(E|X|^2, E|X|^4, Var|X|^2, sigma^2)`` from raw sums."""
    e2 = s2 / w
    e4 = s4 / w
    root = math.sqrt(e2)
    sigma2 = max(2.0 * root * (root - s1 / w), 0.0)
    return e2, e4, max(e4 - e2 * e2, 0.0), sigma2


def _covariance(w: float, mean_sum: np.ndarray, cov: np.ndarray) -> np.ndarray:
    mean = mean_sum / w
    c = cov / w - np.outer(mean, mean)
    return 0.5 * (c + c.T)


def finalize(
    acc: MomentAccumulator,
    *,
    body: str = "",
    n: int | None = None,
    theta: tuple[float, ...] | None = None,
) -> ConjectureReport:
    """Reduce an accumulator to a :class:`ConjectureReport`.

    ``lambda2`` is the top eigenvalue of the mean-centered empirical covariance.
    Standard errors come from the per-slot estimates; the per-slot variance
    ratio uses the Rayleigh quotient along the global top eigenvector.

    Raises:
        InsufficientDataError: fewer than two points or zero total weight.
    """
    total_w = float(acc.weight_sum.sum())
    if acc.total_count < 2 or not total_w > 0.0:
        raise InsufficientDataError(
            f"need at least 2 points with positive weight, got {acc.total_count} (W={total_w})"
        )

    e2, e4, var, sigma2 = _radial(total_w, acc.s1.sum(), acc.s2.sum(), acc.s4.sum())
    covariance = _covariance(total_w, acc.mean_sum.sum(axis=0), acc.cov.sum(axis=0))
    eigenvalues, eigenvectors = jacobi_eigh(covariance)
    top = int(np.argmax(eigenvalues))
    lambda2 = max(float(eigenvalues[top]), 0.0)
    lambda2_min = max(float(eigenvalues.min()), 0.0)
    direction = eigenvectors[:, top]

    var_batches, ratio_batches, sigma_batches = [], [], []
    for slot in range(acc.batches):
        w = float(acc.weight_sum[slot])
        if acc.count[slot] < 2 or not w > 0.0:
            continue
        b_e2, _, b_var, b_sigma2 = _radial(w, acc.s1[slot], acc.s2[slot], acc.s4[slot])
        b_lambda2 = float(direction @ _covariance(w, acc.mean_sum[slot], acc.cov[slot]) @ direction)
        var_batches.append(b_var)
        ratio_batches.append(_safe_ratio(b_var, b_lambda2 * b_e2))
        sigma_batches.append(math.sqrt(b_sigma2))
    if any(math.isinf(r) for r in ratio_batches):
        ratio_batches = []

    bases = tuple(
        BasisMoments(
            basis=basis,
            m2=acc.p2[k].sum(axis=0) / total_w,
            mixed=acc.q[k].sum(axis=0) / total_w,
        )
        for k, basis in enumerate(acc.bases)
    )
    snc_min = snc_max = a_eta = residual = None
    if bases:
        primary = bases[0]
        a_eta = primary.a_eta
        residual = max(b.residual(var) for b in bases)
        if acc.dim > 1:
            off = primary.snc[~np.eye(acc.dim, dtype=bool)]
            snc_min, snc_max = float(off.min()), float(off.max())

    sigma = math.sqrt(sigma2)
    report = ConjectureReport(
        n=n if n is not None else acc.dim,
        dim=acc.dim,
        body=body,
        theta=theta,
        samples=acc.total_count,
        weight_sum=total_w,
        e_x2=e2,
        e_x4=e4,
        mean_abs=float(acc.s1.sum() / total_w),
        var_x2=var,
        var_se=_batch_se(var_batches),
        lambda2=lambda2,
        lambda2_min=lambda2_min,
        variance_ratio=_safe_ratio(var, lambda2 * e2),
        ratio_se=_batch_se(ratio_batches),
        sigma=sigma,
        sigma_se=_batch_se(sigma_batches),
        thin_shell_ratio=_safe_ratio(sigma, math.sqrt(lambda2)),
        b2=_safe_ratio(lambda2, lambda2_min) if lambda2 > 0.0 else 1.0,
        snc_min=snc_min,
        snc_max=snc_max,
        a_eta=a_eta,
        decomposition_residual=residual,
        bases=bases,
    )
    logger.debug(
        f"finalized {body or 'sample'} dim={acc.dim}: Var|X|^2={var:.6g}, "
        f"lambda^2={lambda2:.6g}, ratio={report.variance_ratio:.6g}"
    )
    return report


# ---------------------------------------------------------------------------
# Basis statistics
# ---------------------------------------------------------------------------


def _basis(report: ConjectureReport, basis_index: int) -> BasisMoments:
    if not report.bases:
        raise NoBasisError("report was finalized from an accumulator without a basis")
    if not 0 <= basis_index < len(report.bases):
        raise IndexOutOfRangeError(
            f"basis index must lie in 0..{len(report.bases) - 1}, got {basis_index}"
        )
    return report.bases[basis_index]


def variance_decomposition_check(report: ConjectureReport, basis_index: int | None = None) -> float:
    """Residual of ``Var|X|^2 = sum_i (m4_i - m2_i^2) + A(eta)``; worst basis when no index."""
    if basis_index is None:
        _basis(report, 0)
        return max(b.residual(report.var_x2) for b in report.bases)
    return _basis(report, basis_index).residual(report.var_x2)


def snc_matrix(report: ConjectureReport, basis_index: int = 0) -> np.ndarray:
    """Covariance of the squared coordinates; off-diagonal entries are the SNC differences."""
    return _basis(report, basis_index).snc


def weak_avg_snc(report: ConjectureReport, basis_index: int = 0) -> float:
    """``A(eta) = sum_{i != j} C_ij``."""
    return _basis(report, basis_index).a_eta


def borell_ratio(report: ConjectureReport, i: int, basis_index: int = 0) -> float:
    """``E<X, eta_i>^4 / (E<X, eta_i>^2)^2`` for basis vector ``i`` (0-based).

    Raises:
        DegenerateMarginalError: the marginal second moment vanishes.
    """
    moments = _basis(report, basis_index)
    if not 0 <= i < report.dim:
        raise IndexOutOfRangeError(f"basis vector index must lie in 0..{report.dim - 1}, got {i}")
    m2 = float(moments.m2[i])
    if m2 <= 0.0:
        raise DegenerateMarginalError(f"E<X, eta_{i}>^2 = {m2}")
    return float(moments.mixed[i, i]) / (m2 * m2)


# ---------------------------------------------------------------------------
# Sandwich
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SandwichResult:
    """``sigma^2 <= Var/E <= C1 sigma^2 + C2 (op^2/hs^2) lambda^2`` and its implied constants."""

    sigma2: float
    ratio: float
    op_hs_term: float
    c1_only: float | None
    c2_given_c1: float | None
    c1: float


def sandwich_check(t: LinearMapSpec, report: ConjectureReport, c1: float = 4.0) -> SandwichResult:
    """Check the left inequality on a report of ``TX`` and record the constant envelope.

    ``c1_only`` is the smallest ``C1`` that works with ``C2 = 0``; ``c2_given_c1`` the
    smallest ``C2`` for the supplied ``C1``.

    Raises:
        InsufficientDataError: ``E|TX|^2 = 0``.
        AssertionFailedError: ``sigma^2 > Var|TX|^2 / E|TX|^2``.
    """
    if not report.e_x2 > 0.0:
        raise InsufficientDataError("E|TX|^2 is zero")
    ratio = report.var_x2 / report.e_x2
    sigma2 = report.sigma2
    if sigma2 > ratio * (1.0 + SANDWICH_RTOL) + SANDWICH_RTOL * report.e_x2:
        raise AssertionFailedError([f"sigma^2 = {sigma2:.6g} exceeds Var/E = {ratio:.6g}"])
    op_hs_term = (t.op_norm / t.hs_norm) ** 2 * report.lambda2
    c2 = _safe_ratio(max(ratio - c1 * sigma2, 0.0), op_hs_term)
    return SandwichResult(
        sigma2=sigma2,
        ratio=ratio,
        op_hs_term=op_hs_term,
        c1_only=ratio / sigma2 if sigma2 > 0.0 else None,
        c2_given_c1=c2 if math.isfinite(c2) else None,
        c1=c1,
    )


# ---------------------------------------------------------------------------
# Rotation average
# ---------------------------------------------------------------------------


def rotation_average_bound(singular_values, e_x4: float, var_x2: float) -> float:
    """Upper bound on ``E_U Var|TUX|^2`` for isotropic ``X`` in ``R^n``.

    ``3/(n(n+2)) E|X|^4 sum l_i^4 + Var|X|^2/(n(n+2)) sum_{i != j} l_i^2 l_j^2``.
    """
    lam2 = np.asarray(singular_values, dtype=float) ** 2
    n = lam2.size
    sum4 = float(np.sum(lam2 * lam2))
    cross = float(lam2.sum() ** 2) - sum4
    return (3.0 * e_x4 * sum4 + var_x2 * cross) / (n * (n + 2))


def rotation_average_expectation(singular_values, e_x4: float, var_x2: float) -> float:
    """Exact ``E_U Var|TUX|^2`` for isotropic ``X`` (the bound without its dropped terms)."""
    lam2 = np.asarray(singular_values, dtype=float) ** 2
    n = lam2.size
    sum4 = float(np.sum(lam2 * lam2))
    cross = float(lam2.sum() ** 2) - sum4
    diagonal = 3.0 * e_x4 / (n * (n + 2)) - 1.0
    off_diagonal = var_x2 / (n * (n + 2)) - 2.0 / (n + 2)
    return diagonal * sum4 + off_diagonal * cross


@dataclass(frozen=True)
class RotationCheck:
    """Per-rotation estimates against ``lambda^2 = ||T||_op^2`` and ``E = ||T||_HS^2``."""

    index: int
    e_x2: float
    lambda2: float
    var_x2: float
    hs_ok: bool
    op_ok: bool


@dataclass(frozen=True)
class RotationSummary:
    """Outcome of the Haar rotation-average experiment."""

    n: int
    rotations: int
    samples: int
    op_norm2: float
    hs_norm2: float
    base_e_x4: float
    base_var_x2: float
    mean_variance: float
    mean_variance_se: float
    ratio: float
    bound: float
    expectation: float
    bound_exceeded: bool
    markov_fraction: float
    checks: tuple[RotationCheck, ...]

    def failures(self, ratio_envelope: float | None = None) -> list[str]:
        """Human-readable failed checks (empty when everything holds)."""
        failed = [
            f"rotation {c.index}: E|TUX|^2 = {c.e_x2:.6g} vs ||T||_HS^2 = {self.hs_norm2:.6g}"
            for c in self.checks
            if not c.hs_ok
        ]
        failed += [
            f"rotation {c.index}: lambda^2 = {c.lambda2:.6g} vs ||T||_op^2 = {self.op_norm2:.6g}"
            for c in self.checks
            if not c.op_ok
        ]
        if self.bound_exceeded:
            failed.append(f"mean Var = {self.mean_variance:.6g} exceeds bound {self.bound:.6g}")
        if ratio_envelope is not None and self.ratio > ratio_envelope:
            failed.append(f"variance ratio {self.ratio:.4g} exceeds envelope {ratio_envelope}")
        return failed


BaseSampler = Callable[[np.random.Generator, int], "np.ndarray | tuple"]


def _draw_points(base_sampler: BaseSampler, rng: np.random.Generator, m: int) -> np.ndarray:
    result = base_sampler(rng, m)
    if isinstance(result, tuple):
        points, weights = result
        if weights is not None:
            raise PolyvarError("the rotation experiment needs an unweighted base sampler")
        return points
    return result


def rotation_average_experiment(
    t: LinearMapSpec,
    base_sampler: BaseSampler,
    k: int,
    m: int,
    rng: np.random.Generator,
    batches: int | None = None,
) -> RotationSummary:
    """Estimate ``E_U Var|T U X|^2`` over ``k`` Haar rotations with ``m`` samples each.

    The base sample is first checked for isotropy (every covariance entry within
    0.05 of the identity).

    Raises:
        NotIsotropicError: the base sampler is not isotropic.
    """
    if k < MIN_ROTATIONS:
        raise PolyvarError(f"need at least {MIN_ROTATIONS} rotations, got {k}")
    if m < MIN_ROTATION_SAMPLES:
        raise PolyvarError(f"need at least {MIN_ROTATION_SAMPLES} samples per rotation, got {m}")
    n = t.n

    base = _draw_points(base_sampler, rng, m)
    if base.shape[1] != n:
        raise DimensionMismatchError(f"base sampler yields dimension {base.shape[1]}, T has {n}")
    base_acc = MomentAccumulator(n, batches=batches).accumulate_split(base)
    base_cov = _covariance(
        float(base_acc.weight_sum.sum()), base_acc.mean_sum.sum(axis=0), base_acc.cov.sum(axis=0)
    )
    deviation = float(np.max(np.abs(base_cov - np.eye(n))))
    if deviation > ISOTROPY_TOL:
        raise NotIsotropicError(f"base covariance deviates from identity by {deviation:.3g}")
    base_report = finalize(base_acc, body="base")

    op2 = t.op_norm**2
    hs2 = t.hs_norm**2
    checks = []
    for index in range(k):
        u = haar_orthogonal(n, rng)
        points = _draw_points(base_sampler, rng, m) @ (t.matrix @ u).T
        report = finalize(MomentAccumulator(n, batches=batches).accumulate_split(points))
        checks.append(
            RotationCheck(
                index=index,
                e_x2=report.e_x2,
                lambda2=report.lambda2,
                var_x2=report.var_x2,
                hs_ok=abs(report.e_x2 - hs2) <= HS_IDENTITY_RTOL * hs2,
                op_ok=abs(report.lambda2 - op2) <= OP_IDENTITY_RTOL * op2,
            )
        )

    variances = np.array([c.var_x2 for c in checks])
    mean_variance = float(variances.mean())
    mean_se = float(np.std(variances, ddof=1) / math.sqrt(k))
    bound = rotation_average_bound(t.singular_values, base_report.e_x4, base_report.var_x2)
    summary = RotationSummary(
        n=n,
        rotations=k,
        samples=m,
        op_norm2=op2,
        hs_norm2=hs2,
        base_e_x4=base_report.e_x4,
        base_var_x2=base_report.var_x2,
        mean_variance=mean_variance,
        mean_variance_se=mean_se,
        ratio=mean_variance / (op2 * hs2),
        bound=bound,
        expectation=rotation_average_expectation(
            t.singular_values, base_report.e_x4, base_report.var_x2
        ),
        bound_exceeded=mean_variance - bound > settings.SE_THRESHOLD * mean_se,
        markov_fraction=float(np.mean(variances <= 2.0 * mean_variance)),
        checks=tuple(checks),
    )
    logger.info(
        f"rotation average over {k} rotations: E_U Var = {mean_variance:.6g} "
        f"+- {mean_se:.3g}, ratio to op^2 hs^2 = {summary.ratio:.4g}"
    )
    return summary
