"""Command-line harness.

Subcommands: ``moments``, ``verify-snc``, ``sweep``, ``rotate``, ``oracle-compare``
and ``volume``. Every run writes a JSON (or CSV) report. Exit codes: 0 on
success, 1 on usage or I/O problems, 2 when a mathematical check fails.
"""

import argparse
import hashlib
import logging
import re
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from polyvar.config import set_output_dir, settings
from polyvar.engine import SamplingEngine, SamplingTasksFailedError
from polyvar.errors import (
    AssertionFailedError,
    NotIsotropicError,
    PolyvarError,
    ReportIoError,
)
from polyvar.exactmoments import (
    cross_proj_radial_moments,
    cross_proj_second_moment,
    cross_proj_volume,
    cube_facet_proj_volume,
    cube_proj_condition_number,
    cube_proj_mixed_fourth,
    cube_proj_radial_moments,
    cube_proj_second_moment,
    cube_proj_snc_gap,
    cube_proj_volume,
    simplex_radial_moments,
)
from polyvar.geomcore import (
    LinearMapSpec,
    UnitDirection,
    axis_direction,
    haar_orthogonal,
    hyperplane_frame,
    make_stream,
    normalize_direction,
    random_direction,
    random_frame_basis,
    svd_decompose,
)
from polyvar.log import setup_logging
from polyvar.metrics import (
    DECOMPOSITION_RTOL,
    ConjectureReport,
    MomentAccumulator,
    finalize,
    rotation_average_experiment,
    sandwich_check,
)
from polyvar.oracle import oracle_moments
from polyvar.report import SWEEP_COLUMNS, build_envelope, emit_report
from polyvar.samplers import BODIES, make_body_sampler, with_linear_map

logger = logging.getLogger(__name__)

PROJECTED_BODIES = ("cube-proj", "cross-proj")

# Stream keys: every random consumer gets its own branch of the run seed.
STREAM_THETA = 0
STREAM_BASES = 1
STREAM_SAMPLES = 2
STREAM_ROTATE = 3
STREAM_SNC = 4
STREAM_MAP = 5

DEFAULT_BASES = 10
DEFAULT_ROTATIONS = 16
RATIO_ENVELOPE = 10.0
SPREAD_ENVELOPE = 10.0
ROTATION_ENVELOPE = 3.0
B2_LIMIT = 3.0

SNC_COLUMNS = ("n", "trials", "max_gap", "min_gap", "max_b2")
ROTATION_COLUMNS = ("index", "e_x2", "lambda2", "var_x2", "hs_ok", "op_ok")
COMPARE_COLUMNS = ("name", "closed_form", "oracle", "delta")
VOLUME_COLUMNS = ("name", "value")
MAP_HELP = "spike:c, scalar:c, diag:a,b,... or random:cond"


class UsageError(Exception):
    """Invalid command-line input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class Outcome:
    """What a subcommand produced: report payload, CSV rows and failed checks."""

    results: dict
    rows: list[dict] = field(default_factory=list)
    columns: tuple[str, ...] = SWEEP_COLUMNS
    failures: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def parse_theta(spec: str, n: int | None, rng: np.random.Generator) -> UnitDirection:
    """Resolve ``random``, ``axis:i``, ``coords:a,b,...`` or ``file:path`` into a direction."""
    kind, _, value = spec.partition(":")
    if kind == "random":
        if n is None:
            raise UsageError("--theta random needs --n")
        return random_direction(n, rng)
    if kind == "axis":
        if n is None:
            raise UsageError("--theta axis:i needs --n")
        try:
            i = int(value)
        except ValueError:
            raise UsageError(f"bad axis index {value!r}") from None
        if not 1 <= i <= n:
            raise UsageError(f"axis index must lie in 1..{n}, got {i}")
        return axis_direction(n, i)
    if kind == "coords":
        text = value
    elif kind == "file":
        try:
            text = Path(value).read_text()
        except OSError as e:
            raise UsageError(f"cannot read theta file {value!r}: {e}") from None
    else:
        raise UsageError(f"unknown theta spec {spec!r}")

    try:
        coords = [float(x) for x in re.split(r"[\s,]+", text.strip()) if x]
    except ValueError:
        raise UsageError(f"theta coordinates must be numbers: {text.strip()!r}") from None
    if n is not None and len(coords) != n:
        raise UsageError(f"theta has {len(coords)} coordinates but --n is {n}")
    return normalize_direction(coords)


def parse_map(spec: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Matrix from ``spike:c``, ``scalar:c``, ``diag:a,b,...`` or ``random:cond``."""
    kind, _, value = spec.partition(":")
    try:
        if kind == "spike":
            return np.diag([1.0] * (n - 1) + [float(value)])
        if kind == "scalar":
            return float(value) * np.eye(n)
        if kind == "diag":
            entries = [float(x) for x in value.split(",")]
            if len(entries) != n:
                raise UsageError(f"diag map has {len(entries)} entries for dimension {n}")
            return np.diag(entries)
        if kind == "random":
            spectrum = np.geomspace(1.0, float(value), n)
            return haar_orthogonal(n, rng) @ np.diag(spectrum) @ haar_orthogonal(n, rng)
    except ValueError:
        raise UsageError(f"bad map spec {spec!r}") from None
    raise UsageError(f"unknown map spec {spec!r}")


def theta_hash(theta: UnitDirection | None) -> str | None:
    """First 12 hex digits of the SHA-256 of the direction's float64 coordinates."""
    if theta is None:
        return None
    raw = np.ascontiguousarray(theta.coords, dtype="<f8").tobytes()
    return hashlib.sha256(raw).hexdigest()[:12]


def _bases(dim: int, count: int, seed: int) -> list[np.ndarray]:
    rng = make_stream(seed, STREAM_BASES, dim)
    return [np.eye(dim)] + [haar_orthogonal(dim, rng).T for _ in range(count)]


def _n_range(args) -> list[int]:
    if args.n is not None:
        return [args.n]
    if args.n_min is None or args.n_max is None:
        raise UsageError("give --n or both --n-min and --n-max")
    if args.n_min < 2 or args.n_max < args.n_min:
        raise UsageError(f"invalid dimension range {args.n_min}..{args.n_max}")
    return list(range(args.n_min, args.n_max + 1))


def _require_n(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    return args.n


def _direction_for(args, body: str, n: int) -> UnitDirection | None:
    if body not in PROJECTED_BODIES:
        return None
    return parse_theta(args.theta, n, make_stream(args.seed, STREAM_THETA, n))


def _sample_dim(body: str, n: int) -> int:
    return n - 1 if body in ("cube-proj", "cross-proj", "simplex") else n


def _map_for(args, dim: int) -> LinearMapSpec | None:
    """The ``--map`` matrix on the sampled space, or None when no map was asked for."""
    if args.map is None:
        return None
    return svd_decompose(parse_map(args.map, dim, make_stream(args.seed, STREAM_MAP, dim)))


def _map_summary(args, t: LinearMapSpec) -> dict:
    return {
        "spec": args.map,
        "singular_values": t.singular_values.tolist(),
        "op_norm": t.op_norm,
        "hs_norm": t.hs_norm,
    }


# ---------------------------------------------------------------------------
# Shared checks
# ---------------------------------------------------------------------------


def report_checks(
    report: ConjectureReport, t: LinearMapSpec | None = None
) -> tuple[list[str], dict | None]:
    """Decomposition identity and the distribution-free left sandwich inequality.

    ``report`` describes ``TX`` when ``t`` is given, ``X`` otherwise.
    """
    failures = []
    residual = report.decomposition_residual
    if residual is not None and residual > DECOMPOSITION_RTOL * max(1.0, report.var_x2):
        failures.append(f"n={report.n}: decomposition residual {residual:.3e}")
    if t is None:
        t = svd_decompose(np.eye(report.dim))
    sandwich = None
    if report.e_x2 > 0.0:
        try:
            sandwich = asdict(sandwich_check(t, report))
        except AssertionFailedError as e:
            failures.extend(e.failures)
    return failures, sandwich


def exact_radial(body: str, theta: UnitDirection | None):
    """Closed-form radial moments where one exists for the body."""
    if body == "cube-proj":
        return cube_proj_radial_moments(theta)
    if body == "cross-proj" and theta.n <= settings.ENUMERATION_LIMIT:
        return cross_proj_radial_moments(theta)
    return None


def sweep_row(report: ConjectureReport, theta: UnitDirection | None, mapped: bool = False) -> dict:
    """One CSV row in :data:`SWEEP_COLUMNS` order.

    ``n3_var`` is only filled for the unmapped cross-polytope.
    """
    cross = report.body == "cross-proj" and not mapped
    return {
        "n": report.n,
        "body": report.body,
        "theta_hash": theta_hash(theta),
        "e_x2": report.e_x2,
        "var_x2": report.var_x2,
        "lambda2": report.lambda2,
        "variance_ratio": report.variance_ratio,
        "ratio_se": report.ratio_se,
        "sigma": report.sigma,
        "thin_shell_ratio": report.thin_shell_ratio,
        "b2": report.b2,
        "a_eta": report.a_eta,
        "n3_var": report.n**3 * report.var_x2 if cross else None,
    }


def _sample_report(
    args, body: str, n: int, theta, bases, desc: str, t: LinearMapSpec | None = None
) -> ConjectureReport:
    sampler = make_body_sampler(body, n, theta)
    if t is not None:
        sampler = with_linear_map(sampler, t)
    engine = SamplingEngine(worker_count=args.threads)
    acc = engine.run(
        sampler,
        args.samples,
        args.seed,
        stream_keys=(STREAM_SAMPLES, n),
        bases=bases,
        batches=args.batches,
        pbar_desc=desc,
        show_progress=args.progress,
    )
    return finalize(acc, body=body, n=n, theta=theta.as_tuple() if theta is not None else None)


def _z_check(label: str, estimate: float, se: float | None, exact: float) -> str | None:
    if se is None or se <= 0.0:
        return None
    z = (estimate - exact) / se
    if abs(z) > settings.SE_THRESHOLD:
        return f"{label}: estimate {estimate:.6g} vs exact {exact:.6g} ({z:+.1f} SE)"
    return None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_moments(args) -> Outcome:
    """Sample one body, or its image under ``--map``, and report every statistic."""
    n = _require_n(args)
    theta = _direction_for(args, args.body, n)
    dim = _sample_dim(args.body, n)
    t = _map_for(args, dim)
    report = _sample_report(
        args, args.body, n, theta, _bases(dim, args.bases, args.seed), f"{args.body} n={n}", t
    )
    failures, sandwich = report_checks(report, t)

    results = report.to_dict()
    results["sandwich"] = sandwich
    if t is not None:
        results["map"] = _map_summary(args, t)
        if report.variance_ratio > RATIO_ENVELOPE:
            failures.append(f"variance ratio of TX {report.variance_ratio:.4g} > {RATIO_ENVELOPE}")
    exact = exact_radial(args.body, theta) if t is None else None
    if exact is not None:
        results["exact"] = {"e_x2": exact.e_x2, "e_x4": exact.e_x4, "var_x2": exact.var_x2}
        issue = _z_check("Var|X|^2", report.var_x2, report.var_se, exact.var_x2)
        if issue:
            failures.append(issue)
    row = sweep_row(report, theta, mapped=t is not None)
    return Outcome(results=results, rows=[row], failures=failures)


def cmd_verify_snc(args) -> Outcome:
    """Exact SNC gaps and condition numbers of projected cubes over random triples."""
    rows = []
    for n in _n_range(args):
        if n < 3:
            raise UsageError("verify-snc needs n >= 3 (two directions inside theta^perp)")
        rng = make_stream(args.seed, STREAM_SNC, n)
        gaps = np.empty(args.trials)
        b2 = np.empty(args.trials)
        for trial in range(args.trials):
            theta = random_direction(n, rng)
            basis = random_frame_basis(hyperplane_frame(theta), rng)
            gaps[trial] = cube_proj_snc_gap(theta, basis[0], basis[1])
            b2[trial] = cube_proj_condition_number(theta)
        rows.append(
            {
                "n": n,
                "trials": args.trials,
                "max_gap": float(gaps.max()),
                "min_gap": float(gaps.min()),
                "max_b2": float(b2.max()),
            }
        )
        logger.info(f"n={n}: max SNC gap {gaps.max():.3e}, max B^2 {b2.max():.4f}")

    failures = [
        f"n={row['n']}: SNC gap {row['max_gap']:.3e} > {settings.SNC_TOL}"
        for row in rows
        if row["max_gap"] > settings.SNC_TOL
    ]
    failures += [
        f"n={row['n']}: B^2 {row['max_b2']:.6f} > {B2_LIMIT}"
        for row in rows
        if row["max_b2"] > B2_LIMIT + 1e-9
    ]
    results = {
        "dimensions": rows,
        "max_gap": max(row["max_gap"] for row in rows),
        "max_b2": max(row["max_b2"] for row in rows),
    }
    return Outcome(results=results, rows=rows, columns=SNC_COLUMNS, failures=failures)


def cmd_sweep(args) -> Outcome:
    """One sampled report per dimension, checked against empirical envelopes.

    With ``--map`` each row describes ``TX``; the exact columns and the
    ``n^3 Var|X|^2`` spread then do not apply.
    """
    dims = _n_range(args)
    rows, exact_rows, failures = [], [], []
    for n in tqdm(dims, desc=f"sweep {args.body}", unit="dim", disable=not args.progress):
        theta = _direction_for(args, args.body, n)
        dim = _sample_dim(args.body, n)
        t = _map_for(args, dim)
        report = _sample_report(args, args.body, n, theta, [np.eye(dim)], f"{args.body} n={n}", t)
        row_failures, _ = report_checks(report, t)
        failures.extend(row_failures)
        if report.variance_ratio > RATIO_ENVELOPE:
            failures.append(f"n={n}: variance ratio {report.variance_ratio:.4g} > {RATIO_ENVELOPE}")
        rows.append(sweep_row(report, theta, mapped=t is not None))
        exact = exact_radial(args.body, theta) if t is None else None
        exact_rows.append(
            {
                "n": n,
                "e_x2": exact.e_x2 if exact else None,
                "var_x2": exact.var_x2 if exact else None,
            }
        )
        logger.info(
            f"n={n}: Var|X|^2={report.var_x2:.6g}, ratio={report.variance_ratio:.4f}"
            f" +- {report.ratio_se or 0.0:.4f}"
        )

    n3 = [row["n3_var"] for row in rows if row["n3_var"] is not None]
    if n3 and min(n3) > 0.0 and max(n3) / min(n3) > SPREAD_ENVELOPE:
        failures.append(f"n^3 Var|X|^2 spread {max(n3) / min(n3):.3g} > {SPREAD_ENVELOPE}")
    return Outcome(results={"rows": rows, "exact": exact_rows}, rows=rows, failures=failures)


def cmd_rotate(args) -> Outcome:
    """Haar rotation average of ``Var|T U X|^2`` for an isotropic base body."""
    n = _require_n(args)
    t = svd_decompose(parse_map(args.map, n, make_stream(args.seed, STREAM_MAP)))
    draw = make_body_sampler(args.body, n).draw
    try:
        summary = rotation_average_experiment(
            t, draw, args.trials, args.samples, make_stream(args.seed, STREAM_ROTATE), args.batches
        )
    except NotIsotropicError as e:
        return Outcome(results={"isotropic": False}, failures=[str(e)])

    failures = summary.failures(ROTATION_ENVELOPE)
    rng = make_stream(args.seed, STREAM_ROTATE, 1)
    points, _ = draw(rng, args.samples)
    image = finalize(MomentAccumulator(n, batches=args.batches).accumulate_split(t.apply(points)))
    try:
        sandwich = asdict(sandwich_check(t, image))
    except AssertionFailedError as e:
        failures.extend(e.failures)
        sandwich = None

    results = asdict(summary)
    results["singular_values"] = t.singular_values.tolist()
    results["sandwich"] = sandwich
    rows = [asdict(check) for check in summary.checks]
    return Outcome(results=results, rows=rows, columns=ROTATION_COLUMNS, failures=failures)


def cmd_oracle_compare(args) -> Outcome:
    """Closed forms against the hull oracle, plus an optional Monte-Carlo check."""
    n = _require_n(args)
    theta = parse_theta(args.theta, n, make_stream(args.seed, STREAM_THETA, n))
    frame = hyperplane_frame(theta)
    om = oracle_moments(args.body, theta, frame)
    axes = np.eye(frame.dim)

    pairs: list[tuple[str, float, float]] = []
    if args.body == "cube-proj":
        pairs.append(("volume", cube_proj_volume(theta), om.volume))
        for k in range(frame.dim):
            pairs.append(
                (
                    f"second_moment[{k}]",
                    cube_proj_second_moment(theta, frame.basis[k]),
                    om.directional_second(axes[k]),
                )
            )
        if frame.dim >= 2:
            pairs.append(
                (
                    "mixed_fourth[0,1]",
                    cube_proj_mixed_fourth(theta, frame.basis[0], frame.basis[1]),
                    om.mixed_fourth(axes[0], axes[1]),
                )
            )
            pairs.append(("b2", cube_proj_condition_number(theta), om.b2))
    else:
        pairs.append(("volume", cross_proj_volume(theta), om.volume))
        m2, _ = simplex_radial_moments(n)
        pairs.append(("e_x2_identity", float(m2) - cross_proj_second_moment(theta), om.e_x2))
    exact = exact_radial(args.body, theta)
    pairs.append(("e_x2", exact.e_x2, om.e_x2))
    pairs.append(("var_x2", exact.var_x2, om.var_x2))

    rows = [
        {"name": name, "closed_form": closed, "oracle": oracle, "delta": abs(closed - oracle)}
        for name, closed, oracle in pairs
    ]
    failures = [
        f"{row['name']}: |closed form - oracle| = {row['delta']:.3e}"
        for row in rows
        if row["delta"] > settings.ORACLE_TOL * max(1.0, abs(row["oracle"]))
    ]
    results = {"comparisons": rows, "oracle_volume": om.volume, "theta": list(theta.as_tuple())}

    if args.samples:
        report = _sample_report(args, args.body, n, theta, None, f"{args.body} n={n}")
        results["monte_carlo"] = {
            "samples": report.samples,
            "var_x2": report.var_x2,
            "var_se": report.var_se,
            "e_x2": report.e_x2,
        }
        issue = _z_check("Monte-Carlo Var|X|^2", report.var_x2, report.var_se, om.var_x2)
        if issue:
            failures.append(issue)
    return Outcome(results=results, rows=rows, columns=COMPARE_COLUMNS, failures=failures)


def cmd_volume(args) -> Outcome:
    """Closed-form projected volumes, checked against the hull when it is small enough."""
    n = _require_n(args)
    theta = parse_theta(args.theta, n, make_stream(args.seed, STREAM_THETA, n))
    rows = []
    if args.body == "cube-proj":
        volume = cube_proj_volume(theta)
        rows += [
            {"name": f"facet[{i}]", "value": cube_facet_proj_volume(theta, i)}
            for i in range(1, n + 1)
        ]
    else:
        volume = cross_proj_volume(theta)
    rows.insert(0, {"name": "volume", "value": volume})

    failures = []
    results = {"volume": volume, "theta": list(theta.as_tuple()), "oracle_volume": None}
    if n - 1 <= settings.ORACLE_MAX_HULL_DIM:
        hull_volume = oracle_moments(args.body, theta, hyperplane_frame(theta)).volume
        results["oracle_volume"] = hull_volume
        rows.append({"name": "oracle_volume", "value": hull_volume})
        if abs(volume - hull_volume) > settings.ORACLE_TOL * max(1.0, hull_volume):
            failures.append(f"volume {volume:.12g} vs hull {hull_volume:.12g}")
    return Outcome(results=results, rows=rows, columns=VOLUME_COLUMNS, failures=failures)


# ---------------------------------------------------------------------------
# Parser and entry points
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, fmt: str = "json") -> None:
    p.add_argument("--seed", type=int, default=settings.SEED, help="64-bit unsigned run seed")
    p.add_argument("--out", default=None, help="report path ('-' or omitted: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--threads", type=int, default=settings.MAX_WORKERS)
    p.add_argument("--batches", type=int, default=settings.BATCHES)
    p.add_argument("--no-progress", dest="progress", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    parser = _Parser(prog="polyvar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="sample one body and report all statistics")
    p.add_argument("--body", choices=BODIES, default="cube-proj")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", default="random")
    p.add_argument("--samples", type=int, default=settings.DEFAULT_SAMPLES)
    p.add_argument("--bases", type=int, default=DEFAULT_BASES, help="random bases besides e_i")
    p.add_argument("--map", default=None, help=MAP_HELP + " applied to each sample")
    _add_common(p)
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser("verify-snc", help="exact SNC gaps of projected cubes")
    p.add_argument("--n", type=int)
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--trials", type=int, default=1000)
    _add_common(p)
    p.set_defaults(handler=cmd_verify_snc)

    p = sub.add_parser("sweep", help="one sampled report per dimension")
    p.add_argument("--body", choices=BODIES, default="cross-proj")
    p.add_argument("--n", type=int)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--theta", default="random")
    p.add_argument("--samples", type=int, default=settings.DEFAULT_SAMPLES)
    p.add_argument("--map", default=None, help=MAP_HELP + " applied to each sample")
    p.add_argument("--out-dir", default=None, help="directory for the default sweep file")
    _add_common(p, fmt="csv")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("rotate", help="Haar rotation average of Var|TUX|^2")
    p.add_argument("--body", choices=("cube", "gauss"), default="cube")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--map", default="spike:10", help=MAP_HELP)
    p.add_argument("--trials", type=int, default=DEFAULT_ROTATIONS)
    p.add_argument("--samples", type=int, default=settings.DEFAULT_SAMPLES)
    _add_common(p)
    p.set_defaults(handler=cmd_rotate)

    p = sub.add_parser("oracle-compare", help="closed forms against the hull oracle")
    p.add_argument("--body", choices=PROJECTED_BODIES, default="cube-proj")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", default="random")
    p.add_argument("--samples", type=int, default=0, help="Monte-Carlo samples (0: skip)")
    _add_common(p)
    p.set_defaults(handler=cmd_oracle_compare)

    p = sub.add_parser("volume", help="closed-form projected volumes")
    p.add_argument("--body", choices=PROJECTED_BODIES, default="cube-proj")
    p.add_argument("--n", type=int)
    p.add_argument("--theta", default="random")
    _add_common(p)
    p.set_defaults(handler=cmd_volume)
    return parser


def _validate(args) -> None:
    if not 0 <= args.seed < 2**64:
        raise UsageError(f"--seed must be a 64-bit unsigned integer, got {args.seed}")
    if getattr(args, "samples", 2) < 2 and args.command != "oracle-compare":
        raise UsageError(f"--samples must be >= 2, got {args.samples}")
    if args.command == "oracle-compare" and args.samples == 1:
        raise UsageError("--samples must be 0 or >= 2")
    if args.threads < 1 or args.batches < 1:
        raise UsageError("--threads and --batches must be positive")
    if getattr(args, "trials", 1) < 1:
        raise UsageError("--trials must be positive")
    if getattr(args, "bases", 0) < 0:
        raise UsageError("--bases must be >= 0")


def _report_path(args) -> str | None:
    if args.out is not None or args.command != "sweep":
        return args.out
    set_output_dir(args.out_dir)
    n_label = f"{args.n}" if args.n is not None else f"{args.n_min}-{args.n_max}"
    return str(settings.sweep_dir / f"sweep_{args.body}_n{n_label}_seed{args.seed}.{args.format}")


def _config_dict(args) -> dict:
    """Options that shape the results. Thread count is left out: it never changes a byte."""
    config = {
        key: value
        for key, value in vars(args).items()
        if key not in ("handler", "progress", "verbose", "out", "out_dir", "threads")
    }
    config["enumeration_limit"] = settings.ENUMERATION_LIMIT
    config["se_threshold"] = settings.SE_THRESHOLD
    return config


def run(argv: list[str] | None = None) -> int:
    """Execute one subcommand and return the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        setup_logging(args.verbose)
        _validate(args)
        outcome = args.handler(args)
        envelope = build_envelope(outcome.results, _config_dict(args), args.seed, argv)
        emit_report(
            envelope, args.format, _report_path(args), rows=outcome.rows, columns=outcome.columns
        )
    except UsageError as e:
        print(f"polyvar: error: {e}", file=sys.stderr)
        return 1
    except AssertionFailedError as e:
        logger.error(str(e))
        return 2
    except (PolyvarError, ReportIoError, SamplingTasksFailedError) as e:
        print(f"polyvar: error: {e}", file=sys.stderr)
        return 1

    if outcome.failures:
        for failure in outcome.failures:
            logger.error(f"Check failed: {failure}")
        return 2
    logger.info(f"{args.command}: all checks passed")
    return 0


def main() -> None:
    """Console entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
