"""Sampler throughput benchmark.

Runs each body sampler through ``SamplingEngine`` and records points per second:

  * thread scaling on ``cube-proj`` (1, 2, 4, 8 workers, capped at the core count)
  * one row per body at the default worker count
  * the weighted cross-polytope path beyond the enumeration limit
  * the one-off cost of the n = 20 tilted-sign table

Writes ``results.json`` and ``BENCHMARK.md`` into ``--out-dir``.
"""

from __future__ import annotations

import argparse
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import orjson

_REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_REPO_ROOT / "src"))

from polyvar.engine import SamplingEngine  # noqa: E402
from polyvar.geomcore import make_stream, random_direction  # noqa: E402
from polyvar.samplers import _sign_table, make_body_sampler  # noqa: E402

SCALING_WORKERS = (1, 2, 4, 8)
QUICK_SAMPLES = 100_000


@dataclass(frozen=True)
class Case:
    """One benchmark configuration."""

    label: str
    body: str
    n: int
    workers: int


@dataclass(frozen=True)
class Timing:
    """Measured outcome of one :class:`Case`."""

    label: str
    body: str
    n: int
    workers: int
    weighted: bool
    samples: int
    wall_s: float
    points_per_s: int


def plan_cases(n: int, weighted_n: int, workers: int, quick: bool) -> list[Case]:
    """Scaling cases first, then one case per body, then the weighted path."""
    cores = os.cpu_count() or 1
    grid = [w for w in SCALING_WORKERS[: 2 if quick else None] if w <= cores] or [1]
    cases = [Case(f"cube-proj n={n} x{w}", "cube-proj", n, w) for w in grid]
    cases += [Case(f"{body} n={n}", body, n, workers) for body in ("cross-proj", "simplex")]
    cases += [Case(f"{body} n={n}", body, n, workers) for body in ("cube", "gauss")]
    cases.append(Case(f"cross-proj n={weighted_n} weighted", "cross-proj", weighted_n, workers))
    return cases


def time_case(case: Case, samples: int, seed: int) -> Timing:
    """Build the sampler outside the timer, then time one engine run."""
    theta = None
    if case.body.endswith("-proj"):
        theta = random_direction(case.n, make_stream(seed, 0, case.n))
    sampler = make_body_sampler(case.body, case.n, theta)
    engine = SamplingEngine(worker_count=case.workers)

    start = time.perf_counter()
    acc = engine.run(sampler, samples, seed, stream_keys=(2, case.n), show_progress=False)
    wall = time.perf_counter() - start
    return Timing(
        label=case.label,
        body=case.body,
        n=case.n,
        workers=case.workers,
        weighted=sampler.weighted,
        samples=acc.total_count,
        wall_s=round(wall, 3),
        points_per_s=int(samples / wall) if wall > 0 else 0,
    )


def time_sign_table(n: int, seed: int) -> float:
    """Seconds for a cold build of the ``2^n`` sign table."""
    _sign_table.cache_clear()
    coords = random_direction(n, make_stream(seed, 0, n)).as_tuple()
    start = time.perf_counter()
    _sign_table(coords)
    return time.perf_counter() - start


def machine_info() -> dict:
    """Host and library versions recorded next to the timings."""
    return {
        "cpu": platform.processor() or platform.machine(),
        "cores": os.cpu_count(),
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def to_markdown(machine: dict, timings: list[Timing], table_s: float) -> str:
    """Results table in Markdown."""
    header = [
        "# polyvar sampler throughput",
        "",
        f"{machine['cpu']}, {machine['cores']} cores, {machine['platform']}, "
        f"Python {machine['python']}, numpy {machine['numpy']}",
        "",
        "| Case | Workers | Weighted | Samples | Wall (s) | Points/s |",
        "|------|--------:|:--------:|--------:|---------:|---------:|",
    ]
    body = [
        f"| {t.label} | {t.workers} | {'yes' if t.weighted else ''} | {t.samples:,} | "
        f"{t.wall_s:.2f} | {t.points_per_s:,} |"
        for t in timings
    ]
    footer = ["", f"Cold n=20 sign table: {table_s:.3f} s, cached per direction afterwards."]
    return "\n".join(header + body + footer) + "\n"


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--quick", action="store_true", help=f"{QUICK_SAMPLES:,} points per case")
    parser.add_argument("--n", type=int, default=10, help="dimension of the exact cases")
    parser.add_argument("--weighted-n", type=int, default=40, help="dimension of the weighted case")
    parser.add_argument("--samples", type=int, default=2_000_000, help="points per case")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=min(8, os.cpu_count() or 1))
    parser.add_argument("--out-dir", type=Path, default=Path("benchmark_results"))
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> None:
    """Run every case and write the results."""
    args = parse_args(argv)
    samples = QUICK_SAMPLES if args.quick else args.samples
    args.out_dir.mkdir(parents=True, exist_ok=True)

    timings = []
    for case in plan_cases(args.n, args.weighted_n, args.workers, args.quick):
        timing = time_case(case, samples, args.seed)
        print(f"{case.label:<36} {timing.wall_s:>8.2f}s {timing.points_per_s:>14,} pt/s")
        timings.append(timing)
    table_s = time_sign_table(20, args.seed)

    machine = machine_info()
    payload = {
        "machine": machine,
        "timings": [asdict(t) for t in timings],
        "sign_table_n20_s": table_s,
    }
    (args.out_dir / "results.json").write_bytes(orjson.dumps(payload, option=orjson.OPT_INDENT_2))
    (args.out_dir / "BENCHMARK.md").write_text(to_markdown(machine, timings, table_s))
    print(f"results in {args.out_dir}/")


if __name__ == "__main__":
    main()
