"""Tests for cli.py: argument parsing, subcommands and exit codes."""

import math
import re

import numpy as np
import orjson
import polars as pl
import pytest

from polyvar import cli
from polyvar.cli import UsageError, parse_map, parse_theta, run, theta_hash
from polyvar.config import settings
from polyvar.geomcore import make_stream, normalize_direction, svd_decompose
from polyvar.report import SWEEP_COLUMNS

QUIET = ["--no-progress"]


def read_json(path) -> dict:
    return orjson.loads(path.read_bytes())


class TestParseTheta:
    def test_coords(self):
        theta = parse_theta("coords:3,4", None, make_stream(0))
        assert theta.as_tuple() == pytest.approx((0.6, 0.8))

    def test_coords_with_whitespace(self):
        theta = parse_theta("coords: 1, 1 ,1", 3, make_stream(0))
        assert theta.l1 == pytest.approx(math.sqrt(3.0))

    def test_axis(self):
        assert parse_theta("axis:2", 3, make_stream(0)).as_tuple() == (0.0, 1.0, 0.0)

    def test_random_is_seeded(self):
        a = parse_theta("random", 6, make_stream(1, 0, 6))
        b = parse_theta("random", 6, make_stream(1, 0, 6))
        assert a.as_tuple() == b.as_tuple()
        assert a.n == 6

    def test_file(self, tmp_path):
        path = tmp_path / "theta.txt"
        path.write_text("1.0 2.0\n2.0\n")
        theta = parse_theta(f"file:{path}", 3, make_stream(0))
        assert theta.as_tuple() == pytest.approx((1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0))

    @pytest.mark.parametrize(
        ("spec", "n"),
        [
            ("random", None),
            ("axis:4", 3),
            ("axis:x", 3),
            ("coords:1,2", 3),
            ("coords:a,b", None),
            ("file:/nonexistent/theta.txt", 2),
            ("sphere", 3),
        ],
    )
    def test_usage_errors(self, spec, n):
        with pytest.raises(UsageError):
            parse_theta(spec, n, make_stream(0))


class TestParseMap:
    def test_spike(self):
        np.testing.assert_array_equal(parse_map("spike:10", 3, make_stream(0)), np.diag([1, 1, 10]))

    def test_scalar(self):
        np.testing.assert_array_equal(parse_map("scalar:2", 4, make_stream(0)), 2.0 * np.eye(4))

    def test_diag(self):
        matrix = parse_map("diag:1,2,3", 3, make_stream(0))
        np.testing.assert_array_equal(matrix, np.diag([1, 2, 3]))

    def test_random_condition(self):
        t = svd_decompose(parse_map("random:100", 5, make_stream(0)))
        assert t.singular_values.max() / t.singular_values.min() == pytest.approx(100.0, rel=1e-9)

    @pytest.mark.parametrize("spec", ["diag:1,2", "spike:x", "rotation:3"])
    def test_usage_errors(self, spec):
        with pytest.raises(UsageError):
            parse_map(spec, 3, make_stream(0))


class TestThetaHash:
    def test_stable_and_short(self):
        theta = normalize_direction([1.0, 2.0, 2.0])
        digest = theta_hash(theta)
        assert len(digest) == 12
        assert digest == theta_hash(normalize_direction([1.0, 2.0, 2.0]))
        assert digest != theta_hash(normalize_direction([2.0, 1.0, 2.0]))

    def test_none(self):
        assert theta_hash(None) is None


class TestSubcommands:
    def test_volume(self, tmp_path):
        out = tmp_path / "volume.json"
        rc = run(["volume", "--n", "3", "--theta", "coords:1,1,1", "--out", str(out), *QUIET])
        assert rc == 0
        data = read_json(out)
        assert data["results"]["volume"] == pytest.approx(4.0 * math.sqrt(3.0), rel=1e-14)
        assert data["results"]["oracle_volume"] == pytest.approx(4.0 * math.sqrt(3.0), rel=1e-9)
        assert data["meta"]["argv"][0] == "volume"

    def test_volume_csv(self, tmp_path):
        out = tmp_path / "volume.csv"
        args = ["volume", "--body", "cross-proj", "--n", "3", "--theta", "axis:3"]
        assert run([*args, "--format", "csv", "--out", str(out), *QUIET]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "name,value"
        assert lines[1].startswith("volume,2.0")

    def test_oracle_compare_cross(self, tmp_path):
        out = tmp_path / "compare.json"
        args = ["oracle-compare", "--body", "cross-proj", "--n", "3"]
        rc = run([*args, "--theta", "coords:0.6,0.64,0.48", "--out", str(out), *QUIET])
        assert rc == 0
        comparisons = read_json(out)["results"]["comparisons"]
        assert {row["name"] for row in comparisons} >= {"volume", "e_x2", "var_x2"}
        assert max(row["delta"] for row in comparisons) <= 1e-9

    def test_oracle_compare_cube_with_samples(self, tmp_path):
        out = tmp_path / "compare.json"
        args = ["oracle-compare", "--n", "4", "--seed", "3", "--samples", "64000"]
        assert run([*args, "--threads", "2", "--out", str(out), *QUIET]) == 0
        assert read_json(out)["results"]["monte_carlo"]["samples"] == 64000

    def test_verify_snc(self, tmp_path):
        out = tmp_path / "snc.json"
        assert run(["verify-snc", "--n", "10", "--trials", "50", "--out", str(out), *QUIET]) == 0
        results = read_json(out)["results"]
        assert results["max_gap"] <= 1e-12
        assert 1.0 <= results["max_b2"] <= 3.0

    def test_moments(self, tmp_path):
        out = tmp_path / "moments.json"
        args = ["moments", "--n", "3", "--samples", "20000", "--seed", "11", "--threads", "2"]
        assert run([*args, "--out", str(out), *QUIET]) == 0
        results = read_json(out)["results"]
        assert results["samples"] == 20000
        assert results["dim"] == 2
        assert "exact" in results
        assert results["sandwich"]["sigma2"] <= results["sandwich"]["ratio"]
        assert len(results["decomposition_residuals"]) == 11

    def test_moments_to_stdout(self, capsysbinary):
        args = ["moments", "--body", "gauss", "--n", "2", "--samples", "1000", "--bases", "0"]
        assert run([*args, *QUIET]) == 0
        data = orjson.loads(capsysbinary.readouterr().out)
        assert data["results"]["body"] == "gauss"

    @pytest.mark.slow
    def test_rotate(self, tmp_path):
        out = tmp_path / "rotate.json"
        args = ["rotate", "--body", "gauss", "--n", "4", "--map", "scalar:2", "--trials", "8"]
        assert run([*args, "--samples", "100000", "--out", str(out), *QUIET]) == 0
        results = read_json(out)["results"]
        assert results["hs_norm2"] == pytest.approx(16.0)
        assert len(results["checks"]) == 8


class TestSweep:
    ARGS = ["sweep", "--body", "cross-proj", "--n-min", "3", "--n-max", "4", "--samples", "20000"]

    def test_byte_identical_across_runs_and_threads(self, tmp_path):
        paths = [tmp_path / f"sweep{k}.csv" for k in range(3)]
        for path, threads in zip(paths, ["1", "1", "3"], strict=True):
            assert run([*self.ARGS, "--threads", threads, "--out", str(path), *QUIET]) == 0
        payloads = [path.read_bytes() for path in paths]
        assert payloads[0] == payloads[1] == payloads[2]
        lines = payloads[0].decode().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 3

    def test_default_path_under_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.setattr(settings, "output_dir_override", None)
        assert run([*self.ARGS, "--seed", "5", "--out-dir", str(tmp_path), *QUIET]) == 0
        assert (tmp_path / "sweeps" / "sweep_cross-proj_n3-4_seed5.csv").exists()


    def test_mapped_rows_leave_n3_var_empty(self, tmp_path):
        out = tmp_path / "mapped.csv"
        assert run([*self.ARGS, "--map", "scalar:3", "--out", str(out), *QUIET]) == 0
        frame = pl.read_csv(out)
        assert frame.height == 2
        assert frame["n3_var"].null_count() == 2

    @pytest.mark.slow
    def test_cross_polytope_envelopes_through_weighted_range(self, tmp_path):
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--body", "cross-proj", "--n-min", "5", "--n-max", "40"]
        assert run([*args, "--samples", "200000", "--seed", "1", "--out", str(out), *QUIET]) == 0
        frame = pl.read_csv(out)
        assert frame["n"].to_list() == list(range(5, 41))
        assert frame["variance_ratio"].max() <= 10.0
        n3 = frame["n3_var"]
        assert n3.min() > 0.0
        assert n3.max() / n3.min() <= 10.0


class TestMappedMoments:
    """``moments --map`` reports on TX for X uniform on a projected body."""

    ARGS = ["moments", "--n", "3", "--samples", "20000", "--seed", "11", "--bases", "0"]

    def test_scalar_map_scales_moments(self, tmp_path):
        plain, scaled = tmp_path / "plain.json", tmp_path / "scaled.json"
        assert run([*self.ARGS, "--out", str(plain), *QUIET]) == 0
        assert run([*self.ARGS, "--map", "scalar:2", "--out", str(scaled), *QUIET]) == 0
        x, tx = read_json(plain)["results"], read_json(scaled)["results"]
        assert tx["e_x2"] == pytest.approx(4.0 * x["e_x2"], rel=1e-12)
        assert tx["var_x2"] == pytest.approx(16.0 * x["var_x2"], rel=1e-9)
        assert tx["variance_ratio"] == pytest.approx(x["variance_ratio"], rel=1e-9)
        assert tx["map"]["singular_values"] == pytest.approx([2.0, 2.0])
        assert "exact" in x
        assert "exact" not in tx

    def test_spike_map_on_projected_cube(self, tmp_path):
        out = tmp_path / "spike.json"
        args = ["moments", "--n", "6", "--samples", "40000", "--map", "spike:10", "--bases", "2"]
        assert run([*args, "--out", str(out), *QUIET]) == 0
        results = read_json(out)["results"]
        assert results["dim"] == 5
        assert results["map"]["op_norm"] == pytest.approx(10.0)
        assert results["map"]["hs_norm"] == pytest.approx(math.sqrt(104.0))
        assert results["sandwich"]["sigma2"] <= results["sandwich"]["ratio"]
        assert results["sandwich"]["op_hs_term"] > 0.0
        assert results["variance_ratio"] <= 10.0


class TestReportDeterminism:
    TIMESTAMP = re.compile(rb'"timestamp_utc": "[^"]*"')

    def test_thread_default_does_not_change_bytes(self, tmp_path, monkeypatch):
        args = ["moments", "--n", "3", "--samples", "20000", "--bases", "1", *QUIET]
        payloads = []
        for threads in (1, 3):
            monkeypatch.setattr(settings, "MAX_WORKERS", threads)
            out = tmp_path / f"threads{threads}.json"
            assert run([*args, "--out", str(out)]) == 0
            payloads.append(self.TIMESTAMP.sub(b"", out.read_bytes()))
        assert payloads[0] == payloads[1]
        assert "threads" not in orjson.loads(out.read_bytes())["config"]


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["frobnicate"],
            ["moments", "--samples", "100"],
            ["moments", "--n", "3", "--theta", "axis:5"],
            ["volume", "--n", "3", "--seed", "-1"],
            ["moments", "--n", "3", "--samples", "1"],
            ["sweep", "--n-min", "5", "--n-max", "3"],
            ["verify-snc", "--n", "2"],
            ["moments", "--n", "3", "--map", "diag:1,2,3"],
            ["moments", "--n", "3", "--map", "spike:0"],
        ],
    )
    def test_usage_errors_exit_one(self, argv):
        assert run([*argv, *QUIET]) == 1

    def test_failed_check_exits_two(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "cube_proj_snc_gap", lambda theta, eta1, eta2: 1.0)
        out = tmp_path / "snc.json"
        assert run(["verify-snc", "--n", "4", "--trials", "5", "--out", str(out), *QUIET]) == 2
        assert read_json(out)["results"]["max_gap"] == 1.0

    def test_unwritable_report_exits_one(self, tmp_path):
        blocker = tmp_path / "file.txt"
        blocker.write_text("not a directory")
        out = blocker / "volume.json"
        assert run(["volume", "--n", "3", "--theta", "axis:1", "--out", str(out), *QUIET]) == 1
