"""Tests for report.py: JSON envelope, CSV layout and atomic writes."""

import math

import numpy as np
import orjson
import pytest

from polyvar import __version__
from polyvar.errors import NotFiniteError, ReportIoError
from polyvar.report import (
    SWEEP_COLUMNS,
    build_envelope,
    emit_report,
    ensure_finite,
    render_csv,
    render_json,
)


@pytest.fixture
def envelope():
    return build_envelope(
        {"var_x2": 0.25, "lambda2": np.float64(1.5), "m2": np.array([0.5, 2.0])},
        {"n": 3, "samples": 1000},
        seed=7,
        argv=["moments", "--n", "3"],
    )


class TestEnvelope:
    def test_meta_fields(self, envelope):
        assert set(envelope) == {"meta", "config", "results"}
        assert set(envelope["meta"]) == {"version", "seed", "timestamp_utc", "argv"}
        assert envelope["meta"]["version"] == __version__
        assert envelope["meta"]["seed"] == 7
        assert envelope["meta"]["argv"] == ["moments", "--n", "3"]


class TestJson:
    def test_parses_back(self, envelope):
        data = orjson.loads(render_json(envelope))
        assert data["results"] == {"lambda2": 1.5, "m2": [0.5, 2.0], "var_x2": 0.25}
        assert data["config"] == {"n": 3, "samples": 1000}

    def test_keys_are_sorted(self, envelope):
        text = render_json(envelope).decode()
        assert text.index('"config"') < text.index('"meta"') < text.index('"results"')
        assert text.endswith("\n")

    @pytest.mark.parametrize("bad", [math.nan, math.inf, np.float32("nan")])
    def test_non_finite_is_rejected(self, bad):
        with pytest.raises(NotFiniteError, match="results.inner"):
            render_json(build_envelope({"inner": [1.0, bad]}, {}, seed=0, argv=[]))

    def test_ensure_finite_walks_arrays(self):
        ensure_finite({"a": np.ones(3), "b": (1, 2.5), "c": None, "d": "text"})
        with pytest.raises(NotFiniteError, match=r"x\.a"):
            ensure_finite({"a": np.array([1.0, np.inf])}, "x")


class TestCsv:
    def test_header_is_fixed(self):
        text = render_csv([], SWEEP_COLUMNS).decode()
        assert text == ",".join(SWEEP_COLUMNS) + "\n"

    def test_rows_follow_header_order(self):
        rows = [
            {"body": "cube-proj", "n": 3, "e_x2": 0.5, "extra": "ignored"},
            {"body": "cross-proj", "n": 4, "e_x2": 0.25, "a_eta": -0.125},
        ]
        lines = render_csv(rows, ("n", "body", "e_x2", "a_eta")).decode().split("\n")
        assert lines[0] == "n,body,e_x2,a_eta"
        assert lines[1] == "3,cube-proj,0.5,"
        assert lines[2] == "4,cross-proj,0.25,-0.125"
        assert lines[3] == ""

    def test_non_finite_is_rejected(self):
        with pytest.raises(NotFiniteError):
            render_csv([{"n": 3, "e_x2": math.nan}], ("n", "e_x2"))


class TestEmitReport:
    def test_writes_file_atomically(self, tmp_path, envelope):
        path = tmp_path / "out" / "report.json"
        emit_report(envelope, "json", path)
        assert orjson.loads(path.read_bytes())["meta"]["seed"] == 7
        assert list(path.parent.glob("*.tmp")) == []

    def test_overwrites_existing_file(self, tmp_path, envelope):
        path = tmp_path / "report.csv"
        path.write_text("stale\n")
        emit_report(envelope, "csv", path, rows=[{"n": 2}], columns=("n",))
        assert path.read_text() == "n\n2\n"

    @pytest.mark.parametrize("target", [None, "-"])
    def test_stdout(self, capsysbinary, envelope, target):
        emit_report(envelope, "json", target)
        out = capsysbinary.readouterr().out
        assert orjson.loads(out)["results"]["var_x2"] == 0.25

    def test_unwritable_destination(self, tmp_path, envelope):
        blocker = tmp_path / "file.txt"
        blocker.write_text("not a directory")
        with pytest.raises(ReportIoError):
            emit_report(envelope, "json", blocker / "report.json")

    def test_unknown_format(self, tmp_path, envelope):
        with pytest.raises(ValueError, match="unknown report format"):
            emit_report(envelope, "xml", tmp_path / "report.xml")
