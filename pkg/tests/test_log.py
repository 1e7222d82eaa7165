"""Tests for log.py."""

import logging
import re

import pytest

from polyvar.log import TqdmLoggingHandler, setup_logging


@pytest.fixture
def restore_root():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield root
    root.handlers = handlers
    root.setLevel(level)


class TestSetupLogging:
    def test_single_handler_on_stderr(self, restore_root, capsys):
        setup_logging()
        setup_logging()
        tqdm_handlers = [h for h in restore_root.handlers if isinstance(h, TqdmLoggingHandler)]
        assert len(tqdm_handlers) == 1

        logging.getLogger("polyvar.test").info("hello from the engine")
        captured = capsys.readouterr()
        assert captured.out == ""
        assert " - polyvar.test - INFO - hello from the engine" in captured.err
        assert re.match(r"\d{4}-\d{2}-\d{2} \d{2}:\d{2}:\d{2} - ", captured.err)

    def test_verbose_enables_debug(self, restore_root, capsys):
        setup_logging(verbose=True)
        assert restore_root.level == logging.DEBUG
        logging.getLogger("polyvar.test").debug("detail")
        assert "detail" in capsys.readouterr().err

    def test_default_hides_debug(self, restore_root, capsys):
        setup_logging()
        logging.getLogger("polyvar.test").debug("detail")
        assert "detail" not in capsys.readouterr().err
