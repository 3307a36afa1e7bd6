import logging

import pytest

from config import settings
from logger import ColoredFormatter, set_global_level, setup_logger


def test_setup_logger_is_idempotent(tmp_path):
    path = tmp_path / "logs" / "engine.log"
    first = setup_logger("engine.test.idempotent", level="info", log_file=str(path))
    second = setup_logger("engine.test.idempotent", log_file=str(path))
    assert first is second
    assert len(first.handlers) == 2
    first.info("solved degree 3")
    for handler in first.handlers:
        handler.flush()
    assert "solved degree 3" in path.read_text(encoding="utf-8")


def test_empty_log_file_disables_file_handler():
    logger = setup_logger("engine.test.console_only", log_file="")
    assert [type(h) for h in logger.handlers] == [logging.StreamHandler]


def test_set_global_level():
    logger = setup_logger("engine.test.levels", level="INFO", log_file="")
    try:
        set_global_level("warning")
        assert logger.level == logging.WARNING
    finally:
        set_global_level(settings.log_level)
    with pytest.raises(ValueError):
        set_global_level("loud")


def test_plain_formatter_has_no_escape_codes():
    record = logging.LogRecord("x", logging.ERROR, __file__, 1, "flow failed", None, None)
    plain = ColoredFormatter("%(levelname)s %(message)s", use_color=False).format(record)
    coloured = ColoredFormatter("%(levelname)s %(message)s").format(record)
    assert plain == "ERROR flow failed"
    assert "\033[31m" in coloured
    assert record.levelname == "ERROR"
