import io

import pytest

from diracstab.utils.logger import Logger


@pytest.fixture
def stream():
    buffer = io.StringIO()
    Logger.basic_config("INFO", stream=buffer)
    yield buffer
    Logger.basic_config("WARNING")


def test_context_prefix(stream):
    Logger("scan", context="k=3 omega=0.9").info("Solved profile")
    text = stream.getvalue()
    assert "diracstab.scan - INFO]" in text
    assert "[k=3 omega=0.9] Solved profile" in text
    assert "\x1b[" not in text


def test_level(stream):
    logger = Logger("numerics")
    logger.debug("hidden")
    logger.warning("shown")
    assert "hidden" not in stream.getvalue()
    assert "shown" in stream.getvalue()
    assert logger.name == "diracstab.numerics"
    assert logger.context is None


def test_timer(stream):
    Logger.basic_config("DEBUG", stream=stream)
    logger = Logger("scan")
    with logger.timed("spectrum") as timer:
        pass
    assert timer.elapsed >= 0.0
    assert "spectrum took" in stream.getvalue()


def test_timer_keeps_exceptions(stream):
    logger = Logger("scan")
    with pytest.raises(ValueError):
        with logger.timed("profile"):
            raise ValueError("failed")


def test_bad_arguments():
    with pytest.raises(TypeError):
        Logger(3)
    with pytest.raises(TypeError):
        Logger("scan", context=3)
