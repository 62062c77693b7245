import logging

import pytest

from folio.utils.logging import PipelineFormatter, get_logger, log_exception, stage_timer


def test_logger_names_hang_under_folio():
    assert get_logger("extract").name == "folio.extract"
    assert get_logger("folio.rag.search").name == "folio.rag.search"
    assert get_logger().name == "folio"


def test_formatter_adds_stage():
    formatter = PipelineFormatter("%(stage)s | %(message)s", datefmt="%H:%M:%S")
    record = logging.LogRecord("folio.extract.paths", logging.INFO, __file__, 1, "[Page extracted]", None, None)
    assert formatter.format(record) == "extract | [Page extracted]"
    record = logging.LogRecord("other", logging.INFO, __file__, 1, "x", None, None)
    assert formatter.format(record) == "- | x"


def test_stage_timer_logs_start_and_finish(caplog):
    with caplog.at_level(logging.INFO, logger="folio"):
        with stage_timer("refine"):
            pass
    messages = [r.getMessage() for r in caplog.records if r.name == "folio.refine"]
    assert messages[0] == "[Stage started] | stage = refine"
    assert messages[1].startswith("[Stage finished] | stage = refine | seconds = ")


def test_stage_timer_reraises(caplog):
    with caplog.at_level(logging.INFO, logger="folio"):
        with pytest.raises(KeyError):
            with stage_timer("ingest"):
                raise KeyError("c00001")
    assert any(r.levelno == logging.ERROR and "[Stage failed] | stage = ingest" in r.getMessage()
               for r in caplog.records)


@log_exception
def _divide(a, b):
    return a / b


@log_exception
async def _fail_async():
    raise ValueError("bad page")


@pytest.mark.asyncio
async def test_log_exception_records_and_reraises(caplog):
    assert _divide(4, 2) == 2
    with caplog.at_level(logging.ERROR, logger="folio"):
        with pytest.raises(ZeroDivisionError):
            _divide(1, 0)
        with pytest.raises(ValueError):
            await _fail_async()
    messages = [r.getMessage() for r in caplog.records]
    assert any(m.startswith("[Function failed] | func = _divide | ZeroDivisionError") for m in messages)
    assert "[Coroutine failed] | func = _fail_async | ValueError: bad page" in messages
