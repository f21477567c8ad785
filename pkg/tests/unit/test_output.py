import logging
from textwrap import dedent

import pytest

from genview.output import (
    ClickLogHandler,
    echo,
    echo_json,
    echo_success,
    echo_table,
    echo_warning,
    setup_logging,
)


def test_echo(capfd):
    echo("message")

    out, err = capfd.readouterr()
    assert out == "message\n"
    assert err == ""


@pytest.mark.parametrize(
    "func, expected",
    [(echo_success, "Success: message\n"), (echo_warning, "Warning: message\n")],
)
def test_status_messages_go_to_stderr(capfd, func, expected):
    func("message")

    out, err = capfd.readouterr()
    assert out == ""
    assert err == expected


def test_echo_json(capfd):
    echo_json({"key": "value", "list": [1, 2]})

    out, err = capfd.readouterr()
    assert out == dedent(
        """\
        {
          "key": "value",
          "list": [
            1,
            2
          ]
        }
        """
    )
    assert err == ""


def test_echo_table(capfd):
    echo_table([["a", 1], ["b", 22]], headers=["name", "value"], tablefmt="github")

    out, _ = capfd.readouterr()
    assert out.splitlines()[0].split() == ["|", "name", "|", "value", "|"]
    assert len(out.splitlines()) == 4


class TestSetupLogging(object):
    @pytest.fixture(autouse=True)
    def reset_logger(self):
        yield
        logger = logging.getLogger("genview")
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
        logger.setLevel(logging.NOTSET)
        logger.propagate = True

    def test_warnings_only_by_default(self, capsys):
        setup_logging(False)
        logger = logging.getLogger("genview.tensor")

        logger.debug("hidden")
        logger.warning("shown")

        _, err = capsys.readouterr()
        assert err == "Warning: shown\n"

    def test_verbose_shows_debug(self, capsys):
        setup_logging(True)

        logging.getLogger("genview.generation").debug("detail %d", 3)

        _, err = capsys.readouterr()
        assert err == "Debug: detail 3\n"

    def test_handler_is_installed_once(self):
        setup_logging(False)
        setup_logging(True)

        handlers = logging.getLogger("genview").handlers
        assert sum(isinstance(h, ClickLogHandler) for h in handlers) == 1
