from genview.commands.config import cli
from genview.settings import RunConfig


def test_config_shows_the_defaults(runner):
    result = runner.invoke(cli, ["config"])

    assert result.exit_code == 0
    assert result.stdout.split()[:3] == ["Name", "Value", "Description"]
    assert "adaptive.strategy" in result.stdout
    assert "source: <defaults>" in result.stdout


def test_config_shows_the_file(runner, config_file):
    result = runner.invoke(cli, ["config", "--config", str(config_file)])

    assert result.exit_code == 0
    assert f"source: {config_file}" in result.stdout


def test_dump_reads_back(runner, config_file):
    result = runner.invoke(
        cli, ["config", "--dump", "--config", str(config_file), "--seed", "7"]
    )

    assert result.exit_code == 0
    assert "seed = 7\n" in result.stdout
    config = RunConfig.from_text(result.stdout)
    assert config == RunConfig.from_file(config_file).updated({"seed": 7})


def test_invalid_config(runner, tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("trainer.epochz = 3\n", encoding="utf-8")

    result = runner.invoke(cli, ["config", "--config", str(path)])

    assert result.exit_code == 2
    assert "unknown key 'trainer.epochz'" in result.stderr
