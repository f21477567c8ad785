import io

import numpy as np
import pytest

from genview.commands.analyze import cli
from genview.commands.calibrate import cli as calibrate_cli
from genview.records import read_analysis


@pytest.fixture
def calibration(runner, make_container, feature_maps, tmp_path):
    features = make_container("features.gvtf", feature_maps)
    path = tmp_path / "calibration.gvtf"
    result = runner.invoke(calibrate_cli, ["calibrate", str(features), "-o", str(path)])
    assert result.exit_code == 0
    yield path


def analyze(runner, features, calibration, *args):
    return runner.invoke(cli, ["analyze", str(features), str(calibration), *args])


def test_analyze(runner, make_container, feature_maps, calibration):
    features = make_container("features.gvtf", feature_maps)

    result = analyze(runner, features, calibration)

    assert result.exit_code == 0
    rows = read_analysis(io.StringIO(result.stdout))
    assert [row.sample_id for row in rows] == list(feature_maps)
    for row in rows:
        assert 0.0 <= row.p <= 1.0
        assert row.l in (0, 100, 200, 300, 400)


def fixed_calibration(make_container, threshold):
    return make_container(
        f"fixed-{threshold}.gvtf",
        {
            "mean": np.zeros(3),
            "component": np.array([1.0, 0.0, 0.0]),
            "threshold": np.array([threshold]),
            "fitted_on": np.array([96.0]),
            "proportion": np.array([0.4]),
        },
    )


@pytest.mark.parametrize("threshold, p, level", [(0.6, 0.0, 0), (0.4, 1.0, 400)])
def test_constant_maps_have_flat_attention(
    runner, make_container, threshold, p, level
):
    features = make_container(
        "flat.gvtf", {"a": np.ones((4, 4, 3)), "b": np.zeros((4, 4, 3))}
    )
    calibration = fixed_calibration(make_container, threshold)

    result = analyze(runner, features, calibration)

    assert result.exit_code == 0
    rows = read_analysis(io.StringIO(result.stdout))
    assert [(row.p, row.l) for row in rows] == [(p, level), (p, level)]


def test_constant_strategy(runner, make_container, feature_maps, calibration, tmp_path):
    features = make_container("features.gvtf", feature_maps)
    config = tmp_path / "cs.cfg"
    config.write_text("adaptive.strategy = CS(300)\n", encoding="utf-8")

    result = analyze(runner, features, calibration, "--config", str(config))

    assert result.exit_code == 0
    assert {row.l for row in read_analysis(io.StringIO(result.stdout))} == {300}


def test_random_strategy_does_not_depend_on_jobs(
    runner, make_container, feature_maps, calibration, tmp_path
):
    features = make_container("features.gvtf", feature_maps)
    config = tmp_path / "rs.cfg"
    config.write_text("adaptive.strategy = RS\n", encoding="utf-8")

    serial = analyze(runner, features, calibration, "--config", str(config))
    threaded = analyze(
        runner, features, calibration, "--config", str(config), "-j", "3"
    )

    assert serial.exit_code == 0
    assert serial.stdout == threaded.stdout


def test_out_file(runner, make_container, feature_maps, calibration, tmp_path):
    features = make_container("features.gvtf", feature_maps)
    out = tmp_path / "analysis.tsv"

    result = analyze(runner, features, calibration, "-o", str(out))

    assert result.exit_code == 0
    assert result.stdout == ""
    assert out.read_text(encoding="utf-8").startswith("sample_id\tp\tl\n")


@pytest.mark.parametrize("strategy", ["CS(250)", "sometimes"])
def test_invalid_strategy_exits_with_config_error(
    runner, make_container, feature_maps, calibration, tmp_path, strategy
):
    features = make_container("features.gvtf", feature_maps)
    config = tmp_path / "bad.cfg"
    config.write_text(f"adaptive.strategy = {strategy}\n", encoding="utf-8")

    result = analyze(runner, features, calibration, "--config", str(config))

    assert result.exit_code == 2


def test_channel_mismatch_is_reported_with_its_id(
    runner, make_container, calibration
):
    features = make_container("wide.gvtf", {"wide": np.ones((4, 4, 5))})

    result = analyze(runner, features, calibration)

    assert result.exit_code == 3
    assert "wide: " in result.stderr
