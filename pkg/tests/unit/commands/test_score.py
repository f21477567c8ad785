import io

import numpy as np
import pytest

from genview.commands.calibrate import cli as calibrate_cli
from genview.commands.score import cli
from genview.records import read_table


def score(runner, features_a, features_b, *args):
    return runner.invoke(cli, ["score", str(features_a), str(features_b), *args])


def read_rows(text):
    return read_table(io.StringIO(text), ["sample_id", "batch", "q", "flagged"])


def test_identical_views_have_zero_quality(runner, make_container, feature_maps):
    features = make_container("features.gvtf", feature_maps)

    result = score(runner, features, features, "-b", "4")

    assert result.exit_code == 0
    rows = read_rows(result.stdout)
    assert [r["sample_id"] for r in rows] == list(feature_maps)
    assert [r["batch"] for r in rows] == ["0", "0", "0", "0", "1", "1"]
    for row in rows:
        assert float(row["s_f"]) == pytest.approx(1.0)
        assert float(row["s_b"]) == pytest.approx(1.0)
        assert float(row["q"]) == pytest.approx(0.0, abs=1e-12)
        assert row["flagged"] == "false"


def test_pairs_are_matched_by_id(runner, make_container, feature_maps, rng):
    shifted = {
        key: fmap + 0.1 * rng.standard_normal(fmap.shape)
        for key, fmap in feature_maps.items()
    }
    features_a = make_container("a.gvtf", feature_maps)
    features_b = make_container("b.gvtf", shifted)
    reversed_b = make_container("r.gvtf", dict(reversed(list(shifted.items()))))

    in_order = score(runner, features_a, features_b)
    out_of_order = score(runner, features_a, reversed_b)

    assert in_order.exit_code == 0
    assert in_order.stdout == out_of_order.stdout


def test_batch_size_defaults_to_the_config(
    runner, make_container, feature_maps, tmp_path
):
    features = make_container("features.gvtf", feature_maps)
    config = tmp_path / "batch.cfg"
    config.write_text("quality.batch_size = 2\n", encoding="utf-8")

    result = score(runner, features, features, "--config", str(config))

    batches = [r["batch"] for r in read_rows(result.stdout)]
    assert batches == ["0", "0", "1", "1", "2", "2"]


def test_vanishing_region_gets_the_minimum_score(runner, make_container, feature_maps):
    maps = dict(feature_maps, empty=np.zeros((4, 4, 3)))
    features = make_container("features.gvtf", maps)

    result = score(runner, features, features)

    assert result.exit_code == 0
    row = read_rows(result.stdout)[-1]
    assert row["sample_id"] == "empty"
    assert row["q"] == "-2.0"
    assert row["flagged"] == "true"


def test_global_projector(runner, make_container, feature_maps, tmp_path):
    features = make_container("features.gvtf", feature_maps)
    calibration = tmp_path / "calibration.gvtf"
    runner.invoke(calibrate_cli, ["calibrate", str(features), "-o", str(calibration)])

    result = score(runner, features, features, "--calibration", str(calibration))

    assert result.exit_code == 0
    assert len(read_rows(result.stdout)) == 6


class TestScoreErrors(object):
    def test_ids_differ(self, runner, make_container, feature_maps):
        features_a = make_container("a.gvtf", feature_maps)
        features_b = make_container("b.gvtf", {"img0": feature_maps["img0"]})

        result = score(runner, features_a, features_b)

        assert result.exit_code == 3
        assert "ids differ" in result.stderr

    def test_shapes_differ(self, runner, make_container, feature_maps):
        features_a = make_container("a.gvtf", {"x": np.ones((4, 4, 3))})
        features_b = make_container("b.gvtf", {"x": np.ones((2, 2, 3))})

        result = score(runner, features_a, features_b)

        assert result.exit_code == 3
        assert "batch 0: " in result.stderr
