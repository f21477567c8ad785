import io

import numpy as np
import pytest

from genview.commands.perturb import cli
from genview.container import read_container
from genview.exceptions import InvalidRangeError
from genview.records import read_table


@pytest.fixture
def embeddings(make_container):
    rng = np.random.default_rng(3)
    yield make_container(
        "embeddings.gvtf", {f"img{i}": rng.standard_normal(8) for i in range(3)}
    )


def write_analysis(tmp_path, rows, name="analysis.tsv"):
    path = tmp_path / name
    lines = ["sample_id\tp\tl"] + [f"{i}\t{p}\t{level}" for i, p, level in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


ROWS = [("img0", 0.1, 0), ("img1", 0.5, 200), ("img2", 0.9, 400)]


def perturb(runner, embeddings, analysis, out, *args):
    return runner.invoke(
        cli, ["perturb", str(embeddings), str(analysis), "-o", str(out), *args]
    )


def test_perturb(runner, embeddings, tmp_path):
    analysis = write_analysis(tmp_path, ROWS)
    out = tmp_path / "noised.gvtf"

    result = perturb(runner, embeddings, analysis, out)

    assert result.exit_code == 0
    assert "3 requests written" in result.stderr
    original = read_container(embeddings)
    noised = read_container(out)
    assert list(noised) == ["img0", "img1", "img2"]
    np.testing.assert_array_equal(noised["img0"], original["img0"])
    assert not np.allclose(noised["img2"], original["img2"])

    with open(f"{out}.tsv", encoding="utf-8") as stream:
        requests = read_table(stream, ["sample_id", "noise_level", "latent_seed"])
    assert [r["noise_level"] for r in requests] == ["0", "200", "400"]
    assert [r["denoising_steps"] for r in requests] == ["20", "20", "20"]
    assert [r["generator_tag"] for r in requests] == ["pretrained"] * 3
    assert all(0 <= int(r["latent_seed"]) < 2 ** 64 for r in requests)


def test_perturb_is_deterministic_and_independent_of_jobs(
    runner, embeddings, tmp_path
):
    analysis = write_analysis(tmp_path, ROWS)
    first, second = tmp_path / "a.gvtf", tmp_path / "b.gvtf"

    perturb(runner, embeddings, analysis, first)
    perturb(runner, embeddings, analysis, second, "-j", "3")

    assert first.read_bytes() == second.read_bytes()
    sidecars = [(tmp_path / f"{name}.gvtf.tsv").read_text() for name in "ab"]
    assert sidecars[0] == sidecars[1]


def test_seed_changes_the_noise(runner, embeddings, tmp_path):
    analysis = write_analysis(tmp_path, ROWS)
    first, second = tmp_path / "a.gvtf", tmp_path / "b.gvtf"

    perturb(runner, embeddings, analysis, first)
    perturb(runner, embeddings, analysis, second, "--seed", "9")

    assert first.read_bytes() != second.read_bytes()


def test_sidecar_option(runner, embeddings, tmp_path):
    analysis = write_analysis(tmp_path, ROWS[:1])
    sidecar = tmp_path / "requests.tsv"

    result = perturb(
        runner, embeddings, analysis, tmp_path / "n.gvtf", "--sidecar", str(sidecar)
    )

    assert result.exit_code == 0
    rows = read_table(io.StringIO(sidecar.read_text()), ["sample_id"])
    assert [r["sample_id"] for r in rows] == ["img0"]


def test_request_settings_come_from_the_config(runner, embeddings, tmp_path):
    analysis = write_analysis(tmp_path, ROWS[:1])
    config = tmp_path / "request.cfg"
    config.write_text(
        "request.T = 50\nrequest.guidance = 7.5\nrequest.generator = unclip-l\n",
        encoding="utf-8",
    )
    out = tmp_path / "n.gvtf"

    result = perturb(runner, embeddings, analysis, out, "--config", str(config))

    assert result.exit_code == 0
    with open(f"{out}.tsv", encoding="utf-8") as stream:
        (row,) = read_table(stream, ["sample_id"])
    assert row["denoising_steps"] == "50"
    assert row["guidance_scale"] == "7.5"
    assert row["generator_tag"] == "unclip-l"


class TestPerturbErrors(object):
    def test_missing_embedding(self, runner, embeddings, tmp_path):
        analysis = write_analysis(tmp_path, [("img9", 0.1, 0)])

        result = perturb(runner, embeddings, analysis, tmp_path / "n.gvtf")

        assert result.exit_code == 3
        assert "img9: no embedding with this id" in result.stderr

    def test_duplicate_id(self, runner, embeddings, tmp_path):
        analysis = write_analysis(tmp_path, [ROWS[0], ROWS[0]])

        result = perturb(runner, embeddings, analysis, tmp_path / "n.gvtf")

        assert result.exit_code == 3
        assert "duplicate id 'img0'" in result.stderr

    @pytest.mark.parametrize("level", ["1001", "-1"])
    def test_level_out_of_range(self, runner, embeddings, tmp_path, level):
        analysis = write_analysis(tmp_path, [("img1", 0.5, level)])

        result = perturb(runner, embeddings, analysis, tmp_path / "n.gvtf")

        assert result.exit_code == 2
        assert "img1: " in result.stderr

    def test_unparsable_level(self, runner, embeddings, tmp_path):
        analysis = write_analysis(tmp_path, [("img1", 0.5, "high")])

        result = perturb(runner, embeddings, analysis, tmp_path / "n.gvtf")

        assert result.exit_code == 3
        assert "invalid l value" in result.stderr

    @pytest.mark.parametrize(
        "line", ["schedule.beta_end = 1.0", "schedule.beta_start = 0"]
    )
    def test_schedule_outside_the_unit_interval(
        self, runner, embeddings, tmp_path, line
    ):
        analysis = write_analysis(tmp_path, ROWS)
        config = tmp_path / "schedule.cfg"
        config.write_text(line + "\n", encoding="utf-8")

        result = perturb(
            runner, embeddings, analysis, tmp_path / "n.gvtf", "--config", str(config)
        )

        assert result.exit_code == 2
        assert line.split()[0] in result.stderr
        assert "Traceback" not in result.stderr

    def test_schedule_error_is_a_config_error(
        self, runner, embeddings, tmp_path, mocker
    ):
        mocker.patch(
            "genview.settings.RunConfig.noise_schedule",
            side_effect=InvalidRangeError("Betas must satisfy 0 < start <= end < 1"),
        )
        analysis = write_analysis(tmp_path, ROWS)

        result = perturb(runner, embeddings, analysis, tmp_path / "n.gvtf")

        assert result.exit_code == 2
        assert "Betas must satisfy" in result.stderr
