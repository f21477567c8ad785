import numpy as np
import pytest
from click.testing import CliRunner

from genview.container import write_container


@pytest.fixture
def runner():
    # click 8.2 keeps stdout and stderr apart and dropped mix_stderr.
    try:
        runner = CliRunner(mix_stderr=False)
    except TypeError:
        runner = CliRunner()
    yield runner


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "\n".join(
            [
                "seed = 3",
                "data.num_classes = 2",
                "data.samples_per_class = 8",
                "data.height = 4",
                "data.width = 4",
                "data.channels = 6",
                "data.blob_min = 1",
                "data.blob_max = 3",
                "trainer.epochs = 2",
                "trainer.batch_size = 8",
                "trainer.hidden_dim = 8",
                "trainer.embed_dim = 4",
                "quality.batch_size = 4",
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    yield path


@pytest.fixture
def dataset(tmp_path):
    """Feature maps, their embeddings and a second view of every map.

    Each map holds a foreground blob of a different size over a weak
    background gradient.
    """
    rng = np.random.default_rng(11)
    maps, views, embeddings = {}, {}, {}
    for index in range(8):
        side = 1 + index % 4
        fmap = 0.05 * rng.standard_normal((6, 6, 4))
        fmap[:side, :side, 0] += 2.0
        sample_id = f"img{index}"
        maps[sample_id] = fmap
        views[sample_id] = fmap + 0.05 * rng.standard_normal(fmap.shape)
        embeddings[sample_id] = rng.standard_normal(16)

    paths = {}
    for name, tensors in [("maps", maps), ("views", views), ("emb", embeddings)]:
        paths[name] = tmp_path / f"{name}.gvtf"
        write_container(paths[name], tensors)
    yield paths
