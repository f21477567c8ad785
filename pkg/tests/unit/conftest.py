import numpy as np
import pytest
from click.testing import CliRunner

from genview.container import write_container


def make_runner() -> CliRunner:
    # click 8.2 keeps stdout and stderr apart and dropped mix_stderr.
    try:
        return CliRunner(mix_stderr=False)
    except TypeError:
        return CliRunner()


@pytest.fixture
def runner():
    yield make_runner()


@pytest.fixture
def rng():
    yield np.random.default_rng(1234)


@pytest.fixture
def make_container(tmp_path):
    """Write named tensors to a temporary container.

    Examples:
        >>> path = make_container("features.gvtf", {"a": np.zeros((2, 2, 3))})
        >>> path
        PosixPath('/tmp/pytest-xxx/test_xxx/features.gvtf')
    """

    def _make_container(name, tensors):
        path = tmp_path / name
        write_container(path, tensors)
        return path

    return _make_container


def blob_map(height=4, width=4, channels=3, blob=((0, 2), (0, 2)), scale=1.0):
    """Return a feature map whose blob tokens point along the first axis."""
    fmap = np.zeros((height, width, channels))
    (top, bottom), (left, right) = blob
    fmap[top:bottom, left:right, 0] = scale
    fmap[..., 1] = 0.01 * np.arange(height * width).reshape(height, width)
    return fmap


@pytest.fixture
def feature_maps():
    """Six feature maps with foreground blobs of growing size."""
    rng = np.random.default_rng(7)
    maps = {}
    for index, side in enumerate([1, 1, 2, 2, 3, 3]):
        fmap = blob_map(blob=((0, side), (0, side)))
        maps[f"img{index}"] = fmap + 0.001 * rng.standard_normal(fmap.shape)
    yield maps


SMALL_RUN = """\
data.num_classes = 2
data.samples_per_class = 8
data.height = 4
data.width = 4
data.channels = 6
data.blob_min = 1
data.blob_max = 3
trainer.epochs = 2
trainer.batch_size = 8
trainer.hidden_dim = 8
trainer.embed_dim = 4
"""


@pytest.fixture
def config_file(tmp_path):
    """A configuration of a toy run that trains in well under a second."""
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_RUN, encoding="utf-8")
    yield path
