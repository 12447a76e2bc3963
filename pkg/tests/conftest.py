import numpy as np
import pytest
import torch

from tsvista.data import Dataset, TimeSeriesSample
from tsvista.datagen import generate_all

torch.manual_seed(0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """The bundled synthetic datasets, generated once per session."""
    out = tmp_path_factory.mktemp("datasets")
    generate_all(out)
    return out


def make_sample(values, label=None, source="test"):
    return TimeSeriesSample(values=np.asarray(values, dtype=np.float64), label=label, source_id=source)


def make_dataset(arrays, labels, name="toy"):
    samples = [make_sample(a, label=l, source=name) for a, l in zip(arrays, labels)]
    return Dataset(samples=samples, name=name, num_classes=len(set(labels)))


def random_unit_rows(rng, n, dim):
    x = rng.standard_normal((n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
