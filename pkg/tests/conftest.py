import numpy as np
import pytest

from framesampler import EmbeddingSequence


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_sequence(vectors, duration_s=None, video_id="test", spacing=15.0):
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    timestamps = np.arange(n) * spacing + spacing / 2
    if duration_s is None:
        duration_s = float(n * spacing)
    return EmbeddingSequence(
        video_id=video_id,
        vectors=vectors,
        timestamps_s=timestamps,
        duration_s=duration_s,
        source_fps=1.0 / spacing,
    )


def random_unit_sequence(rng, n, d, **kwargs):
    vectors = rng.normal(size=(n, d))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return make_sequence(vectors, **kwargs)
