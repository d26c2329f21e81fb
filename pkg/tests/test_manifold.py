import numpy as np
import pytest

from filterdistill.errors import (
    CodeOutOfRange,
    EmptyTrainingSet,
    KMismatch,
    TruncatedFile,
)
from filterdistill.analytic import AnalyticKernelSpec, generate
from filterdistill.filterbank import Filter
from filterdistill.manifold import (
    TrainConfig,
    decode,
    default_layer_specs,
    encode,
    model_from_bytes,
    model_to_bytes,
    neighborhood_codes,
    sample_around,
    sample_uniform,
    train_autoencoder,
)
from filterdistill.normalize import normalize_filter

from conftest import random_filter


def generator_bank(n=300, seed=123, noise=0.01):
    """Linear shifts + noise of 3 analytic generators, normalized."""
    gens = [
        generate(AnalyticKernelSpec("gauss_dx", 1.0, 7)),
        generate(AnalyticKernelSpec("gauss_dy", 1.0, 7)),
        generate(AnalyticKernelSpec("gaussian", 0.8, 7)),
    ]
    rng = np.random.default_rng(seed)
    filters = []
    for i in range(n):
        g = gens[i % 3].values
        v = (
            rng.uniform(0.5, 2.0) * g
            + rng.uniform(-0.1, 0.1)
            + rng.normal(scale=noise, size=(7, 7))
        )
        filters.append(normalize_filter(Filter(v)))
    return filters


@pytest.fixture(scope="module")
def trained():
    config = TrainConfig(epochs=500, seed=42, learning_rate=0.2, batch_size=64)
    model, history = train_autoencoder(generator_bank(), config)
    return model, history


class TestArchitecture:
    def test_layer_specs(self):
        specs = default_layer_specs(7)
        assert len(specs) == 10
        widths = [s[0] for s in specs] + [specs[-1][1]]
        assert widths == [49, 64, 32, 16, 8, 1, 8, 16, 32, 64, 49]
        assert specs[4] == (8, 1, "sigmoid")
        assert specs[-1][2] == "tanh"
        assert all(s[2] == "leaky_relu" for s in specs[:4] + specs[5:9])


class TestTraining:
    def test_empty_training_set(self):
        with pytest.raises(EmptyTrainingSet):
            train_autoencoder([], TrainConfig())

    def test_single_epoch_history(self):
        _, history = train_autoencoder(
            generator_bank(n=30), TrainConfig(epochs=1, seed=1)
        )
        assert len(history) == 1

    def test_constant_direction_converges(self, rng):
        data = [normalize_filter(random_filter(rng))] * 100
        _, history = train_autoencoder(
            data, TrainConfig(epochs=200, seed=42, learning_rate=0.05)
        )
        assert history[-1] <= 1e-3

    def test_generator_bank_converges(self, trained):
        _, history = trained
        assert history[-1] <= 0.05
        assert history[99] < history[0]

    def test_deterministic(self):
        config = TrainConfig(epochs=20, seed=42, learning_rate=0.05)
        data = generator_bank(n=60)
        m1, h1 = train_autoencoder(data, config)
        m2, h2 = train_autoencoder(data, config)
        assert h1 == h2
        for w1, w2 in zip(m1.weights, m2.weights):
            assert np.array_equal(w1, w2)


class TestEncodeDecode:
    def test_code_in_open_unit_interval(self, trained, rng):
        model, _ = trained
        for _ in range(10):
            code = encode(model, normalize_filter(random_filter(rng)))
            assert 0.0 < code < 1.0

    def test_encode_deterministic(self, trained, rng):
        model, _ = trained
        f = normalize_filter(random_filter(rng))
        assert encode(model, f) == encode(model, f)

    def test_encode_k_mismatch(self, trained, rng):
        model, _ = trained
        with pytest.raises(KMismatch):
            encode(model, normalize_filter(random_filter(rng, 5)))

    def test_untrained_code_near_half(self, rng):
        # zero biases keep the sigmoid input small at init
        data = [normalize_filter(random_filter(rng))]
        model, _ = train_autoencoder(data, TrainConfig(epochs=1, seed=0, learning_rate=1e-9))
        code = encode(model, data[0])
        assert abs(code - 0.5) < 0.3

    def test_decode_shape_and_range(self, trained):
        model, _ = trained
        for code in (0.0, 0.25, 1.0):
            f = decode(model, code)
            assert f.values.shape == (7, 7)
            assert np.all(np.abs(f.values) < 1.0)

    def test_decode_out_of_range(self, trained):
        model, _ = trained
        with pytest.raises(CodeOutOfRange):
            decode(model, 1.5)
        with pytest.raises(CodeOutOfRange):
            decode(model, -0.01)

    def test_roundtrip_reconstruction(self, trained):
        model, _ = trained
        for f in generator_bank(n=9):
            recon = decode(model, encode(model, f))
            assert np.max(np.abs(recon.values - f.values)) <= 0.1


class TestSampling:
    def test_uniform_endpoints(self, trained):
        model, _ = trained
        assert len(sample_uniform(model, 2)) == 2
        assert len(sample_uniform(model, 50)) == 50
        np.testing.assert_array_equal(
            sample_uniform(model, 2)[0].filter.values,
            decode(model, 0.0).values,
        )

    def test_uniform_codes_n3(self):
        from filterdistill.manifold import uniform_codes

        assert uniform_codes(3) == [0.0, 0.5, 1.0]

    def test_neighborhood_codes(self):
        codes = neighborhood_codes([0.5], 4, 0.01)
        np.testing.assert_allclose(codes, [0.48, 0.49, 0.51, 0.52])

    def test_neighborhood_clamps_and_dedups(self):
        codes = neighborhood_codes([0.0], 4, 0.01)
        assert codes == [0.0, 0.01, 0.02]

    def test_second_round_pool_size(self, trained):
        model, _ = trained
        centers = [(i + 1) / 11 for i in range(10)]
        bank = sample_around(model, centers, 4, 1.0 / (2 * 49))
        # 10 interior survivors x 4 neighbors, no collisions
        assert len(bank) == 40


class TestSerialization:
    def test_round_trip_bitwise(self, trained):
        model, _ = trained
        data = model_to_bytes(model)
        back = model_from_bytes(data)
        assert model_to_bytes(back) == data
        for w1, w2 in zip(model.weights, back.weights):
            assert np.array_equal(w1, w2)
        f = generator_bank(n=3)[0]
        assert encode(model, f) == encode(back, f)
        np.testing.assert_array_equal(
            decode(model, 0.37).values, decode(back, 0.37).values
        )

    def test_truncated(self, trained):
        model, _ = trained
        with pytest.raises(TruncatedFile):
            model_from_bytes(model_to_bytes(model)[:-3])
