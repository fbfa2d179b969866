"""Tests for the synthetic generators, their oracles and MNIST ingestion."""

import gzip
import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import logsumexp

from evidence_plane.datasets.base import LabeledDataset
from evidence_plane.datasets.binary_image import (
    BinaryImageSpec,
    binary_image_analytic_kl,
    binary_image_kl_bruteforce,
    binary_image_llr,
    gen_binary_image,
)
from evidence_plane.datasets.gaussian import (
    GaussianSpec,
    bayes_point,
    gaussian_kl_bits,
    gaussian_np_envelope,
    gen_gaussian_pair,
)
from evidence_plane.datasets.mnist import load_mnist, read_idx_images
from evidence_plane.datasets.yin_yang import YinYangSpec, gen_yin_yang, yin_yang_class
from evidence_plane.errors import (
    CountMismatchError,
    DomainError,
    EvaluationError,
    GenerationError,
    IdxMagicError,
    ResourceError,
    TruncatedFileError,
)

LN2 = math.log(2.0)


class TestLabeledDataset:
    """Tests for the dataset container."""

    def test_missing_class_rejected(self):
        with pytest.raises(EvaluationError):
            LabeledDataset(np.zeros((3, 2)), np.array([0, 0, 0]), class_count=2)

    def test_stratified_split(self, gaussian_pair):
        train, test = gaussian_pair.split(0.2, seed=1)
        assert train.size + test.size == gaussian_pair.size
        assert test.class_counts().tolist() == [100, 100]

    def test_split_deterministic(self, gaussian_pair):
        a, _ = gaussian_pair.split(0.2, seed=5)
        b, _ = gaussian_pair.split(0.2, seed=5)
        assert np.array_equal(a.features, b.features)

    def test_subsample_per_class(self, gaussian_pair):
        small = gaussian_pair.subsample_per_class(50, seed=0)
        assert small.class_counts().tolist() == [50, 50]

    def test_csv_export(self, tmp_path, gaussian_pair):
        path = gaussian_pair.to_csv(tmp_path / "data.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "label,f0,f1,f2,f3"
        assert len(lines) == gaussian_pair.size + 1
        first = lines[1].split(",")
        assert float(first[1]) == gaussian_pair.features[0, 0]


class TestGaussian:
    """Tests for the Gaussian pair and its NP envelope."""

    def test_unit_shift_divergence(self):
        assert gaussian_kl_bits(1.0) == pytest.approx(0.5 / LN2)
        assert gaussian_kl_bits(1.0) == pytest.approx(0.721, abs=1e-3)

    def test_zero_and_double_shift(self):
        assert gaussian_kl_bits(0.0) == 0.0
        assert gaussian_kl_bits(2.0) * LN2 == pytest.approx(2.0)

    def test_generated_means(self):
        data = gen_gaussian_pair(GaussianSpec(dimension=3, mean_shift=2.0, samples_per_class=20_000), seed=0)
        x0, x1 = data.class_groups()
        assert x0.mean(axis=0) == pytest.approx([0, 0, 0], abs=0.05)
        assert x1.mean(axis=0) == pytest.approx([2, 0, 0], abs=0.05)
        assert data.analytic_divergence == pytest.approx(2.0 / LN2)

    def test_envelope_value(self):
        assert gaussian_np_envelope(0.5, 1.0) == pytest.approx(0.158655, abs=1e-6)

    def test_envelope_without_shift(self):
        alphas = np.linspace(0.05, 0.95, 19)
        assert np.allclose(gaussian_np_envelope(alphas, 0.0), 1 - alphas)

    def test_envelope_endpoint_and_monotone(self):
        alphas = np.linspace(0.001, 0.999, 200)
        beta = gaussian_np_envelope(alphas, 1.0)
        assert np.all(np.diff(beta) < 0)
        assert gaussian_np_envelope(1 - 1e-12, 1.0) < 1e-6

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 2.0])
    def test_envelope_domain(self, alpha):
        with pytest.raises(DomainError):
            gaussian_np_envelope(alpha, 1.0)

    def test_bayes_point_on_envelope(self):
        b = bayes_point(1.0)
        assert b == pytest.approx(0.3085, abs=1e-4)
        assert gaussian_np_envelope(b, 1.0) == pytest.approx(b)


def brute_force_llr(image, spec):
    """``log2 P_R(x) / P_C(x)`` from explicit template likelihoods."""
    d, p = spec.side, spec.flip_prob
    rows, cols = [], []
    for r in range(d):
        template = np.zeros((d, d))
        template[r, :] = 1
        hamming = np.sum(image != template)
        rows.append(hamming * math.log(p) + (d * d - hamming) * math.log(1 - p))
        hamming = np.sum(image != template.T)
        cols.append(hamming * math.log(p) + (d * d - hamming) * math.log(1 - p))
    return (logsumexp(rows) - logsumexp(cols)) / LN2


class TestBinaryImage:
    """Tests for the binary image generator and its KL oracles."""

    def test_noiseless_limit_gives_templates(self):
        spec = BinaryImageSpec(side=4, flip_prob=1e-9)
        data = gen_binary_image(spec, 100, seed=0)
        rows, cols = (g.reshape(-1, 4, 4) for g in data.class_groups())
        assert np.all(rows.sum(axis=(1, 2)) == 4)
        assert np.all(rows.sum(axis=2).max(axis=1) == 4)
        assert np.all(cols.sum(axis=1).max(axis=1) == 4)

    def test_flip_rate(self):
        spec = BinaryImageSpec(side=8, flip_prob=0.1)
        data = gen_binary_image(spec, 10_000, seed=1)
        rows = data.class_groups()[0]
        # Pixel mean of row images is (1 - p) / d + p (d - 1) / d.
        d = spec.side
        estimated = (rows.mean() - 1 / d) / (1 - 2 / d)
        assert estimated == pytest.approx(0.1, abs=0.01)

    def test_deterministic(self):
        spec = BinaryImageSpec(side=5, flip_prob=0.2)
        a = gen_binary_image(spec, 50, seed=3)
        b = gen_binary_image(spec, 50, seed=3)
        assert np.array_equal(a.features, b.features)

    def test_uninformative_channel(self):
        spec = BinaryImageSpec(side=4, flip_prob=0.5)
        x = np.random.default_rng(0).integers(0, 2, size=(10, 16))
        assert np.allclose(binary_image_llr(x, spec), 0.0)

    def test_symmetric_image_has_zero_llr(self):
        rng = np.random.default_rng(1)
        upper = rng.integers(0, 2, size=(6, 6))
        symmetric = np.triu(upper) + np.triu(upper, 1).T
        assert binary_image_llr(symmetric, BinaryImageSpec(side=6, flip_prob=0.1)) == pytest.approx(0.0, abs=1e-12)

    def test_llr_matches_brute_force_on_all_2x2_images(self):
        spec = BinaryImageSpec(side=2, flip_prob=0.1)
        for code in range(16):
            image = np.array([(code >> i) & 1 for i in range(4)]).reshape(2, 2)
            assert binary_image_llr(image, spec) == pytest.approx(brute_force_llr(image, spec), abs=1e-12)

    @given(st.integers(min_value=0, max_value=2**16 - 1), st.sampled_from([0.05, 0.1, 0.3]))
    @settings(max_examples=50)
    def test_llr_antisymmetric_under_transpose(self, code, p):
        spec = BinaryImageSpec(side=4, flip_prob=p)
        image = np.array([(code >> i) & 1 for i in range(16)]).reshape(4, 4)
        assert binary_image_llr(image.T, spec) == pytest.approx(-binary_image_llr(image, spec), abs=1e-9)

    def test_non_binary_rejected(self):
        with pytest.raises(DomainError):
            binary_image_llr(np.full((3, 3), 0.5), BinaryImageSpec(side=3))

    @pytest.mark.parametrize("side", [2, 3])
    @pytest.mark.parametrize("p", [0.1, 0.25, 0.4])
    def test_exact_matches_exhaustive(self, side, p):
        spec = BinaryImageSpec(side=side, flip_prob=p)
        exact = binary_image_analytic_kl(spec, "exact").value
        assert exact == pytest.approx(binary_image_kl_bruteforce(spec), abs=1e-9)

    def test_zero_at_half_flip(self):
        assert binary_image_analytic_kl(BinaryImageSpec(side=8, flip_prob=0.5), "monte_carlo").value == 0.0

    def test_exact_limited_to_small_images(self):
        with pytest.raises(ResourceError):
            binary_image_analytic_kl(BinaryImageSpec(side=7), "exact")

    def test_brute_force_limited(self):
        with pytest.raises(ResourceError):
            binary_image_kl_bruteforce(BinaryImageSpec(side=5))

    def test_monte_carlo_agrees_with_exact(self):
        spec = BinaryImageSpec(side=5, flip_prob=0.2)
        exact = binary_image_analytic_kl(spec, "exact").value
        mc = binary_image_analytic_kl(spec, "monte_carlo", n_samples=200_000, seed=3)
        assert abs(mc.value - exact) < 4 * mc.standard_error + 1e-9
        assert mc.samples == 200_000

    def test_monte_carlo_independent_of_workers(self):
        spec = BinaryImageSpec(side=6, flip_prob=0.1)
        one = binary_image_analytic_kl(spec, "monte_carlo", n_samples=250_000, seed=1, workers=1)
        many = binary_image_analytic_kl(spec, "monte_carlo", n_samples=250_000, seed=1, workers=3)
        assert one.value == pytest.approx(many.value, rel=1e-12)

    @pytest.mark.slow
    def test_table_value_at_side_eight(self):
        spec = BinaryImageSpec(side=8, flip_prob=0.1)
        mc = binary_image_analytic_kl(spec, "monte_carlo", n_samples=1_000_000, seed=0)
        # The reference value is quoted to one decimal.
        assert abs(mc.value - 26.6) < 0.05 + 3 * mc.standard_error


class TestYinYang:
    """Tests for the Yin-Yang generator."""

    def test_balanced_classes_and_features(self):
        data = gen_yin_yang(YinYangSpec(samples_per_class=300), seed=0)
        assert data.class_counts().tolist() == [300, 300, 300]
        x, y = data.features[:, 0], data.features[:, 1]
        assert np.allclose(data.features[:, 2], 1 - x)
        assert np.allclose(data.features[:, 3], 1 - y)
        assert np.all(np.hypot(x - 0.5, y - 0.5) <= 0.5)

    def test_labels_follow_region_rule(self):
        spec = YinYangSpec(samples_per_class=200)
        data = gen_yin_yang(spec, seed=4)
        assert np.array_equal(yin_yang_class(data.features[:, 0], data.features[:, 1], spec), data.labels)

    def test_dots_have_expected_radius(self):
        spec = YinYangSpec()
        # Centre of the right dot belongs to the dot class.
        assert yin_yang_class(np.array([0.75]), np.array([0.5]), spec)[0] == 2

    def test_budget_exhaustion(self):
        with pytest.raises(GenerationError):
            gen_yin_yang(YinYangSpec(samples_per_class=1000, max_draws_per_sample=0), seed=0)

    def test_bad_radii(self):
        with pytest.raises(DomainError):
            YinYangSpec(big_radius=0.5, dot_radius=0.6)


def write_idx_images(path, images, magic=0x803):
    n, rows, cols = images.shape
    payload = struct.pack(">IIII", magic, n, rows, cols) + images.astype(np.uint8).tobytes()
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as f:
        f.write(payload)
    return path


def write_idx_labels(path, labels, magic=0x801):
    path.write_bytes(struct.pack(">II", magic, len(labels)) + np.asarray(labels, dtype=np.uint8).tobytes())
    return path


class TestMnist:
    """Tests for IDX ingestion."""

    @pytest.fixture
    def idx_pair(self, tmp_path):
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(20, 28, 28))
        labels = np.arange(20) % 10
        return (
            write_idx_images(tmp_path / "images.idx3-ubyte", images),
            write_idx_labels(tmp_path / "labels.idx1-ubyte", labels),
            images,
        )

    def test_load(self, idx_pair):
        image_path, label_path, images = idx_pair
        data = load_mnist(image_path, label_path)
        assert data.features.shape == (20, 784)
        assert data.class_count == 10
        assert data.features.max() <= 1.0
        assert data.features[0, 5] == pytest.approx(images[0].ravel()[5] / 255)

    def test_gzip(self, tmp_path):
        images = np.zeros((2, 28, 28))
        path = write_idx_images(tmp_path / "images.gz", images)
        assert read_idx_images(path).shape == (2, 28, 28)

    def test_wrong_magic(self, tmp_path, idx_pair):
        image_path, _, _ = idx_pair
        bad = write_idx_labels(tmp_path / "bad.idx1-ubyte", np.arange(20) % 10, magic=0x803)
        with pytest.raises(IdxMagicError):
            load_mnist(image_path, bad)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.idx3-ubyte"
        path.write_bytes(struct.pack(">IIII", 0x803, 10, 28, 28) + b"\x00" * 100)
        with pytest.raises(TruncatedFileError):
            read_idx_images(path)

    def test_count_mismatch(self, tmp_path, idx_pair):
        image_path, _, _ = idx_pair
        labels = write_idx_labels(tmp_path / "few.idx1-ubyte", np.arange(5))
        with pytest.raises(CountMismatchError):
            load_mnist(image_path, labels)
