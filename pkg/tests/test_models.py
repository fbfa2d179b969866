"""Tests for configuration models, seeding and the error contract."""

import pytest
from pydantic import ValidationError

from evidence_plane.errors import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_FAILURE,
    EXIT_NUMERIC,
    ConfigurationError,
    CountMismatchError,
    DomainError,
    NumericalError,
    exit_code_for,
)
from evidence_plane.models import (
    DEFAULT_CANDIDATE_KS,
    AnalysisBlock,
    DatasetBlock,
    EstimationBlock,
    ExperimentConfig,
    KnnEstimatorConfig,
    ModelBlock,
    SNNConfig,
    TrainingBlock,
    TrainingConfig,
)
from evidence_plane.seeding import SEED_COUNTERS, derive_component_seeds, derive_seed, epoch_seed


class TestEstimatorConfig:
    """Tests for KnnEstimatorConfig."""

    def test_defaults(self):
        cfg = KnnEstimatorConfig()
        assert cfg.k == "auto"
        assert cfg.candidate_ks == DEFAULT_CANDIDATE_KS
        assert cfg.null_splits == 10
        assert cfg.noise_sigma == 1e-6

    def test_numeric_string_k(self):
        assert KnnEstimatorConfig(k="7").k == 7

    @pytest.mark.parametrize("k", [0, -3, "several"])
    def test_invalid_k(self, k):
        with pytest.raises(ValidationError):
            KnnEstimatorConfig(k=k)

    def test_candidates_from_text(self):
        assert KnnEstimatorConfig(candidate_ks="1, 4,9").candidate_ks == [1, 4, 9]

    def test_auto_needs_candidates(self):
        with pytest.raises(ValidationError):
            KnnEstimatorConfig(candidate_ks=[])

    def test_fixed_k_without_candidates(self):
        assert KnnEstimatorConfig(k=3, candidate_ks=[]).k == 3

    def test_frozen(self):
        with pytest.raises(ValidationError):
            KnnEstimatorConfig().k = 3

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            KnnEstimatorConfig(neighbours=3)


class TestNetworkConfigs:
    """Tests for TrainingConfig and SNNConfig."""

    def test_training_defaults(self):
        cfg = TrainingConfig()
        assert (cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon) == (1e-3, 0.9, 0.999, 1e-8)

    @pytest.mark.parametrize("field,value", [("beta1", 1.0), ("learning_rate", 0.0), ("epochs", -1)])
    def test_training_bounds(self, field, value):
        with pytest.raises(ValidationError):
            TrainingConfig(**{field: value})

    @pytest.mark.parametrize("field,value", [("leak", 1.0), ("leak", 0.0), ("threshold", 0.0), ("time_steps", 0)])
    def test_snn_bounds(self, field, value):
        with pytest.raises(ValidationError):
            SNNConfig(**{field: value})


class TestExperimentBlocks:
    """Tests for the experiment config blocks."""

    def test_mnist_requires_paths(self):
        with pytest.raises(ValidationError, match="train_images"):
            DatasetBlock(kind="mnist", train_labels="a", test_images="b", test_labels="c")

    def test_yin_yang_radii(self):
        with pytest.raises(ValidationError):
            DatasetBlock(kind="yin_yang", big_radius=0.2, dot_radius=0.3)

    def test_unknown_dataset_kind(self):
        with pytest.raises(ValidationError):
            DatasetBlock(kind="cifar")

    def test_linear_layer_dims_ignore_hidden(self):
        assert ModelBlock(kind="linear", hidden_dims=[8]).layer_dims(64, 2) == [64, 2]

    def test_dense_layer_dims(self):
        assert ModelBlock(kind="dense", hidden_dims="32, 16").layer_dims(4, 2) == [4, 32, 16, 2]

    def test_training_block_carries_seed(self):
        cfg = TrainingBlock(epochs=4).to_training_config(seed=12)
        assert cfg.epochs == 4
        assert cfg.seed == 12

    def test_estimation_block_conversion(self):
        cfg = EstimationBlock(k="5", workers=2, noise_sigma=0.0).to_knn_config(seed=8)
        assert (cfg.k, cfg.workers, cfg.noise_sigma, cfg.seed) == (5, 2, 0.0, 8)

    def test_estimation_block_rejects_zero_k(self):
        with pytest.raises(ValidationError):
            EstimationBlock(k=0)

    @pytest.mark.parametrize("model", [KnnEstimatorConfig, EstimationBlock])
    @pytest.mark.parametrize(
        "settings",
        [{"candidate_ks": []}, {"candidate_ks": "1, 0, 3"}, {"k": "-2"}, {"k": "many"}],
    )
    def test_block_and_estimator_reject_the_same_settings(self, model, settings):
        with pytest.raises(ValidationError):
            model(**settings)

    def test_block_parses_candidates_like_the_estimator(self):
        block = EstimationBlock(k="auto", candidate_ks="2, 8,32")
        assert block.to_knn_config(seed=0).candidate_ks == KnnEstimatorConfig(candidate_ks="2, 8,32").candidate_ks

    def test_alpha_grid_is_interior(self):
        assert AnalysisBlock(alpha_points=3).alpha_grid() == [0.25, 0.5, 0.75]

    def test_negative_sigma(self):
        with pytest.raises(ValidationError):
            AnalysisBlock(noise_sigmas="0.1, -1")

    def test_snn_config_from_experiment(self):
        config = ExperimentConfig(
            seed=1,
            dataset=DatasetBlock(kind="binary_image"),
            model=ModelBlock(kind="spiking", leak=0.9, time_steps=6),
        )
        snn = config.snn_config(config.training.to_training_config(3), encode_seed=44)
        assert (snn.leak, snn.time_steps, snn.encode_seed, snn.training.seed) == (0.9, 6, 44, 3)

    def test_seed_range(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(seed=2**64, dataset=DatasetBlock(kind="gaussian"), model=ModelBlock(kind="dense"))


class TestSeeding:
    """Tests for counter-based seed derivation."""

    def test_deterministic(self):
        assert derive_seed(42, 3) == derive_seed(42, 3)

    def test_counters_give_distinct_seeds(self):
        seeds = derive_component_seeds(42)
        assert set(seeds) == set(SEED_COUNTERS)
        assert len(set(seeds.values())) == len(seeds)

    def test_master_seed_matters(self):
        assert derive_component_seeds(1)["data"] != derive_component_seeds(2)["data"]

    def test_seed_fits_in_64_bits(self):
        assert 0 <= derive_seed(2**64 - 1, 0x09) < 2**64

    def test_epoch_seeds_differ(self):
        assert epoch_seed(5, 1) != epoch_seed(5, 2)


class TestExitCodes:
    """Exceptions map onto the documented exit codes."""

    @pytest.mark.parametrize(
        "exc,code",
        [
            (ConfigurationError("x"), EXIT_CONFIG),
            (CountMismatchError("x"), EXIT_DATA),
            (FileNotFoundError("x"), EXIT_DATA),
            (NumericalError("x"), EXIT_NUMERIC),
            (DomainError("x"), EXIT_FAILURE),
            (RuntimeError("x"), EXIT_FAILURE),
        ],
    )
    def test_mapping(self, exc, code):
        assert exit_code_for(exc) == code

    def test_builtin_bases(self):
        assert isinstance(ConfigurationError("x"), ValueError)
        assert isinstance(NumericalError("x"), ArithmeticError)
