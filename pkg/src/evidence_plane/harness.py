"""Configuration-driven experiment runs.

A run directory holds::

    manifest.json     resolved config, derived seeds, D_inp values, status
    trajectory.csv    one row per completed epoch, flushed as it is written
    trajectory.json   the same records once the run finishes
    analysis.json     final point, region status, vote curve, noise sweep
    model.slnn|.slsn  trained network snapshot
    FAILED            present only when the run aborted
    *.tsv             plot tables written by :func:`emit_plots`
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from . import __version__
from .config_file import load_config
from .datasets.base import LabeledDataset
from .datasets.binary_image import (
    EXACT_MAX_SIDE,
    BinaryImageSpec,
    binary_image_analytic_kl,
    gen_binary_image,
)
from .datasets.gaussian import GaussianSpec, gen_gaussian_pair
from .datasets.mnist import load_mnist
from .datasets.yin_yang import YinYangSpec, gen_yin_yang
from .divergence import ClassConditionalBundle, class_conditional_divergence, noise_sweep
from .errors import (
    EXIT_DATA,
    EXIT_OK,
    ConfigurationError,
    EvidencePlaneError,
    IngestionError,
    exit_code_for,
)
from .models import DatasetBlock, ExperimentConfig
from .nn.dense import init_network
from .nn.spiking import init_spiking_network, snn_train
from .nn.training import train
from .plane import (
    AchievableRegion,
    RegionStatus,
    distance_to_envelope,
    error_exponent,
    evidence_error_point,
    majority_vote_error_curve,
    np_plane_data,
    per_class_error_rates,
    region_check,
    stein_line,
)
from .seeding import derive_component_seeds
from .snapshot import save_snapshot, snapshot_suffix

logger = logging.getLogger(__name__)

TRAJECTORY_CSV = "trajectory.csv"
TRAJECTORY_JSON = "trajectory.json"
MANIFEST = "manifest.json"
ANALYSIS = "analysis.json"
FAILED_MARKER = "FAILED"
SUMMARY_CSV = "summary.csv"
REGION_SAMPLES = 101
SUMMARY_COLUMNS = ["run", "model", "dataset", "d_inp", "d_theta", "p_theta", "test_acc", "status"]


# ---------------------------------------------------------------------------
# Trajectory log
# ---------------------------------------------------------------------------


@dataclass
class EpochRecord:
    """Evaluation of the network after one epoch (epoch 0 is the initialization)."""

    epoch: int
    train_acc: float
    test_acc: float
    d_theta_bits: float
    p_theta_bits: float
    k_used: int
    alpha: list[float]
    beta: list[float]
    d_class: list[float]
    wall_ms: float
    region: str = RegionStatus.INSIDE.value

    def csv_row(self) -> list[str]:
        values = [self.train_acc, self.test_acc, self.d_theta_bits, self.p_theta_bits]
        row = [str(self.epoch), *(repr(float(v)) for v in values), str(self.k_used)]
        row.extend(repr(float(v)) for v in (*self.alpha, *self.beta, *self.d_class))
        row.append(f"{self.wall_ms:.3f}")
        return row


def trajectory_header(class_count: int) -> list[str]:
    header = ["epoch", "train_acc", "test_acc", "d_theta_bits", "p_theta_bits", "k_used"]
    for prefix in ("alpha", "beta", "d_class"):
        header.extend(f"{prefix}_{c}" for c in range(class_count))
    header.append("wall_ms")
    return header


class TrajectoryLog:
    """Append-only CSV of epoch records; every row is flushed to disk."""

    def __init__(self, path: Path, class_count: int):
        self.path = Path(path)
        self.class_count = class_count
        self.records: list[EpochRecord] = []
        with open(self.path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow(trajectory_header(class_count))

    def append(self, record: EpochRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError(f"epoch {record.epoch} does not follow epoch {self.records[-1].epoch}")
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow(record.csv_row())
            f.flush()
            os.fsync(f.fileno())
        self.records.append(record)

    def write_json(self, path: Path) -> None:
        Path(path).write_text(
            json.dumps([asdict(r) for r in self.records], indent=2), encoding="utf-8"
        )


def read_trajectory(path: Path) -> list[dict[str, float]]:
    """Parse a trajectory CSV back into numeric rows."""
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"no trajectory at {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    return [{key: float(value) for key, value in row.items()} for row in rows]


# ---------------------------------------------------------------------------
# Data preparation
# ---------------------------------------------------------------------------


@dataclass
class PreparedData:
    train: LabeledDataset
    test: LabeledDataset
    d_inp_analytic: Optional[float]
    d_inp_analytic_se: float = 0.0
    d_inp_source: str = "knn"


def prepare_data(block: DatasetBlock, seeds: dict[str, int]) -> PreparedData:
    """Generate or load the dataset and its analytic input divergence, if any."""
    n = block.samples_per_class
    analytic_se = 0.0
    if block.kind == "mnist":
        train_set = load_mnist(Path(block.train_images), Path(block.train_labels))
        test_set = load_mnist(Path(block.test_images), Path(block.test_labels))
        return PreparedData(train_set, test_set, None)
    if block.kind == "gaussian":
        full = gen_gaussian_pair(GaussianSpec(block.dimension, block.shift, n), seeds["data"])
        analytic = full.analytic_divergence
    elif block.kind == "binary_image":
        spec = BinaryImageSpec(block.side, block.flip_prob)
        full = gen_binary_image(spec, n, seeds["data"])
        if block.side <= EXACT_MAX_SIDE:
            analytic = full.analytic_divergence
        else:
            oracle = binary_image_analytic_kl(
                spec, "monte_carlo", n_samples=block.oracle_samples, seed=seeds["oracle"]
            )
            analytic, analytic_se = oracle.value, oracle.standard_error
    else:
        spec = YinYangSpec(block.big_radius, block.dot_radius, n)
        full = gen_yin_yang(spec, seeds["data"])
        analytic = None
    train_set, test_set = full.split(block.test_fraction, seeds["split"])
    source = "analytic" if analytic is not None else "knn"
    return PreparedData(train_set, test_set, analytic, analytic_se, source)


def _build_network(config: ExperimentConfig, data: PreparedData, seeds: dict[str, int]):
    dims = config.model.layer_dims(data.train.dimension, data.train.class_count)
    training = config.training.to_training_config(seeds["shuffle"])
    if config.model.kind == "spiking":
        if config.dataset.kind == "gaussian":
            raise ConfigurationError("spiking models need features in [0, 1]; gaussian data is unbounded")
        snn_cfg = config.snn_config(training, seeds["encode"])
        return init_spiking_network(dims, snn_cfg, seeds["init"]), training
    return init_network(dims, seeds["init"]), training


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    output_dir: Path
    model: str = ""
    dataset: str = ""
    d_inp: float = math.nan
    final: Optional[EpochRecord] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.exit_code == EXIT_OK


@dataclass
class _Manifest:
    path: Path
    content: dict[str, Any] = field(default_factory=dict)

    def write(self, **updates) -> None:
        self.content.update(updates)
        self.path.write_text(json.dumps(self.content, indent=2, default=str), encoding="utf-8")


def _accuracy(net, dataset: LabeledDataset) -> float:
    return float(np.mean(net.predict(dataset.features) == dataset.labels))


def execute(config: ExperimentConfig) -> RunResult:
    """Run one validated experiment; errors propagate to the caller."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / FAILED_MARKER).unlink(missing_ok=True)
    seeds = derive_component_seeds(config.seed)
    manifest = _Manifest(out / MANIFEST)
    manifest.write(
        version=__version__,
        status="running",
        config=config.model_dump(),
        master_seed=config.seed,
        seeds=seeds,
        evaluation_split=config.estimation.split,
    )

    data = prepare_data(config.dataset, seeds)
    if config.dataset.export_csv:
        data.train.to_csv(out / "train.csv")
        data.test.to_csv(out / "test.csv")
    evaluation = data.test if config.estimation.split == "test" else data.train
    sampled = evaluation.subsample_per_class(config.estimation.max_per_class, seeds["estimator"])
    knn_cfg = config.estimation.to_knn_config(seeds["estimator"])

    input_estimate = class_conditional_divergence(
        ClassConditionalBundle.from_dataset(sampled), knn_cfg, seeds["noise"]
    )
    d_inp = data.d_inp_analytic if data.d_inp_analytic is not None else input_estimate.average
    logger.info(
        "D_inp: analytic %s, kNN estimate %.3f bits (k=%d); using %.3f bits",
        "n/a" if data.d_inp_analytic is None else f"{data.d_inp_analytic:.3f}",
        input_estimate.average,
        input_estimate.k_used,
        d_inp,
    )
    manifest.write(
        d_inp_bits=d_inp,
        d_inp_source=data.d_inp_source,
        d_inp_analytic_bits=data.d_inp_analytic,
        d_inp_analytic_se=data.d_inp_analytic_se,
        d_inp_knn_bits=input_estimate.average,
        d_inp_knn_k=input_estimate.k_used,
        d_inp_knn_dimension=input_estimate.dimension,
        train_size=data.train.size,
        test_size=data.test.size,
        evaluation_per_class=sampled.class_counts().tolist(),
    )

    net, training = _build_network(config, data, seeds)
    spiking = config.model.kind == "spiking"
    region = AchievableRegion(d_inp) if d_inp > 0 else None
    tol = config.analysis.region_tol_bits
    log = TrajectoryLog(out / TRAJECTORY_CSV, data.train.class_count)

    def evaluate(epoch: int, current, _loss: float = math.nan) -> None:
        started = time.perf_counter()
        rates = per_class_error_rates(
            current.predict(evaluation.features), evaluation.labels, evaluation.class_count
        )
        bundle = ClassConditionalBundle.from_dataset(sampled, current.represent, discrete=spiking)
        divergence = class_conditional_divergence(bundle, knn_cfg, seeds["noise"])
        point = evidence_error_point(rates, divergence.average, epoch)
        status = region_check(point, region, tol) if region else RegionStatus.INSIDE
        if point.d_theta > d_inp + tol:
            logger.warning(
                "epoch %d: D_theta %.3f exceeds D_inp %.3f by more than %.1f bits",
                epoch,
                point.d_theta,
                d_inp,
                tol,
            )
        record = EpochRecord(
            epoch=epoch,
            train_acc=_accuracy(current, data.train),
            test_acc=_accuracy(current, data.test),
            d_theta_bits=point.d_theta,
            p_theta_bits=point.p_theta,
            k_used=divergence.k_used,
            alpha=rates.alpha.tolist(),
            beta=rates.beta.tolist(),
            d_class=divergence.per_class,
            wall_ms=(time.perf_counter() - started) * 1000.0,
            region=status.value,
        )
        log.append(record)
        logger.info(
            "epoch %d: test acc %.4f, D_theta %.3f, P_theta %.3f bits (k=%d, %s)",
            epoch,
            record.test_acc,
            record.d_theta_bits,
            record.p_theta_bits,
            record.k_used,
            record.region,
        )

    evaluate(0, net)
    if spiking:
        net = snn_train(net, data.train, epoch_hook=evaluate)
    else:
        net = train(net, data.train, training, epoch_hook=evaluate)
    log.write_json(out / TRAJECTORY_JSON)
    save_snapshot(net, out / f"model{snapshot_suffix(net)}")

    final = log.records[-1]
    analysis: dict[str, Any] = {
        "d_inp_bits": d_inp,
        "final": asdict(final),
        "region": final.region,
    }
    if config.dataset.kind == "gaussian":
        analysis["bayes_distance"] = distance_to_envelope(final.alpha[0], final.beta[0], config.dataset.shift)
    votes = []
    for point in majority_vote_error_curve(
        net,
        evaluation,
        config.analysis.vote_n_values,
        config.analysis.vote_groups_per_class,
        seeds["bootstrap"],
    ):
        votes.append(
            {
                "n": point.n,
                "accuracy": point.rates.accuracy,
                "error": point.error,
                "p_theta_bits": error_exponent(point.rates),
                "d_theta_bits": final.d_theta_bits,
            }
        )
    analysis["votes"] = votes
    if config.analysis.noise_sigmas:
        bundle = ClassConditionalBundle.from_dataset(sampled, net.represent, discrete=spiking)
        sweep = noise_sweep(bundle, config.analysis.noise_sigmas, knn_cfg, seeds["noise"])
        analysis["noise"] = [{"sigma": s, "d_theta_bits": d} for s, d in sweep]
    (out / ANALYSIS).write_text(json.dumps(analysis, indent=2), encoding="utf-8")
    manifest.write(status="completed", epochs_logged=len(log.records))
    emit_plots(out)
    return RunResult(
        exit_code=EXIT_OK,
        output_dir=out,
        model=config.model.kind,
        dataset=config.dataset.kind,
        d_inp=d_inp,
        final=final,
    )


def run_config(config: ExperimentConfig) -> RunResult:
    """:func:`execute` with failures turned into an exit code and a FAILED marker."""
    out = Path(config.output_dir)
    try:
        return execute(config)
    except (EvidencePlaneError, OSError, ArithmeticError, ValueError) as e:
        code = exit_code_for(e)
        logger.error("Run in %s failed: %s", out, e, exc_info=True)
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / FAILED_MARKER).write_text(f"{type(e).__name__}: {e}\n", encoding="utf-8")
        except OSError:
            logger.error("Could not write failure marker in %s", out)
        return RunResult(
            exit_code=code,
            output_dir=out,
            model=config.model.kind,
            dataset=config.dataset.kind,
            message=str(e),
        )


def run_experiment(
    config_path: Union[str, Path],
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> RunResult:
    """Load a config file and run it."""
    try:
        config = load_config(Path(config_path), seed=seed, output_dir=output_dir)
    except ConfigurationError as e:
        logger.error("%s", e)
        return RunResult(exit_code=exit_code_for(e), output_dir=Path(output_dir or "."), message=str(e))
    return run_config(config)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def _suite_job(config_path: str, seed: Optional[int], output_dir: Optional[str]) -> dict[str, Any]:
    result = run_experiment(config_path, seed=seed, output_dir=output_dir)
    final = result.final
    return {
        "run": Path(config_path).stem,
        "model": result.model,
        "dataset": result.dataset,
        "d_inp": result.d_inp,
        "d_theta": final.d_theta_bits if final else math.nan,
        "p_theta": final.p_theta_bits if final else math.nan,
        "test_acc": final.test_acc if final else math.nan,
        "status": "ok" if result.ok else f"failed({result.exit_code})",
    }


def run_suite(
    directory: Union[str, Path],
    output_dir: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    workers: int = 1,
) -> Path:
    """Run every ``*.cfg`` in ``directory`` and write ``summary.csv``.

    With ``output_dir`` each run writes to ``output_dir/<config stem>``;
    otherwise runs use their configured directories, which must be distinct.
    """
    directory = Path(directory)
    configs = sorted(directory.glob("*.cfg"))
    if not configs:
        raise ConfigurationError(f"no *.cfg files in {directory}")
    root = Path(output_dir) if output_dir is not None else directory
    targets: list[Optional[str]] = []
    if output_dir is not None:
        targets = [str(root / path.stem) for path in configs]
    else:
        seen: dict[str, Path] = {}
        for path in configs:
            try:
                target = str(Path(load_config(path).output_dir).resolve())
            except ConfigurationError:
                targets.append(None)
                continue
            if target in seen:
                raise ConfigurationError(
                    f"{path.name} and {seen[target].name} share the output directory {target}"
                )
            seen[target] = path
            targets.append(None)

    jobs = [(str(path), seed, target) for path, target in zip(configs, targets)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_suite_job, *zip(*jobs)))
    else:
        rows = [_suite_job(*job) for job in jobs]

    root.mkdir(parents=True, exist_ok=True)
    summary = root / SUMMARY_CSV
    with open(summary, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {k: repr(v) if isinstance(v, float) else v for k, v in row.items()}
            )
    failed = sum(row["status"] != "ok" for row in rows)
    logger.info("Suite %s: %d runs, %d failed; summary at %s", directory, len(rows), failed, summary)
    return summary


# ---------------------------------------------------------------------------
# Plot tables
# ---------------------------------------------------------------------------


def _write_tsv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, delimiter="\t", lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def emit_plots(run_dir: Union[str, Path]) -> dict[str, Path]:
    """Write the plot-ready TSV tables of a completed or partial run."""
    run_dir = Path(run_dir)
    trajectory = read_trajectory(run_dir / TRAJECTORY_CSV)
    manifest_path = run_dir / MANIFEST
    if not manifest_path.exists():
        raise IngestionError(f"no manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    analysis_path = run_dir / ANALYSIS
    analysis = json.loads(analysis_path.read_text(encoding="utf-8")) if analysis_path.exists() else {}
    config = ExperimentConfig.model_validate(manifest["config"])
    d_inp = float(manifest.get("d_inp_bits", math.nan))
    written: dict[str, Path] = {}

    written["plane"] = _write_tsv(
        run_dir / "plane.tsv",
        ["epoch", "p_theta_bits", "d_theta_bits"],
        ([int(r["epoch"]), r["p_theta_bits"], r["d_theta_bits"]] for r in trajectory),
    )

    top = max([d_inp, *(r["d_theta_bits"] for r in trajectory), *(r["p_theta_bits"] for r in trajectory)])
    top = top if math.isfinite(top) and top > 0 else 1.0
    samples = np.linspace(0.0, 1.1 * top, REGION_SAMPLES)
    written["region"] = _write_tsv(
        run_dir / "region.tsv",
        ["d_bits", "p_equals_d_bits", "d_inp_bits"],
        ([d, d, d_inp] for d in samples),
    )

    n_values = config.analysis.vote_n_values
    final_d = trajectory[-1]["d_theta_bits"] if trajectory else math.nan
    stein_rows = []
    if math.isfinite(d_inp) and math.isfinite(final_d):
        for (n, b_inp), (_, b_theta) in zip(
            stein_line(max(d_inp, 0.0), n_values), stein_line(max(final_d, 0.0), n_values)
        ):
            stein_rows.append([n, b_inp, b_theta])
    written["stein"] = _write_tsv(
        run_dir / "stein.tsv", ["n", "beta_d_inp", "beta_d_theta"], stein_rows
    )

    if config.dataset.kind == "gaussian":
        written["envelope"] = _write_tsv(
            run_dir / "envelope.tsv",
            ["alpha", "beta_star", "diagonal"],
            np_plane_data(config.dataset.shift, config.analysis.alpha_grid()),
        )
    if analysis.get("votes"):
        written["votes"] = _write_tsv(
            run_dir / "votes.tsv",
            ["n", "accuracy", "error", "p_theta_bits", "d_theta_bits"],
            ([v["n"], v["accuracy"], v["error"], v["p_theta_bits"], v["d_theta_bits"]] for v in analysis["votes"]),
        )
    if analysis.get("noise"):
        written["noise"] = _write_tsv(
            run_dir / "noise.tsv",
            ["sigma", "d_theta_bits"],
            ([row["sigma"], row["d_theta_bits"]] for row in analysis["noise"]),
        )
    logger.debug("Plot tables for %s: %s", run_dir, sorted(written))
    return written


def plots_exit_code(run_dir: Union[str, Path]) -> int:
    try:
        emit_plots(run_dir)
    except (IngestionError, OSError) as e:
        logger.error("%s", e)
        return EXIT_DATA
    return EXIT_OK
