"""Experiment grid: configuration, per-setting pipelines, persistence.

Every run derives its randomness from the master seed through named
sub-streams (``derive_seed(seed, label)``): "synth:a" / "synth:b" for
the corpus, "reorder" for segment shuffles, "aae:init" / "aae:train" /
"aae:generate" for the generator, and "clf:init" / "clf:train" for the
classifier. Cells of the (setting, seed) grid are independent and may
run in parallel processes; BLAS pools are pinned to one thread inside a
cell so results do not depend on the worker layout.

Output tree: ``resolved_config.json``, ``results.csv``, ``summary.csv``,
``summary.txt``, optional ``failures.csv``, and one
``runs/<setting>_seed<seed>/`` directory per cell holding
``report.json``, ``run_record.json``, ``history.csv``, checkpoints,
``test_windows.sha256``, attention traces, and (for augmented settings)
``augmented_stream.csv`` plus ``aae_loss.csv``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import multiprocessing
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - dependency is declared
    from contextlib import nullcontext

    def threadpool_limits(limits):
        return nullcontext()

from .aae import AaeConfig, AaeTrainConfig, build_aae, generate_dataset, train_aae
from .checkpoint import save_checkpoint
from .ingest import (
    GENERATED_CLASS_IDS,
    LABELS,
    CombineSpec,
    ClassWaveform,
    LabeledStream,
    SegmentLengthDist,
    StreamError,
    SynthWorkerSpec,
    combine_workers,
    compute_stats,
    load_stream,
    median_gap_ms,
    normalize,
    save_stream,
    segment_length_distribution,
    segment_runs,
    synth_worker,
)
from .metrics import MetricsReport, ResultsTable, aggregate_runs, evaluate
from .reorder import RdssConfig, reorder_as, reorder_rdss, reorder_rs
from .rng import Prng, derive_seed
from .transformer import (
    AttentionTrace,
    HarTransformer,
    TrainConfig,
    TransformerConfig,
    predict,
    train,
)
from .windowing import WindowConfig, WindowedDataset, concat_datasets, make_windows, split_stream

ALL_SETTINGS = ("AAE-RS", "AAE-AS", "AAE-RDSS", "ORIG-RS", "ORIG-AS", "WDA")
GENERATED_SETTINGS = ("AAE-RS", "AAE-AS", "AAE-RDSS")
MODES = ("append", "replace")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SplitConfig:
    val_frac: float = 0.1
    test_frac: float = 0.2


@dataclass(frozen=True)
class DataConfig:
    """Two workers: either stream CSV paths or synthetic specs."""

    paths: tuple[str, str] | None = None
    synth_a: SynthWorkerSpec | None = None
    synth_b: SynthWorkerSpec | None = None

    def validate(self) -> "DataConfig":
        has_paths = self.paths is not None
        has_synth = self.synth_a is not None and self.synth_b is not None
        if has_paths == has_synth:
            raise ConfigError("data: provide either 'paths' or both synth specs")
        return self


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig
    combine: CombineSpec = CombineSpec(worker_ids=(1, 2))
    window: WindowConfig = WindowConfig()
    split: SplitConfig = SplitConfig()
    settings: tuple[str, ...] = ALL_SETTINGS
    mode: str = "append"
    generated_frames: int = 20_000
    seeds: tuple[int, ...] = (1, 2, 3)
    transformer: TransformerConfig = TransformerConfig()
    train: TrainConfig = TrainConfig()
    aae: AaeConfig = AaeConfig()
    aae_train: AaeTrainConfig = AaeTrainConfig()
    rdss: RdssConfig = RdssConfig()
    out_dir: str = "grid_out"

    def validate(self) -> "ExperimentConfig":
        self.data.validate()
        if not self.settings:
            raise ConfigError("settings: need at least one")
        for s in self.settings:
            if s not in ALL_SETTINGS:
                raise ConfigError(f"settings: unknown setting '{s}'")
        if not self.seeds:
            raise ConfigError("seeds: need at least one")
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}, got '{self.mode}'")
        if any(s in GENERATED_SETTINGS for s in self.settings) and self.generated_frames < 1:
            raise ConfigError("generated_frames: must be > 0 for AAE settings")
        if self.aae.window_len != self.window.window_len:
            raise ConfigError("aae.window_len must equal window.window_len")
        if self.transformer.window_len != self.window.window_len:
            raise ConfigError("transformer.window_len must equal window.window_len")
        if self.transformer.classes != len(LABELS):
            raise ConfigError(f"transformer.classes must be {len(LABELS)}")
        return self


# ---------------------------------------------------------------------------
# config <-> JSON


def _check_keys(section: dict, allowed: set[str], ctx: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{ctx}: unknown key '{key}'")


def _simple_from_dict(cls, section: dict, ctx: str):
    """Build a flat dataclass, rejecting unknown keys, filling defaults."""
    names = [f.name for f in fields(cls)]
    _check_keys(section, set(names), ctx)
    kwargs = dict(section)
    for name in ("worker_ids", "seeds"):
        if name in kwargs and isinstance(kwargs[name], list):
            kwargs[name] = tuple(kwargs[name])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{ctx}: {e}") from None


def _synth_from_dict(section: dict, ctx: str) -> SynthWorkerSpec:
    _check_keys(
        section, {"waveforms", "lengths", "duration_frames", "sample_rate_hz", "seed"}, ctx
    )
    try:
        waveforms = {
            int(op): _simple_from_dict(ClassWaveform, wf, f"{ctx}.waveforms[{op}]")
            for op, wf in section["waveforms"].items()
        }
        lengths = {
            int(op): _simple_from_dict(SegmentLengthDist, d, f"{ctx}.lengths[{op}]")
            for op, d in section["lengths"].items()
        }
        return SynthWorkerSpec(
            waveforms=waveforms,
            lengths=lengths,
            duration_frames=section["duration_frames"],
            sample_rate_hz=section.get("sample_rate_hz", 30.0),
            seed=section.get("seed", 0),
        )
    except KeyError as e:
        raise ConfigError(f"{ctx}: missing key {e}") from None


def synth_spec_to_dict(spec: SynthWorkerSpec) -> dict:
    return {
        "waveforms": {str(op): dataclasses.asdict(wf) for op, wf in sorted(spec.waveforms.items())},
        "lengths": {str(op): dataclasses.asdict(d) for op, d in sorted(spec.lengths.items())},
        "duration_frames": spec.duration_frames,
        "sample_rate_hz": spec.sample_rate_hz,
        "seed": spec.seed,
    }


def load_synth_spec(path: str | Path) -> SynthWorkerSpec:
    with Path(path).open() as fh:
        return _synth_from_dict(json.load(fh), str(path)).validate()


def config_from_dict(raw: dict) -> ExperimentConfig:
    _check_keys(raw, {f.name for f in fields(ExperimentConfig)}, "config")
    if "data" not in raw:
        raise ConfigError("config: missing required section 'data'")
    data_raw = dict(raw["data"])
    _check_keys(data_raw, {"paths", "synth_a", "synth_b"}, "data")
    data = DataConfig(
        paths=tuple(data_raw["paths"]) if data_raw.get("paths") else None,
        synth_a=_synth_from_dict(data_raw["synth_a"], "data.synth_a")
        if "synth_a" in data_raw
        else None,
        synth_b=_synth_from_dict(data_raw["synth_b"], "data.synth_b")
        if "synth_b" in data_raw
        else None,
    )
    sections = {
        "combine": CombineSpec,
        "window": WindowConfig,
        "split": SplitConfig,
        "transformer": TransformerConfig,
        "train": TrainConfig,
        "aae": AaeConfig,
        "aae_train": AaeTrainConfig,
        "rdss": RdssConfig,
    }
    kwargs: dict = {"data": data}
    for name, cls in sections.items():
        if name in raw:
            kwargs[name] = _simple_from_dict(cls, raw[name], name)
    for name in ("settings", "seeds"):
        if name in raw:
            kwargs[name] = tuple(raw[name])
    for name in ("mode", "generated_frames", "out_dir"):
        if name in raw:
            kwargs[name] = raw[name]
    try:
        return ExperimentConfig(**kwargs).validate()
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None


def config_to_dict(cfg: ExperimentConfig) -> dict:
    data: dict = {}
    if cfg.data.paths is not None:
        data["paths"] = list(cfg.data.paths)
    if cfg.data.synth_a is not None:
        data["synth_a"] = synth_spec_to_dict(cfg.data.synth_a)
    if cfg.data.synth_b is not None:
        data["synth_b"] = synth_spec_to_dict(cfg.data.synth_b)
    out = {"data": data}
    for name in (
        "combine",
        "window",
        "split",
        "transformer",
        "train",
        "aae",
        "aae_train",
        "rdss",
    ):
        out[name] = dataclasses.asdict(getattr(cfg, name))
    out["combine"]["worker_ids"] = list(cfg.combine.worker_ids)
    out["settings"] = list(cfg.settings)
    out["seeds"] = list(cfg.seeds)
    out["mode"] = cfg.mode
    out["generated_frames"] = cfg.generated_frames
    out["out_dir"] = cfg.out_dir
    return out


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load, default-fill, and validate a JSON experiment config."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open() as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from None
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# per-setting pipeline


@dataclass
class RunRecord:
    setting: str
    seed: int
    report: MetricsReport | None
    run_dir: str
    artifacts: dict[str, str]
    stage_seeds: dict[str, int]
    error: str | None = None
    traces: list[AttentionTrace] | None = None


@dataclass(frozen=True)
class PreparedData:
    train: LabeledStream
    val: LabeledStream
    test: LabeledStream
    gap_ms: int


def _prepare_data(cfg: ExperimentConfig, seed: int) -> PreparedData:
    """Combine the two workers, split chronologically, z-score on train stats."""
    if cfg.data.paths is not None:
        a, b = (load_stream(p) for p in cfg.data.paths)
    else:
        a = synth_worker(
            replace(cfg.data.synth_a, seed=cfg.data.synth_a.seed ^ derive_seed(seed, "synth:a"))
        )
        b = synth_worker(
            replace(cfg.data.synth_b, seed=cfg.data.synth_b.seed ^ derive_seed(seed, "synth:b"))
        )
    combined = combine_workers(a, b)
    train_s, val_s, test_s = split_stream(combined, cfg.split.val_frac, cfg.split.test_frac)
    stats = compute_stats(train_s)
    return PreparedData(
        train=normalize(train_s, stats),
        val=normalize(val_s, stats),
        test=normalize(test_s, stats),
        gap_ms=median_gap_ms(train_s),
    )


def _class_mix(stream: LabeledStream) -> dict[int, float]:
    """Frame shares over the generated classes, renormalised."""
    counts = {op: int(np.sum(stream.labels == op)) for op in GENERATED_CLASS_IDS}
    total = sum(counts.values())
    if total == 0:
        raise StreamError("training stream has no frames in classes 100..1000")
    return {op: c / total for op, c in counts.items() if c > 0}


def _reorder(segments, strategy: str, seed: int, group_count: int) -> LabeledStream:
    if strategy == "RS":
        return reorder_rs(segments, seed)
    if strategy == "AS":
        return reorder_as(segments)
    if strategy == "RDSS":
        return reorder_rdss(segments, RdssConfig(group_count=group_count, seed=seed))
    raise ConfigError(f"unknown reorder strategy '{strategy}'")


def dataset_sha256(ds: WindowedDataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.windows).tobytes())
    h.update(np.ascontiguousarray(ds.labels).tobytes())
    return h.hexdigest()


def export_traces(records: list[RunRecord], out_dir: str | Path) -> list[Path]:
    """One matrix file per (setting, seed, period, layer, head)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rec in records:
        for tr in rec.traces or []:
            name = f"trace_{rec.setting}_{rec.seed}_{tr.period}_L{tr.layer}_H{tr.head}"
            path = out_dir / name
            np.savetxt(path, tr.weights, fmt="%.10g", delimiter=" ")
            written.append(path)
    return written


def _write_history(path: Path, history: list[tuple[int, float, float, float]]) -> None:
    with path.open("w") as fh:
        fh.write("epoch,train_loss,val_loss,lr\n")
        for epoch, tl, vl, lr in history:
            fh.write(f"{epoch},{tl!r},{vl!r},{lr!r}\n")


def _write_loss_curve(path: Path, curve: list[float]) -> None:
    with path.open("w") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(curve, start=1):
            fh.write(f"{epoch},{loss!r}\n")


def run_setting(
    cfg: ExperimentConfig, setting: str, seed: int, out_dir: str | Path | None = None
) -> RunRecord:
    """Execute one (setting, seed) cell and persist its artifacts."""
    if setting not in ALL_SETTINGS:
        raise ConfigError(f"unknown setting '{setting}'")
    run_dir = Path(out_dir) if out_dir is not None else Path(cfg.out_dir) / "runs" / f"{setting}_seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    stage_seeds = {
        label: derive_seed(seed, label)
        for label in (
            "synth:a",
            "synth:b",
            "reorder",
            "aae:init",
            "aae:train",
            "aae:generate",
            "clf:init",
            "clf:train",
        )
    }
    artifacts: dict[str, str] = {}

    with threadpool_limits(limits=1):
        data = _prepare_data(cfg, seed)
        real_train = make_windows(data.train, cfg.window, setting, seed)
        val_ds = make_windows(data.val, cfg.window, setting, seed)
        test_ds = make_windows(data.test, cfg.window, setting, seed)

        test_hash = dataset_sha256(test_ds)
        (run_dir / "test_windows.sha256").write_text(test_hash + "\n")
        artifacts["test_windows_hash"] = "test_windows.sha256"

        strategy = setting.split("-", 1)[1] if "-" in setting else None
        aug_stream = None
        if setting == "WDA":
            train_ds = real_train
        elif setting.startswith("ORIG-"):
            aug_stream = _reorder(
                segment_runs(data.train), strategy, stage_seeds["reorder"], cfg.rdss.group_count
            )
            train_ds = make_windows(aug_stream, cfg.window, setting, seed)
        else:  # AAE-*
            keep = real_train.labels < len(GENERATED_CLASS_IDS)
            if not np.any(keep):
                raise StreamError("no training windows in classes 100..1000 for the AAE")
            aae_model = build_aae(cfg.aae, stage_seeds["aae:init"])
            curve = train_aae(
                aae_model,
                real_train.windows[keep],
                real_train.labels[keep],
                replace(cfg.aae_train, seed=stage_seeds["aae:train"]),
            )
            _write_loss_curve(run_dir / "aae_loss.csv", curve)
            artifacts["aae_loss"] = "aae_loss.csv"
            save_checkpoint(
                run_dir / "aae.ckpt",
                "aae",
                dataclasses.asdict(cfg.aae),
                aae_model.named_params(),
            )
            artifacts["aae_checkpoint"] = "aae.ckpt"

            length_dist = {
                op: d
                for op, d in segment_length_distribution(segment_runs(data.train)).items()
                if op in GENERATED_CLASS_IDS
            }
            segments = generate_dataset(
                aae_model,
                length_dist,
                _class_mix(data.train),
                cfg.generated_frames,
                Prng(stage_seeds["aae:generate"]),
                gap_ms=data.gap_ms,
            )
            aug_stream = _reorder(
                segments, strategy, stage_seeds["reorder"], cfg.rdss.group_count
            )
            gen_ds = make_windows(aug_stream, cfg.window, setting, seed)
            train_ds = (
                concat_datasets([real_train, gen_ds], setting, seed)
                if cfg.mode == "append"
                else gen_ds
            )

        if aug_stream is not None:
            save_stream(aug_stream, run_dir / "augmented_stream.csv")
            artifacts["augmented_stream"] = "augmented_stream.csv"

        clf = HarTransformer(cfg.transformer, stage_seeds["clf:init"])
        probe = val_ds.windows[: min(8, len(val_ds))]
        result = train(
            clf,
            train_ds,
            val_ds,
            replace(cfg.train, seed=stage_seeds["clf:train"]),
            probe=probe,
        )
        _write_history(run_dir / "history.csv", result.history)
        artifacts["history"] = "history.csv"
        save_checkpoint(
            run_dir / "classifier.ckpt",
            "transformer",
            dataclasses.asdict(cfg.transformer),
            clf.named_params(),
        )
        artifacts["classifier_checkpoint"] = "classifier.ckpt"

        pred = predict(clf, test_ds.windows)
        report = evaluate(test_ds.labels, pred, setting, seed, k=cfg.transformer.classes)

    record = RunRecord(
        setting=setting,
        seed=seed,
        report=report,
        run_dir=str(run_dir),
        artifacts=artifacts,
        stage_seeds=stage_seeds,
        traces=result.traces,
    )
    trace_paths = export_traces([record], run_dir / "traces")
    artifacts["traces"] = "traces"
    record.traces = None  # written to disk; keep the record light for IPC

    (run_dir / "report.json").write_text(
        json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2) + "\n"
    )
    artifacts["report"] = "report.json"
    record_doc = {
        "setting": setting,
        "seed": seed,
        "metrics": dataclasses.asdict(report),
        "artifacts": artifacts,
        "stage_seeds": stage_seeds,
        "trace_files": [p.name for p in trace_paths],
        "best_epoch": result.best_epoch,
        "epochs_run": result.epochs_run,
        "config": config_to_dict(cfg),
    }
    (run_dir / "run_record.json").write_text(
        json.dumps(record_doc, sort_keys=True, indent=2) + "\n"
    )
    return record


# ---------------------------------------------------------------------------
# grid


@dataclass
class GridResult:
    records: list[RunRecord]
    table: ResultsTable | None
    failed: list[RunRecord]

    @property
    def ok(self) -> bool:
        return not self.failed


def _cell_worker(args: tuple) -> RunRecord:
    cfg, setting, seed = args
    try:
        return run_setting(cfg, setting, seed)
    except Exception as e:  # recorded per-cell; other cells continue
        return RunRecord(
            setting=setting,
            seed=seed,
            report=None,
            run_dir=str(Path(cfg.out_dir) / "runs" / f"{setting}_seed{seed}"),
            artifacts={},
            stage_seeds={},
            error=f"{type(e).__name__}: {e}",
        )


def run_grid(cfg: ExperimentConfig, jobs: int = 1) -> GridResult:
    """Execute every (setting, seed) cell; failures never abort the grid."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.json").write_text(
        json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n"
    )
    cells = [(cfg, setting, seed) for setting in cfg.settings for seed in cfg.seeds]
    if jobs > 1:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(processes=jobs) as pool:
            records = pool.map(_cell_worker, cells)
    else:
        records = [_cell_worker(c) for c in cells]

    done = [r for r in records if r.error is None]
    failed = [r for r in records if r.error is not None]

    with (out / "results.csv").open("w") as fh:
        fh.write("setting,seed,accuracy,precision,recall,macro_f1\n")
        for rec in done:
            fh.write(rec.report.csv_line() + "\n")
    if failed:
        with (out / "failures.csv").open("w") as fh:
            fh.write("setting,seed,error\n")
            for rec in failed:
                msg = rec.error.replace("\n", " ").replace(",", ";")
                fh.write(f"{rec.setting},{rec.seed},{msg}\n")

    table = None
    if done:
        table = aggregate_runs([r.report for r in done])
        (out / "summary.csv").write_text(table.render_csv())
        (out / "summary.txt").write_text(table.render_text())
    return GridResult(records=records, table=table, failed=failed)


def summary_from_results_csv(path: str | Path) -> ResultsTable:
    """Rebuild the aggregate table from the persisted per-run lines."""
    reports = []
    with Path(path).open() as fh:
        header = fh.readline().strip().split(",")
        if header != ["setting", "seed", "accuracy", "precision", "recall", "macro_f1"]:
            raise ValueError(f"{path}: unexpected results header {header}")
        for line in fh:
            setting, seed, acc, prec, rec, f1 = line.strip().split(",")
            reports.append(
                MetricsReport(
                    setting=setting,
                    seed=int(seed),
                    accuracy=float(acc),
                    precision=float(prec),
                    recall=float(rec),
                    macro_f1=float(f1),
                )
            )
    return aggregate_runs(reports)
