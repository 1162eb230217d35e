"""Ready-made experiment configurations.

``desk_grid_config`` is the full 6-setting x 3-seed grid at desk scale:
two synthetic 30k-frame workers, standard 300/150 windowing, and a
reduced model sized to finish the whole grid in well under half an hour
on a few cores. ``transition_probe_config`` is a smaller,
transition-heavy variant (short segments, 120-frame windows,
replace-mode augmentation) used to compare the random and ascending
orderings on transition-rich test data.
"""

from __future__ import annotations

from .aae import AaeConfig, AaeTrainConfig
from .experiment import DataConfig, ExperimentConfig, SplitConfig
from .ingest import (
    LABELS,
    ClassWaveform,
    CombineSpec,
    SegmentLengthDist,
    SynthWorkerSpec,
    default_synth_spec,
)
from .reorder import RdssConfig
from .transformer import TrainConfig, TransformerConfig
from .windowing import WindowConfig


def desk_grid_config(out_dir: str, seeds: tuple[int, ...] = (1, 2, 3)) -> ExperimentConfig:
    return ExperimentConfig(
        data=DataConfig(
            synth_a=default_synth_spec(30_000, seed=101),
            synth_b=default_synth_spec(30_000, seed=202),
        ),
        combine=CombineSpec(worker_ids=(1, 2)),
        window=WindowConfig(window_len=300, stride=150),
        split=SplitConfig(val_frac=0.1, test_frac=0.2),
        settings=("AAE-RS", "AAE-AS", "AAE-RDSS", "ORIG-RS", "ORIG-AS", "WDA"),
        mode="append",
        generated_frames=15_000,
        seeds=seeds,
        transformer=TransformerConfig(
            d_model=24, heads=2, layers=1, ffn_dim=48, dropout=0.1, window_len=300
        ),
        train=TrainConfig(
            lr_max=3e-3, lr_min=1e-4, max_epochs=14, batch_size=64,
            patience=4, min_delta=1e-3, seed=0,
        ),
        aae=AaeConfig(window_len=300, embed_dim=16, heads=2, latent_dim=8, kl_weight=0.001),
        aae_train=AaeTrainConfig(lr=1e-3, epochs=5, batch_size=32, seed=0),
        rdss=RdssConfig(group_count=16),
        out_dir=out_dir,
    )


def transition_heavy_spec(duration_frames: int, seed: int) -> SynthWorkerSpec:
    """Short segments everywhere, so most windows straddle activities."""
    waveforms, lengths = {}, {}
    for k, op in enumerate(LABELS.ids):
        waveforms[op] = ClassWaveform(
            freq_hz=0.5 + 0.3 * k,
            amplitude=1.0 + 0.2 * k,
            noise_std=0.12,
            offset=-1.5 + 0.3 * k,
        )
        lengths[op] = SegmentLengthDist(mean=60.0, std=15.0, min_len=25)
    lengths[8100] = SegmentLengthDist(mean=25.0, std=5.0, min_len=10)
    return SynthWorkerSpec(
        waveforms=waveforms, lengths=lengths, duration_frames=duration_frames, seed=seed
    )


def transition_probe_config(
    out_dir: str, seeds: tuple[int, ...], settings: tuple[str, ...] = ("AAE-RS", "AAE-AS")
) -> ExperimentConfig:
    # kl_weight well above the desk default: replace-mode generation decodes
    # fresh N(0, I) latents, so the posterior must be pulled onto the prior
    # for class conditioning to survive sampling.
    return ExperimentConfig(
        data=DataConfig(
            synth_a=transition_heavy_spec(8_000, seed=303),
            synth_b=transition_heavy_spec(8_000, seed=404),
        ),
        combine=CombineSpec(worker_ids=(1, 2)),
        window=WindowConfig(window_len=120, stride=60),
        split=SplitConfig(val_frac=0.1, test_frac=0.25),
        settings=settings,
        mode="replace",
        generated_frames=15_000,
        seeds=seeds,
        transformer=TransformerConfig(
            d_model=16, heads=2, layers=1, ffn_dim=32, dropout=0.1, window_len=120
        ),
        train=TrainConfig(
            lr_max=3e-3, lr_min=1e-4, max_epochs=30, batch_size=32,
            patience=6, min_delta=5e-4, seed=0,
        ),
        aae=AaeConfig(window_len=120, embed_dim=8, heads=2, latent_dim=4, kl_weight=0.02),
        aae_train=AaeTrainConfig(lr=3e-3, epochs=30, batch_size=32, seed=0),
        rdss=RdssConfig(group_count=16),
        out_dir=out_dir,
    )
