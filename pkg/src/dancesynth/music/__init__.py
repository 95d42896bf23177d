"""Music feature packs, encoder windows, beat grids, and the synthetic corpus."""

from .features import (CHROMA_RATE, FINE_RATE, N_CHANNELS, BeatGrid, MusicFeaturePack, beat_times,
                       load_feature_pack, save_feature_pack, window)
from .synthetic import (MotionSet, SyntheticConfig, SyntheticCorpus, generate_motion_set, generate_synthetic_corpus,
                        load_corpus, load_motion_set, make_catalog, performance_junctions, render_performance,
                        save_corpus, save_motion_set)

__all__ = [
    "CHROMA_RATE", "FINE_RATE", "N_CHANNELS", "BeatGrid", "MotionSet", "MusicFeaturePack", "SyntheticConfig",
    "SyntheticCorpus", "beat_times", "generate_motion_set", "generate_synthetic_corpus", "load_corpus",
    "load_feature_pack", "load_motion_set", "make_catalog", "performance_junctions", "render_performance",
    "save_corpus", "save_feature_pack", "save_motion_set", "window",
]
