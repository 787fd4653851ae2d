from app.corpus.folds import assign_folds
from app.corpus.manifest import (
    Manifest,
    RecordingMeta,
    filter_subgroup,
    load_manifest,
    parse_manifest,
    write_manifest,
)
from app.corpus.synth import SynthSpec, generate_synthetic_corpus


__all__ = [
    "Manifest",
    "RecordingMeta",
    "SynthSpec",
    "assign_folds",
    "filter_subgroup",
    "generate_synthetic_corpus",
    "load_manifest",
    "parse_manifest",
    "write_manifest",
]
