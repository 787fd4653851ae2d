from typing import Callable, Dict, Mapping, Optional

from app.corpus.manifest import Manifest, RecordingMeta
from app.eval.roc import MetricsReport, evaluate
from app.eval.scorefile import ScoreFile
from app.exceptions import EvalError
from app.schema import Gender


AGE_SPLIT = 40

Slicer = Callable[[RecordingMeta], Optional[str]]


def by_gender(meta: RecordingMeta) -> Optional[str]:
    return {Gender.MALE: "male", Gender.FEMALE: "female"}.get(meta.gender)


def by_age(meta: RecordingMeta) -> Optional[str]:
    if meta.age is None:
        return None
    return f"age<{AGE_SPLIT}" if meta.age < AGE_SPLIT else f"age>={AGE_SPLIT}"


SLICERS: Dict[str, Slicer] = {"gender": by_gender, "age": by_age}


def subgroup_metrics(
    scores: ScoreFile,
    labels: Mapping[str, int],
    manifest: Manifest,
    slicer: Slicer,
) -> Dict[str, MetricsReport]:
    """Full report per group of scored recordings; recordings the slicer maps to None are skipped."""
    index = {e.id: e for e in manifest.entries}
    members: Dict[str, list] = {}
    for rec_id in scores.ids:
        meta = index.get(rec_id)
        group = slicer(meta) if meta is not None else None
        if group is not None:
            members.setdefault(group, []).append(rec_id)

    reports: Dict[str, MetricsReport] = {}
    for group in sorted(members):
        try:
            reports[group] = evaluate(scores.subset(members[group]), labels)
        except EvalError as e:
            if e.code != "SINGLE_CLASS":
                raise
            raise EvalError(
                f"group {group!r} holds a single class ({len(members[group])} recordings)",
                code="SINGLE_CLASS_GROUP",
            ) from e
    return reports
