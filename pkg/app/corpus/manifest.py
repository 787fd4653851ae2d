"""Recording manifests: parsing, validation, serialisation and slicing."""

import csv
import io
from collections import Counter
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.exceptions import ManifestError
from app.schema import LABEL_VALUES, Gender, Label, Split
from app.utils.files_utils import PathLike, atomic_write_text


MANIFEST_HEADER = ("id", "path", "label", "gender", "age", "fold", "split")
MIN_AGE = 15
MAX_AGE = 80
DEFAULT_K_FOLDS = 5


class RecordingMeta(BaseModel):
    """One row of a manifest."""

    model_config = ConfigDict(frozen=True)

    id: str = Field(..., min_length=1, description="Unique recording id")
    audio_path: Path = Field(..., description="Path to the PCM WAV file")
    label: Label
    gender: Gender = Gender.UNKNOWN
    age: Optional[int] = Field(None, ge=MIN_AGE, le=MAX_AGE)
    fold: Optional[int] = Field(None, ge=1)
    split: Split = Split.DEV

    @property
    def target(self) -> int:
        return self.label.target


class Manifest(BaseModel):
    """Ordered, immutable list of recordings with optional fold assignment."""

    model_config = ConfigDict(frozen=True)

    entries: Tuple[RecordingMeta, ...] = ()
    k_folds: int = Field(DEFAULT_K_FOLDS, ge=1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "Manifest":
        seen = set()
        for entry in self.entries:
            if entry.id in seen:
                raise ManifestError(f"duplicate id {entry.id!r}", code="DUPLICATE_ID")
            seen.add(entry.id)
            if entry.fold is not None and entry.fold > self.k_folds:
                raise ManifestError(
                    f"fold {entry.fold} of {entry.id!r} outside 1..{self.k_folds}",
                    code="INVALID_FIELD",
                )
        if any(e.fold is not None for e in self.dev):
            for fold in range(1, self.k_folds + 1):
                labels = {e.label for e in self.fold_entries(fold)}
                if labels != {Label.COVID, Label.NON_COVID}:
                    raise ManifestError(
                        f"fold {fold} must contain both covid and non_covid dev entries",
                        code="INVALID_FIELD",
                    )
        return self

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> List[str]:
        return [e.id for e in self.entries]

    @property
    def dev(self) -> List[RecordingMeta]:
        return [e for e in self.entries if e.split == Split.DEV]

    @property
    def test(self) -> List[RecordingMeta]:
        return [e for e in self.entries if e.split == Split.TEST]

    def labels(self) -> Dict[str, int]:
        """recording id -> 1 (covid) / 0 (non_covid)"""
        return {e.id: e.target for e in self.entries}

    def label_counts(self) -> Counter:
        return Counter(e.label for e in self.entries)

    def fold_entries(self, fold: int) -> List[RecordingMeta]:
        return [e for e in self.dev if e.fold == fold]

    def with_entries(self, entries: Iterable[RecordingMeta]) -> "Manifest":
        return Manifest(entries=tuple(entries), k_folds=self.k_folds)


def _parse_row(row: Dict[str, str], line: int, base_dir: Path) -> RecordingMeta:
    label = row["label"].strip()
    if label not in LABEL_VALUES:
        raise ManifestError(
            f"unknown label {label!r} (expected one of {', '.join(LABEL_VALUES)})",
            code="UNKNOWN_LABEL",
            line=line,
        )
    try:
        gender = Gender(row["gender"].strip() or Gender.UNKNOWN.value)
        split = Split(row["split"].strip())
        age = int(row["age"]) if row["age"].strip() else None
        fold = int(row["fold"]) if row["fold"].strip() else None
    except ValueError as e:
        raise ManifestError(str(e), code="INVALID_FIELD", line=line) from None

    path = Path(row["path"].strip())
    if not path.is_absolute():
        path = base_dir / path
    try:
        return RecordingMeta(
            id=row["id"].strip(),
            audio_path=path,
            label=Label(label),
            gender=gender,
            age=age,
            fold=fold,
            split=split,
        )
    except ValueError as e:
        raise ManifestError(str(e), code="INVALID_FIELD", line=line) from None


def parse_manifest(text: str, base_dir: PathLike = ".", k_folds: Optional[int] = None) -> Manifest:
    """Parse manifest CSV text. Relative audio paths resolve against ``base_dir``."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ManifestError("empty manifest, header missing", line=1) from None
    if tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise ManifestError(
            f"bad header {','.join(header)!r}, expected {','.join(MANIFEST_HEADER)!r}",
            line=1,
        )

    entries: List[RecordingMeta] = []
    seen: Dict[str, int] = {}
    for line, values in enumerate(reader, start=2):
        if not values:
            continue
        if len(values) != len(MANIFEST_HEADER):
            raise ManifestError(
                f"expected {len(MANIFEST_HEADER)} columns, got {len(values)}", line=line
            )
        entry = _parse_row(dict(zip(MANIFEST_HEADER, values)), line, Path(base_dir))
        if entry.id in seen:
            raise ManifestError(
                f"duplicate id {entry.id!r} (first seen on line {seen[entry.id]})",
                code="DUPLICATE_ID",
                line=line,
            )
        seen[entry.id] = line
        entries.append(entry)

    folds = [e.fold for e in entries if e.fold is not None]
    if k_folds is None:
        k_folds = max(folds) if folds else DEFAULT_K_FOLDS
    return Manifest(entries=tuple(entries), k_folds=k_folds)


def load_manifest(path: PathLike, k_folds: Optional[int] = None) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}", code="IO") from None
    return parse_manifest(text, base_dir=path.parent, k_folds=k_folds)


def format_manifest(manifest: Manifest, base_dir: Optional[PathLike] = None) -> str:
    """Render the CSV text; paths under ``base_dir`` are written relative to it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    base = Path(base_dir).resolve() if base_dir is not None else None
    for e in manifest.entries:
        path = e.audio_path
        if base is not None:
            try:
                path = path.resolve().relative_to(base)
            except ValueError:
                pass
        writer.writerow(
            [
                e.id,
                path.as_posix(),
                e.label.value,
                e.gender.value,
                "" if e.age is None else e.age,
                "" if e.fold is None else e.fold,
                e.split.value,
            ]
        )
    return buf.getvalue()


def write_manifest(manifest: Manifest, path: PathLike) -> Path:
    path = Path(path)
    return atomic_write_text(path, format_manifest(manifest, base_dir=path.parent))


Predicate = Callable[[RecordingMeta], bool]


def filter_subgroup(manifest: Manifest, predicate: Predicate) -> Manifest:
    """Entries satisfying ``predicate``, order preserved.

    The result carries no fold-coverage guarantee, so folds are kept as
    metadata only when every fold still has both classes.
    """
    kept = tuple(e for e in manifest.entries if predicate(e))
    try:
        return Manifest(entries=kept, k_folds=manifest.k_folds)
    except ManifestError:
        return Manifest(
            entries=tuple(e.model_copy(update={"fold": None}) for e in kept),
            k_folds=manifest.k_folds,
        )


def is_gender(gender: Gender) -> Predicate:
    return lambda e: e.gender == gender


def age_at_least(years: int) -> Predicate:
    # unknown ages never match
    return lambda e: e.age is not None and e.age >= years


def age_below(years: int) -> Predicate:
    return lambda e: e.age is not None and e.age < years
