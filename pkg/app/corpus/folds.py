from typing import Dict, List

import numpy as np

from app.corpus.manifest import Manifest
from app.exceptions import FoldAssignmentError
from app.logger import logger
from app.schema import Label


def assign_folds(manifest: Manifest, k: int = 5, seed: int = 7) -> Manifest:
    """Stratified fold assignment of the dev entries.

    Each class is shuffled with ``seed`` and dealt round-robin over folds
    1..k, so per-class fold counts differ by at most one. Test entries keep
    no fold.
    """
    dev = manifest.dev
    by_class: Dict[Label, List[str]] = {
        label: [e.id for e in dev if e.label == label] for label in Label
    }
    n_pos, n_neg = len(by_class[Label.COVID]), len(by_class[Label.NON_COVID])
    if n_pos < k:
        raise FoldAssignmentError(
            f"need at least {k} covid dev entries for {k} folds, found {n_pos}",
            code="INSUFFICIENT_POSITIVES",
        )
    if n_neg < k:
        raise FoldAssignmentError(
            f"need at least {k} non_covid dev entries for {k} folds, found {n_neg}",
            code="INSUFFICIENT_NEGATIVES",
        )

    rng = np.random.default_rng(seed)
    fold_of: Dict[str, int] = {}
    # fixed class order keeps the rng stream reproducible
    for label in (Label.COVID, Label.NON_COVID):
        ids = by_class[label]
        for rank, idx in enumerate(rng.permutation(len(ids))):
            fold_of[ids[idx]] = rank % k + 1

    entries = [
        e.model_copy(update={"fold": fold_of.get(e.id)}) for e in manifest.entries
    ]
    logger.debug(f"Assigned {len(fold_of)} dev entries to {k} folds (seed={seed})")
    return Manifest(entries=tuple(entries), k_folds=k)
