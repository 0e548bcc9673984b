"""Cosine-similarity scoring and argmax prediction.

Scores are clamped to [-1, 1] against float drift. An exact tie predicts
`absent` (the conservative default for presence monitoring). Predictions
serialize as JSON lines {sample_id, label, score_present, score_absent,
margin}.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import ClassLabel, DatasetManifest, parse_label
from .embed import EmbeddingProvider, l2_normalize
from .errors import DataError, InputError
from .imageio import read_thermal
from .preprocess import PreprocessConfig, preprocess_pipeline
from .prompts import (
    ClassCentroids,
    PromptBank,
    PromptingStrategy,
    build_centroids,
    select_single_prompt,
)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise InputError(f"embedding dim mismatch: {av.shape} vs {bv.shape}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na <= 1e-12 or nb <= 1e-12:
        raise InputError("degenerate embedding: norm is (near) zero")
    return float(np.clip(np.dot(av, bv) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class Prediction:
    sample_id: str
    label: ClassLabel
    score_present: float
    score_absent: float

    @property
    def margin(self) -> float:
        return abs(self.score_present - self.score_absent)


def classify_one(
    image_emb: np.ndarray,
    class_reps: dict[ClassLabel, np.ndarray] | ClassCentroids,
    sample_id: str,
) -> Prediction:
    reps = class_reps.vectors if isinstance(class_reps, ClassCentroids) else class_reps
    score_present = cosine_similarity(image_emb, reps[ClassLabel.PRESENT])
    score_absent = cosine_similarity(image_emb, reps[ClassLabel.ABSENT])
    label = ClassLabel.PRESENT if score_present > score_absent else ClassLabel.ABSENT
    return Prediction(
        sample_id=sample_id,
        label=label,
        score_present=score_present,
        score_absent=score_absent,
    )


def resolve_class_reps(
    bank: PromptBank,
    provider: EmbeddingProvider,
    strategy: PromptingStrategy,
) -> dict[ClassLabel, np.ndarray]:
    """Unit-norm class representation vectors for a resolved strategy."""
    if strategy.kind == "centroid":
        return build_centroids(bank, provider).vectors
    if strategy.chosen is None:
        raise InputError("single strategy must carry chosen prompts; run selection first")
    reps: dict[ClassLabel, np.ndarray] = {}
    for label in ClassLabel:
        prompt = strategy.chosen[label]
        if prompt not in bank.prompts[label]:
            raise InputError(
                f"chosen prompt for {label.value!r} is not in the bank: {prompt!r}"
            )
        reps[label] = l2_normalize(provider.embed_text(prompt))
    return reps


@dataclass(frozen=True)
class BatchFailure:
    sample_id: str
    error: str


@dataclass(frozen=True)
class BatchResult:
    predictions: tuple[Prediction, ...]
    failures: tuple[BatchFailure, ...]
    strategy: PromptingStrategy


def classify_batch(
    manifest: DatasetManifest,
    cfg: PreprocessConfig,
    provider: EmbeddingProvider,
    strategy: PromptingStrategy,
    bank: PromptBank,
    skip_errors: bool = False,
    jobs: int = 1,
) -> BatchResult:
    """Classify every manifest record, in manifest order.

    For kind="single" without chosen prompts, selection runs first over this
    manifest's images. With skip_errors, per-image failures are recorded and
    skipped; otherwise the first failure aborts, naming the sample.
    """

    def load_rgb(rec):
        return preprocess_pipeline(read_thermal(manifest.resolve_path(rec)), cfg)

    if strategy.kind == "single" and strategy.chosen is None:
        images = [load_rgb(rec) for rec in manifest.records]
        strategy = select_single_prompt(bank, images, provider)

    reps = resolve_class_reps(bank, provider, strategy)

    def run_one(rec):
        rgb = load_rgb(rec)
        emb = l2_normalize(provider.embed_image(rgb))
        return classify_one(emb, reps, rec.sample_id)

    predictions: list[Prediction] = []
    failures: list[BatchFailure] = []

    def guarded(rec):
        try:
            return run_one(rec), None
        except Exception as exc:
            return None, BatchFailure(sample_id=rec.sample_id, error=str(exc))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(guarded, manifest.records))
    else:
        outcomes = [guarded(rec) for rec in manifest.records]

    for rec, (pred, failure) in zip(manifest.records, outcomes):
        if failure is not None:
            if not skip_errors:
                raise DataError(f"sample {rec.sample_id!r}: {failure.error}")
            failures.append(failure)
        else:
            predictions.append(pred)

    return BatchResult(
        predictions=tuple(predictions), failures=tuple(failures), strategy=strategy
    )


def write_predictions(predictions: tuple[Prediction, ...], path: str | Path) -> Path:
    path = Path(path)
    lines = []
    for p in predictions:
        lines.append(
            json.dumps(
                {
                    "sample_id": p.sample_id,
                    "label": p.label.value,
                    "score_present": p.score_present,
                    "score_absent": p.score_absent,
                    "margin": p.margin,
                },
                sort_keys=True,
            )
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def read_predictions(path: str | Path) -> tuple[Prediction, ...]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"predictions file not found: {path}")
    preds = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            preds.append(
                Prediction(
                    sample_id=str(obj["sample_id"]),
                    label=parse_label(obj["label"]),
                    score_present=float(obj["score_present"]),
                    score_absent=float(obj["score_absent"]),
                )
            )
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"{path}: line {lineno}: bad prediction record: {exc}")
    return tuple(preds)
