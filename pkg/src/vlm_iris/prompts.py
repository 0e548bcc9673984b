"""Prompt banks, class centroids, and prompting strategies.

Bank file format: a `bank_version: 1` line, a `variant: <colormap>` line,
then `[present]` / `[absent]` sections with one prompt per line. `#` starts
a comment. Three repo-authored default banks ship with the package, one per
colormap variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np

from .colormaps import ColormapMode
from .dataset import ClassLabel
from .embed import EmbeddingProvider, l2_normalize
from .errors import InputError
from .images import RgbImage

BANK_VERSION = 1


@dataclass(frozen=True)
class PromptBank:
    variant: ColormapMode
    prompts: dict[ClassLabel, tuple[str, ...]]

    def __post_init__(self) -> None:
        for label in ClassLabel:
            entries = self.prompts.get(label)
            if not entries:
                raise InputError(f"prompt bank missing class {label.value!r}")
            if any(not p for p in entries):
                raise InputError(f"class {label.value!r} contains an empty prompt")
            if len(set(entries)) != len(entries):
                raise InputError(f"duplicate prompt within class {label.value!r}")


@dataclass(frozen=True)
class ClassCentroids:
    vectors: dict[ClassLabel, np.ndarray]

    def __post_init__(self) -> None:
        dims = set()
        for label in ClassLabel:
            vec = self.vectors.get(label)
            if vec is None:
                raise InputError(f"centroids missing class {label.value!r}")
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-6:
                raise InputError(f"centroid for {label.value!r} is not unit-norm ({norm})")
            dims.add(vec.shape)
        if len(dims) != 1:
            raise InputError("centroid dims differ between classes")


@dataclass(frozen=True)
class PromptingStrategy:
    kind: Literal["single", "centroid"]
    chosen: dict[ClassLabel, str] | None = None

    def __post_init__(self) -> None:
        if self.kind == "single" and self.chosen is not None:
            for label in ClassLabel:
                if not self.chosen.get(label):
                    raise InputError(f"single strategy missing a prompt for {label.value!r}")
        if self.kind == "centroid" and self.chosen is not None:
            raise InputError("centroid strategy does not carry chosen prompts")


def parse_prompt_bank(text: str, source: str = "<bank>") -> PromptBank:
    variant: ColormapMode | None = None
    version: int | None = None
    section: ClassLabel | None = None
    prompts: dict[ClassLabel, list[str]] = {lb: [] for lb in ClassLabel}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("bank_version:"):
            try:
                version = int(line.split(":", 1)[1].strip())
            except ValueError:
                raise InputError(f"{source}: line {lineno}: bad bank_version")
            continue
        if line.startswith("variant:"):
            value = line.split(":", 1)[1].strip().lower()
            try:
                variant = ColormapMode(value)
            except ValueError:
                raise InputError(f"{source}: line {lineno}: unknown variant {value!r}")
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            try:
                section = ClassLabel(name)
            except ValueError:
                raise InputError(f"{source}: line {lineno}: unknown class section {name!r}")
            continue
        if section is None:
            raise InputError(f"{source}: line {lineno}: prompt before any class section")
        if line in prompts[section]:
            raise InputError(
                f"{source}: line {lineno}: duplicate prompt in class {section.value!r}"
            )
        prompts[section].append(line)

    if version != BANK_VERSION:
        raise InputError(f"{source}: expected 'bank_version: {BANK_VERSION}' header")
    if variant is None:
        raise InputError(f"{source}: missing 'variant:' header")
    for label in ClassLabel:
        if not prompts[label]:
            raise InputError(f"{source}: missing or empty class {label.value!r}")
    return PromptBank(
        variant=variant, prompts={lb: tuple(ps) for lb, ps in prompts.items()}
    )


def load_prompt_bank(path: str | Path) -> PromptBank:
    path = Path(path)
    if not path.exists():
        raise InputError(f"prompt bank file not found: {path}")
    return parse_prompt_bank(path.read_text(encoding="utf-8"), source=str(path))


def default_bank(variant: ColormapMode) -> PromptBank:
    """The shipped bank for a colormap variant (bank_<variant> data file)."""
    name = f"bank_{variant.value}.txt"
    text = resources.files("vlm_iris").joinpath("data", "banks", name).read_text("utf-8")
    return parse_prompt_bank(text, source=name)


def compute_centroid(embeddings: list[np.ndarray] | tuple[np.ndarray, ...]) -> np.ndarray:
    """Arithmetic mean of unit vectors, re-normalized to unit length."""
    if len(embeddings) == 0:
        raise InputError("cannot compute centroid of an empty embedding list")
    stack = np.stack([np.asarray(e, dtype=np.float64) for e in embeddings])
    mean = stack.mean(axis=0)
    try:
        return l2_normalize(mean)
    except InputError:
        raise InputError("antipodal prompt set: embeddings cancel to a zero mean")


def build_centroids(bank: PromptBank, provider: EmbeddingProvider) -> ClassCentroids:
    vectors: dict[ClassLabel, np.ndarray] = {}
    for label in ClassLabel:
        embedded = [l2_normalize(provider.embed_text(p)) for p in bank.prompts[label]]
        vectors[label] = compute_centroid(embedded)
    return ClassCentroids(vectors=vectors)


def select_single_prompt(
    bank: PromptBank, images: list[RgbImage], provider: EmbeddingProvider
) -> PromptingStrategy:
    """Pick, per class, the bank prompt with the highest mean cosine
    similarity over the given images; ties break to the lowest bank index."""
    if not images:
        raise InputError("single-prompt selection needs at least one image")
    image_vecs = np.stack([l2_normalize(provider.embed_image(im)) for im in images])
    chosen: dict[ClassLabel, str] = {}
    for label in ClassLabel:
        best_idx = 0
        best_mean = -np.inf
        for idx, prompt in enumerate(bank.prompts[label]):
            pvec = l2_normalize(provider.embed_text(prompt))
            mean_sim = float((image_vecs @ pvec).mean())
            if mean_sim > best_mean:
                best_mean = mean_sim
                best_idx = idx
        chosen[label] = bank.prompts[label][best_idx]
    return PromptingStrategy(kind="single", chosen=chosen)
