from __future__ import annotations

import numpy as np
import pytest

from vlm_iris.colormaps import ColormapMode
from vlm_iris.dataset import ClassLabel
from vlm_iris.embed import l2_normalize
from vlm_iris.errors import InputError
from vlm_iris.prompts import (
    PromptBank,
    PromptingStrategy,
    build_centroids,
    compute_centroid,
    default_bank,
    load_prompt_bank,
    parse_prompt_bank,
    select_single_prompt,
)

from conftest import make_rgb

PRESENT, ABSENT = ClassLabel.PRESENT, ClassLabel.ABSENT


def bank_text(present, absent, variant="grayscale"):
    lines = ["bank_version: 1", f"variant: {variant}", "", "[present]"]
    lines += present
    lines += ["", "[absent]"]
    lines += absent
    return "\n".join(lines) + "\n"


class TestBankFiles:
    def test_default_grayscale_contains_known_prompt(self):
        bank = default_bank(ColormapMode.GRAYSCALE)
        assert (
            "a thermal image of a bright platform with no blocks or parts"
            in bank.prompts[ABSENT]
        )

    def test_default_magma_mentions_orange_surface(self):
        bank = default_bank(ColormapMode.MAGMA)
        assert any("orange surface" in p for p in bank.prompts[PRESENT])

    def test_default_viridis_mentions_green_yellow(self):
        bank = default_bank(ColormapMode.VIRIDIS)
        assert any("green-yellow surface" in p for p in bank.prompts[PRESENT])

    def test_defaults_have_eight_prompts_per_class(self):
        for mode in ColormapMode:
            bank = default_bank(mode)
            assert len(bank.prompts[PRESENT]) == 8
            assert len(bank.prompts[ABSENT]) == 8
            assert bank.variant is mode

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "bank.txt"
        path.write_text(bank_text(["a thing"], ["nothing"]))
        bank = load_prompt_bank(path)
        assert bank.prompts[PRESENT] == ("a thing",)

    def test_missing_class_is_error(self):
        text = "bank_version: 1\nvariant: magma\n[present]\nsomething\n"
        with pytest.raises(InputError, match="absent"):
            parse_prompt_bank(text)

    def test_duplicate_prompt_is_error(self):
        with pytest.raises(InputError, match="duplicate"):
            parse_prompt_bank(bank_text(["same", "same"], ["empty bed"]))

    def test_missing_version_is_error(self):
        with pytest.raises(InputError, match="bank_version"):
            parse_prompt_bank("variant: magma\n[present]\na\n[absent]\nb\n")

    def test_unknown_variant_is_error(self):
        with pytest.raises(InputError, match="variant"):
            parse_prompt_bank(bank_text(["a"], ["b"], variant="sepia"))

    def test_empty_class_is_error(self):
        with pytest.raises(InputError, match="present"):
            parse_prompt_bank("bank_version: 1\nvariant: magma\n[present]\n[absent]\nb\n")


class TestComputeCentroid:
    def test_single_embedding_is_identity(self):
        e = np.array([1.0, 0.0])
        assert compute_centroid([e]) == pytest.approx(e, abs=1e-12)

    def test_two_orthogonal_unit_vectors(self):
        out = compute_centroid([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
        assert out == pytest.approx([0.70711, 0.70711], abs=1e-5)

    def test_antipodal_is_error(self):
        with pytest.raises(InputError, match="antipodal"):
            compute_centroid([np.array([1.0, 0.0]), np.array([-1.0, 0.0])])

    def test_empty_is_error(self):
        with pytest.raises(InputError):
            compute_centroid([])

    def test_output_unit_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            vecs = [l2_normalize(rng.normal(size=6)) for _ in range(rng.integers(1, 7))]
            assert abs(np.linalg.norm(compute_centroid(vecs)) - 1.0) < 1e-6


class TestBuildCentroids:
    def test_single_prompt_class_equals_prompt_embedding(self, stub):
        bank = parse_prompt_bank(bank_text(["only one"], ["empty", "bare"]))
        cents = build_centroids(bank, stub)
        expected = l2_normalize(stub.embed_text("only one"))
        assert cents.vectors[PRESENT] == pytest.approx(expected, abs=1e-9)

    def test_permutation_invariance(self, stub):
        a = parse_prompt_bank(bank_text(["p1", "p2", "p3"], ["n1"]))
        b = parse_prompt_bank(bank_text(["p3", "p1", "p2"], ["n1"]))
        ca = build_centroids(a, stub).vectors[PRESENT]
        cb = build_centroids(b, stub).vectors[PRESENT]
        assert ca == pytest.approx(cb, abs=1e-12)

    def test_matches_bruteforce_mean_then_normalize(self, stub):
        prompts = ["alpha", "beta", "gamma"]
        bank = parse_prompt_bank(bank_text(prompts, ["none"]))
        got = build_centroids(bank, stub).vectors[PRESENT]
        # independent recomputation
        vecs = []
        for p in prompts:
            v = stub.embed_text(p).astype(np.float64)
            vecs.append(v / np.sqrt((v * v).sum()))
        mean = sum(vecs) / len(vecs)
        expected = mean / np.sqrt((mean * mean).sum())
        assert got == pytest.approx(expected, abs=1e-12)


class FixedProvider:
    """Hand-placed 2-D vectors keyed by text / image bytes."""

    provider_id = "fixed"

    def __init__(self, text_vectors, image_vectors):
        self.text_vectors = text_vectors
        self.image_vectors = image_vectors

    def embed_text(self, text):
        return np.asarray(self.text_vectors[text], dtype=np.float64)

    def embed_image(self, img):
        return np.asarray(self.image_vectors[img.tobytes()], dtype=np.float64)

    def dim(self):
        return 2


class TestSelectSinglePrompt:
    def test_single_prompt_class_always_chosen(self, stub):
        bank = parse_prompt_bank(bank_text(["lone prompt"], ["n1", "n2"]))
        strategy = select_single_prompt(bank, [make_rgb((2, 2), seed=1)], stub)
        assert strategy.chosen[PRESENT] == "lone prompt"

    def test_higher_mean_similarity_wins(self):
        img = make_rgb((2, 2), value=10)
        provider = FixedProvider(
            text_vectors={
                "promptA": [1.0, 0.0],
                "promptB": [0.8, 0.6],
                "neg": [0.0, 1.0],
            },
            image_vectors={img.tobytes(): [0.6, 0.8]},
        )
        bank = parse_prompt_bank(bank_text(["promptA", "promptB"], ["neg"]))
        strategy = select_single_prompt(bank, [img], provider)
        # cos(image, A) = 0.6, cos(image, B) = 0.96
        assert strategy.chosen[PRESENT] == "promptB"

    def test_exact_tie_prefers_bank_order(self):
        img = make_rgb((2, 2), value=20)
        provider = FixedProvider(
            text_vectors={
                "first": [2.0, 0.0],
                "second": [1.0, 0.0],  # same direction, same cosine
                "neg": [0.0, 1.0],
            },
            image_vectors={img.tobytes(): [0.6, 0.8]},
        )
        bank = parse_prompt_bank(bank_text(["first", "second"], ["neg"]))
        strategy = select_single_prompt(bank, [img], provider)
        assert strategy.chosen[PRESENT] == "first"

    def test_chosen_prompts_are_bank_members(self, stub):
        bank = default_bank(ColormapMode.MAGMA)
        images = [make_rgb((3, 3), seed=s) for s in range(4)]
        strategy = select_single_prompt(bank, images, stub)
        for label in ClassLabel:
            assert strategy.chosen[label] in bank.prompts[label]

    def test_no_images_is_error(self, stub):
        bank = default_bank(ColormapMode.GRAYSCALE)
        with pytest.raises(InputError):
            select_single_prompt(bank, [], stub)


class TestStrategyType:
    def test_single_without_chosen_is_allowed(self):
        PromptingStrategy(kind="single")

    def test_single_with_partial_chosen_is_error(self):
        with pytest.raises(InputError):
            PromptingStrategy(kind="single", chosen={PRESENT: "x"})

    def test_centroid_with_chosen_is_error(self):
        with pytest.raises(InputError):
            PromptingStrategy(kind="centroid", chosen={PRESENT: "x", ABSENT: "y"})


def test_bank_type_invariants():
    with pytest.raises(InputError):
        PromptBank(variant=ColormapMode.MAGMA, prompts={PRESENT: ("a",)})
    with pytest.raises(InputError):
        PromptBank(
            variant=ColormapMode.MAGMA,
            prompts={PRESENT: ("a", "a"), ABSENT: ("b",)},
        )
