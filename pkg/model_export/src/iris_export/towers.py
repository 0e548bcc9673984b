"""Encoder tower wrappers and model loading.

The exported image graph takes raw RGB in [0, 1] (1x3xSxS float32) and bakes
the model's channel standardization inside, so consumers never need the
model-specific statistics. The text graph takes padded token ids (1xL int64).
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from transformers import CLIPConfig, CLIPModel, CLIPTokenizer

# Published CLIP preprocessing statistics.
CLIP_IMAGE_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_IMAGE_STD = (0.26862954, 0.26130258, 0.27577711)

DEFAULT_MODEL_ID = "openai/clip-vit-base-patch32"


class ImageTower(torch.nn.Module):
    def __init__(self, clip: CLIPModel, mean=CLIP_IMAGE_MEAN, std=CLIP_IMAGE_STD):
        super().__init__()
        self.vision_model = clip.vision_model
        self.visual_projection = clip.visual_projection
        self.register_buffer("mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor(std).view(1, 3, 1, 1))

    def forward(self, pixel_values: torch.Tensor) -> torch.Tensor:
        x = (pixel_values - self.mean) / self.std
        out = self.vision_model(pixel_values=x)
        return self.visual_projection(out.pooler_output)


class TextTower(torch.nn.Module):
    def __init__(self, clip: CLIPModel):
        super().__init__()
        self.text_model = clip.text_model
        self.text_projection = clip.text_projection

    def forward(self, input_ids: torch.Tensor) -> torch.Tensor:
        out = self.text_model(input_ids=input_ids)
        return self.text_projection(out.pooler_output)


def load_model(source: str) -> tuple[CLIPModel, CLIPTokenizer]:
    """Load a CLIP checkpoint by hub id or local path ("toy" builds a small
    random-weight stand-in for offline testing)."""
    if source == "toy":
        return build_toy_clip()
    model = CLIPModel.from_pretrained(source)
    tokenizer = CLIPTokenizer.from_pretrained(source)
    return model.eval(), tokenizer


def build_toy_clip(seed: int = 0) -> tuple[CLIPModel, CLIPTokenizer]:
    """Architecture-faithful CLIP at toy scale with a character-level
    tokenizer; runs entirely offline."""
    import tempfile

    config = CLIPConfig(
        projection_dim=16,
        text_config={
            "hidden_size": 32,
            "intermediate_size": 37,
            "num_attention_heads": 4,
            "num_hidden_layers": 2,
            "vocab_size": 512,
            "max_position_embeddings": 77,
            "bos_token_id": 0,
            "eos_token_id": 1,
        },
        vision_config={
            "hidden_size": 32,
            "intermediate_size": 37,
            "num_attention_heads": 4,
            "num_hidden_layers": 2,
            "image_size": 224,
            "patch_size": 32,
        },
    )
    torch.manual_seed(seed)
    model = CLIPModel(config).eval()

    tmp = Path(tempfile.mkdtemp(prefix="toy_tokenizer_"))
    vocab: dict[str, int] = {"<|startoftext|>": 0, "<|endoftext|>": 1}
    for ch in (chr(c) for c in range(32, 127)):
        vocab.setdefault(ch, len(vocab))
        vocab.setdefault(ch + "</w>", len(vocab))
    (tmp / "vocab.json").write_text(json.dumps(vocab), encoding="utf-8")
    (tmp / "merges.txt").write_text("#version: 0.2\n", encoding="utf-8")
    tokenizer = CLIPTokenizer(
        str(tmp / "vocab.json"), str(tmp / "merges.txt"), model_max_length=77
    )
    return model, tokenizer


def trace_towers(
    model: CLIPModel, input_size: int, context_length: int
) -> tuple[torch.jit.ScriptModule, torch.jit.ScriptModule]:
    example_image = torch.rand(1, 3, input_size, input_size)
    example_ids = torch.ones(1, context_length, dtype=torch.long)
    with torch.no_grad():
        image_graph = torch.jit.trace(ImageTower(model).eval(), example_image)
        text_graph = torch.jit.trace(TextTower(model).eval(), example_ids)
    return image_graph, text_graph
