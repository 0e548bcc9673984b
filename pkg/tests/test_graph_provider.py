from __future__ import annotations

import hashlib
import json

import numpy as np
import pytest

torch = pytest.importorskip("torch")
transformers = pytest.importorskip("transformers")

from vlm_iris.embed import GraphProvider, l2_normalize
from vlm_iris.errors import DataError
from vlm_iris.images import RgbImage

DIM = 8
SIZE = 16


class TinyImageTower(torch.nn.Module):
    def forward(self, x):
        pooled = x.mean(dim=(2, 3))  # (1, 3)
        return torch.cat([pooled, pooled, pooled[:, :DIM - 6]], dim=1)


class TinyTextTower(torch.nn.Module):
    def forward(self, ids):
        v = ids.float().mean(dim=1, keepdim=True)
        return v.repeat(1, DIM) + torch.arange(DIM).float()


def write_toy_tokenizer(dirpath):
    dirpath.mkdir(parents=True, exist_ok=True)
    vocab = {"<|startoftext|>": 0, "<|endoftext|>": 1}
    for ch in (chr(c) for c in range(32, 127)):
        vocab.setdefault(ch, len(vocab))
        vocab.setdefault(ch + "</w>", len(vocab))
    (dirpath / "vocab.json").write_text(json.dumps(vocab))
    (dirpath / "merges.txt").write_text("#version: 0.2\n")
    tok = transformers.CLIPTokenizer(
        str(dirpath / "vocab.json"), str(dirpath / "merges.txt"), model_max_length=77
    )
    tok.save_pretrained(str(dirpath))
    return tok


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    img_graph = torch.jit.trace(
        TinyImageTower().eval(), torch.rand(1, 3, SIZE, SIZE)
    )
    txt_graph = torch.jit.trace(
        TinyTextTower().eval(), torch.ones(1, 77, dtype=torch.long)
    )
    img_graph.save(str(out / "image_encoder.pt"))
    txt_graph.save(str(out / "text_encoder.pt"))
    write_toy_tokenizer(out / "tokenizer")
    checksums = {}
    for path in sorted(out.rglob("*")):
        if path.is_file():
            rel = str(path.relative_to(out))
            checksums[rel] = hashlib.sha256(path.read_bytes()).hexdigest()
    meta = {
        "provider_id": "tiny-test-bundle",
        "dim": DIM,
        "input_size": SIZE,
        "context_length": 77,
        "checksums": checksums,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2))
    return out


def test_loads_and_reports_dim(bundle):
    provider = GraphProvider(bundle)
    assert provider.dim() == DIM
    assert provider.provider_id == "tiny-test-bundle"


def test_image_embedding_runs(bundle):
    provider = GraphProvider(bundle)
    img = RgbImage(pixels=np.full((SIZE, SIZE, 3), 128, dtype=np.uint8))
    vec = provider.embed_image(img)
    assert vec.shape == (DIM,)
    assert np.isfinite(vec).all()
    assert np.array_equal(vec, provider.embed_image(img))


def test_text_embedding_runs(bundle):
    provider = GraphProvider(bundle)
    vec = provider.embed_text("an object on a plate")
    assert vec.shape == (DIM,)
    assert np.array_equal(vec, provider.embed_text("an object on a plate"))
    assert np.linalg.norm(l2_normalize(vec)) == pytest.approx(1.0, abs=1e-6)


def test_wrong_image_size_fails_before_inference(bundle):
    provider = GraphProvider(bundle)
    img = RgbImage(pixels=np.zeros((100, 100, 3), dtype=np.uint8))
    with pytest.raises(DataError, match="16x16"):
        provider.embed_image(img)


def test_missing_tokenizer_assets_fail_load(bundle, tmp_path):
    import shutil

    broken = tmp_path / "no_tok"
    shutil.copytree(bundle, broken)
    shutil.rmtree(broken / "tokenizer")
    meta = json.loads((broken / "metadata.json").read_text())
    meta["checksums"] = {
        k: v for k, v in meta["checksums"].items() if not k.startswith("tokenizer")
    }
    (broken / "metadata.json").write_text(json.dumps(meta))
    with pytest.raises(DataError, match="tokenizer"):
        GraphProvider(broken)


def test_tampered_graph_fails_checksum(bundle, tmp_path):
    import shutil

    broken = tmp_path / "tampered"
    shutil.copytree(bundle, broken)
    blob = (broken / "image_encoder.pt").read_bytes()
    (broken / "image_encoder.pt").write_bytes(blob + b"\x00")
    with pytest.raises(DataError, match="checksum"):
        GraphProvider(broken)


def test_metadata_dim_mismatch_detected(bundle, tmp_path):
    import shutil

    broken = tmp_path / "wrongdim"
    shutil.copytree(bundle, broken)
    meta = json.loads((broken / "metadata.json").read_text())
    meta["dim"] = 512
    (broken / "metadata.json").write_text(json.dumps(meta))
    with pytest.raises(DataError, match="dim"):
        GraphProvider(broken)
