from __future__ import annotations

import pytest

from iris_export.bundle import export_encoders


@pytest.fixture(scope="session")
def toy_bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy_bundle")
    export_encoders("toy", out, provider_id="toy-clip-torchscript")
    return out
