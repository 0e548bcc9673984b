"""Zero-shot thermal-image classification toolkit."""

__version__ = "0.1.0"

from .classify import Prediction, classify_batch, classify_one, cosine_similarity
from .colormaps import ColormapMode, apply_colormap
from .dataset import (
    ClassLabel,
    Condition,
    DatasetManifest,
    SampleRecord,
    filter_by_condition,
    load_manifest,
    summarize,
)
from .embed import (
    CacheProvider,
    EmbeddingCache,
    GraphProvider,
    StubProvider,
    cache_read,
    cache_write,
    l2_normalize,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    MetricSet,
    compute_metrics,
    confusion,
    evaluate_grid,
    render_report,
)
from .images import NormalizedImage, RgbImage, ThermalImage
from .preprocess import (
    PreprocessConfig,
    center_zoom_crop,
    normalize,
    preprocess_pipeline,
    resize,
)
from .prompts import (
    ClassCentroids,
    PromptBank,
    PromptingStrategy,
    build_centroids,
    compute_centroid,
    default_bank,
    load_prompt_bank,
    select_single_prompt,
)
from .synth import SceneSpec, generate_dataset, generate_scene

__all__ = [name for name in dir() if not name.startswith("_")]
