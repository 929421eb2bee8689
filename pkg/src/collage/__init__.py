"""Photo collage generation with user-preference learning."""

from .core import (
    ANGLES,
    Canvas,
    CollageConfiguration,
    Dataset,
    DatasetError,
    DatasetManifest,
    FaceMask,
    ImageState,
    ImportanceMap,
    RasterImage,
    WeightSet,
    load_dataset,
)
from .criteria import CriterionVector, Scene, evaluate_all, fitness
from .importance import MapProviderConfig, combine_maps, compute_maps
from .learning import (
    LearnSpec,
    PreferenceRecord,
    RankTally,
    f1_score,
    kendall_tau,
    learn_weights,
    normalize_scores,
    sign_report,
)
from .optimizer import SearchSpec, SearchTrace, assign_layers, optimize, random_init

__all__ = [
    "ANGLES",
    "Canvas",
    "CollageConfiguration",
    "CriterionVector",
    "Dataset",
    "DatasetError",
    "DatasetManifest",
    "FaceMask",
    "ImageState",
    "ImportanceMap",
    "LearnSpec",
    "MapProviderConfig",
    "PreferenceRecord",
    "RankTally",
    "RasterImage",
    "Scene",
    "SearchSpec",
    "SearchTrace",
    "WeightSet",
    "assign_layers",
    "combine_maps",
    "compute_maps",
    "evaluate_all",
    "f1_score",
    "fitness",
    "kendall_tau",
    "learn_weights",
    "load_dataset",
    "normalize_scores",
    "optimize",
    "random_init",
    "sign_report",
]
