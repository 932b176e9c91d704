"""Approximate kernel mean embeddings for comparing spatial point patterns."""

__version__ = "0.1.0"

from akme._backend import BACKEND
from akme.comparison import (
    ComparisonResult,
    group_and_test,
    replicated_test,
    single_pattern_test,
)
from akme.embedding import (
    AkmeVector,
    EmbeddingConfig,
    FeatureMap,
    PointPattern,
    Window,
    build_feature_map,
    embed_pattern,
    embed_point,
    embed_points_matrix,
    kernel_approx,
    kernel_exact,
    mmd2_akme,
    mmd2_exact,
)
from akme.errors import (
    AkmeError,
    CalibrationError,
    DegeneracyError,
    EmptyPatternError,
    InsufficientPointsError,
    InvalidParameterError,
    PatternParseError,
    WindowMismatchError,
)
from akme.pointprocess import IntensityModel, ProcessSpec, simulate
from akme.quadrature import RadialQuadrature, radial_gauss_hermite

__all__ = [
    "BACKEND", "ComparisonResult", "group_and_test", "replicated_test", "single_pattern_test",
    "AkmeVector", "EmbeddingConfig", "FeatureMap", "PointPattern", "Window", "build_feature_map",
    "embed_pattern", "embed_point", "embed_points_matrix", "kernel_approx", "kernel_exact",
    "mmd2_akme", "mmd2_exact", "AkmeError", "CalibrationError", "DegeneracyError",
    "EmptyPatternError", "InsufficientPointsError", "InvalidParameterError", "PatternParseError",
    "WindowMismatchError", "IntensityModel", "ProcessSpec", "simulate", "RadialQuadrature",
    "radial_gauss_hermite",
]
