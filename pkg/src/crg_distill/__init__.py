"""Channel relational graph distillation losses.

Feature maps become graphs whose vertices are channels and whose edges
are pairwise cosine similarities; teacher and student are aligned at three
levels (entries, adjacency, spectral embedding of the normalized
Laplacian), with analytic gradients certified against finite differences.
"""

from .attention import AttentionMasks, attention_masks, channel_mask, relation_mask, spatial_mask
from .config import RunConfig
from .crg import ChannelGraph, build_adjacency, vectorize_channels
from .errors import (
    BadN,
    ConvergenceFailure,
    CrgDistillError,
    DegenerateChannel,
    DegenerateSpectrum,
    DegenerateSpectrumWarning,
    DimensionMismatch,
    Divergence,
    IoError,
    MalformedHeader,
    NonFiniteData,
    NonPositiveDegree,
    PayloadLengthError,
    RankError,
    ShapeMismatch,
    UnsupportedDtype,
)
from .gradients import (
    CERTIFICATION_TOLERANCES,
    GradientCheckReport,
    GradientField,
    check_gradients,
    fd_gradient,
    grad_edge,
    grad_spectral,
    grad_spectral_values,
    grad_vertex,
)
from .losses import (
    ChannelAdapter,
    LossReport,
    LossWeights,
    apply_adapter,
    batch_multi_level_loss,
    edge_loss,
    multi_level_loss,
    spectral_loss,
    spectral_value_loss_variant,
    vertex_loss,
)
from .sim import SimResult, run_distill_sim
from .spectral import (
    EigenDecomposition,
    LaplacianPair,
    SpectralEmbedding,
    default_n,
    degree_and_laplacian,
    eigendecompose,
    embed,
    spectral_embedding,
)
from .tensor_io import FeatureMap, FeatureMapBatch, load_feature_maps, load_matrix, save_feature_maps

__version__ = "0.1.0"


def crg_distill_version() -> str:
    """Versioned ABI string shared with language bindings."""
    return f"crg-distill/{__version__}"
