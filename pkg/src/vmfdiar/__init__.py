"""Speaker clustering with hard-EM mixtures of von Mises-Fisher distributions."""

from .clustering import (
    ClusterConfig,
    ClusteringResult,
    MixtureModel,
    e_step_hard,
    fit,
    fit_movmf,
    fit_spherical_kmeans,
    init_model,
    m_step,
    mixture_log_density,
    objective,
)
from .hypersphere import PcaModel, cosine_similarity, fit_pca, length_normalize, pca_project
from .metrics import (
    NONSPEECH,
    OVERLAP,
    DerBreakdown,
    Segment,
    SegmentTimeline,
    compute_der,
    compute_mi,
    contingency,
    discretize,
    optimal_mapping,
)
from .vmf import (
    KAPPA_MAX,
    VmfParams,
    bessel_ratio,
    estimate_kappa,
    log_bessel_i,
    log_density,
    log_norm_const,
    mean_resultant,
    sample_vmf,
    solve_kappa,
)

__version__ = "0.1.0"
