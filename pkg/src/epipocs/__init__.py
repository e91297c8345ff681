"""
Parameter-free total-variation denoising and compressive sensing by
projections onto epigraph sets, built from supporting hyperplanes.
"""

from .costs import ConvexCost, L1Cost, LassoCost, ScaledCost, TVCost, l1_eval, l1_subgradient, lasso_eval, tv_eval, tv_subgradient
from .cs import (
    BlockScheme,
    MeasurementSystem,
    SparseSpec,
    TransformOp,
    block_cs_reconstruct,
    cs_reconstruct,
    dct_forward,
    dct_inverse,
    gaussian_measurement_matrix,
    kaczmarz_sweep,
    make_cusp,
    make_sparse,
    measure,
)
from .denoise import BaselineConfig, DenoiseResult, chambolle_denoise, lambda_grid_search, pocs_denoise
from .epigraph import CutPool, EpigraphSet, ProjectionTrace, oracle_project_epigraph, project_onto_epigraph, supporting_hyperplane
from .geometry import (
    Hyperplane,
    LiftedPoint,
    NumericalError,
    euclidean_distance,
    project_onto_hyperplane,
    project_onto_level_set,
)
from .metrics import NoiseModel, add_noise, nrmse, ntv, snr_db
from .phantoms import make_phantom, synthetic_corpus

__version__ = "0.1.0"
