"""Manifold fitting by smooth local contraction of noisy samples."""
from .baseline import LocalPCAFitter, Yx19Config, bias_map_f, local_pca, project_to_zero_set
from .contraction import (
    ContractionFitter,
    ContractionFrame,
    FitConfig,
    FitOutcome,
    alpha_weights,
    cylinder_weights,
    decompose_uv,
    f_map,
    fit_batch,
    g_map,
)
from .harness import ExperimentSpec, SweepResult, emit_outputs, fit_slope, run_experiment
from .manifolds import (
    CalabiYauProjection,
    Circle,
    InitialBand,
    NoiseModel,
    SampleBatch,
    Sphere,
    Torus,
    add_noise,
    calabi_yau_grid,
    initial_points,
    make_manifold,
    sample_uniform,
)
from .metrics import FitReport, direction_error, hausdorff, reach_proxy, sup_and_avg_error
from .neighbors import NeighborIndex

__version__ = "0.1.0"
