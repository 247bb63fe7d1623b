"""Ridge regression over a whole grid of regularization parameters.

The main entry point is :func:`ihs_bin_path`, which builds sketched
polynomial bases once per lambda interval and then evaluates every grid
point with a handful of vector updates.
"""

from .adaptive import AdaptiveConfig, adaptive_sketch_dim, armijo_step
from .baselines import direct_path, svd_path, warm_cg_path, warm_ihs_path
from .data import Dataset, gaussian_kernel, gen_synthetic, parse_libsvm, rescale_features, split_half, write_libsvm
from .errors import DataFormatError, DimensionError, NumericalFailure
from .path import dual_path, gd_bin_path, ihs_bin_path, ihs_bin_path_matrix, solve_path
from .preconditioner import Preconditioner
from .results import RegPathResult
from .sketch import SketchSpec, sketch_apply
from .spectrum import (
    PathConfig,
    RhoBounds,
    estimate_rho,
    interval_split,
    rho_gaussian,
    rho_sjlt,
    rho_srht,
    tune_interval,
)

__version__ = "0.1.0"
