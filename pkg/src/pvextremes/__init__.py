"""Extremes of inradii and circumradii of Poisson-Voronoi cells."""

__version__ = "0.1.0"

from .errors import (CertificationError, DegenerateInputError, DomainError, EmptyClassError,
                     InsufficientDataError, ParameterError, PVError, RunAbortedError,
                     UnsupportedDimensionError, ValidationError)
from .window import (DISK, POLYGON, SQUARE, PointConfiguration, SampleWindow, default_padding,
                     derive_seed, from_points, make_window, sample_poisson)
from .geometry import (CellTable, NeighborIndex, VoronoiCellRecord, all_cells, cell_table,
                       classify_cell, compute_cell, inradius_nn)
from .covering import (alpha1, alpha2, alpha2_prime, alpha2_prime_frozen, cap_from_point,
                       circle_covered, circumradius_by_covering, estimate_mu_k, estimate_p_k,
                       sample_theta)
from .extremes import (CellClass, ExtremeSample, LimitLaw, StatKind, default_constants,
                       extremes_of, limit_law, rescale, u_threshold)
from .pva import PVAResult, alpha_for_window, c_alpha, hausdorff_bracket, v_gamma
from .stats import ecdf, ks_distance, ks_two_sample
from .harness import (ExperimentSpec, SummaryStats, emit, read_records, run_experiment,
                      run_pva)
