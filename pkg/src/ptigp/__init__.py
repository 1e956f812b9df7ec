"""Geometric phases of pseudo-Hermitian (PT-symmetric) quantum systems.

Pure-state loop phases, the proper gauge map, thermal interferometric phases
and their finite-temperature critical points, for finite-dimensional systems.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AdiabaticityBreakdown,
    BrokenPTPhase,
    ConfigError,
    DegenerateSpectrum,
    ImaginaryLeak,
    LevelOrderSwap,
    MetricNotPositive,
    NonConvergence,
    NotHermitian,
    NotPositiveDefinite,
    NotTwoLevel,
    PTError,
    SingularMatrix,
    StepTooCoarse,
    UnsupportedParameters,
    ZeroOverlap,
)
from .gaugemap import ProperMapPath, SimilarityMap, proper_map_along, properness_residual, sqrt_metric_map  # noqa: E402
from .models import get_model  # noqa: E402
from .paths import LoopPath, latitude_loop, polyline  # noqa: E402
from .phases import (  # noqa: E402
    PhaseReport,
    berry_w_formula,
    dynamic_phases,
    evolve_oracle,
    loop_phases,
    parallel_transport_residual,
    theta1_loop,
    theta2_loop,
)
from .ptsystem import BiorthogonalSpectrum, PTSystem, check_pseudo_hermiticity, spectrum_along, spectrum_at  # noqa: E402
from .thermal import (  # noqa: E402
    CriticalPoint,
    IGPReport,
    Regime,
    ThermalState,
    critical_scan,
    igp_loop,
    igp_open,
    regime_classify,
    thermal_state,
)
