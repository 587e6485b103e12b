"""Map-assisted indoor positioning from per-path angle of arrival and time of flight."""

from types import ModuleType as _ModuleType

from .constants import SPEED_OF_LIGHT
from .core import (
    CandidateLocation,
    Cluster,
    MapAtParams,
    PositionEstimate,
    cluster_candidates,
    estimate_position,
    generate_candidates,
    locate,
    locate_many,
)
from .error_model import (
    ErrorStats,
    NoiseParams,
    add_noise,
    centroid_error_covariance,
    monte_carlo_locate,
    predicted_centroid_error,
    run_trials,
    theoretical_mean_error,
    theoretical_second_moment,
)
from .estimator import MapAtLocator
from .exceptions import (
    InvalidMapError,
    MapAtError,
    MapParseError,
    NoCandidatesError,
    OutOfRangeError,
    PreconditionError,
    ProfileParseError,
    UnreachableError,
)
from .floormap import Bounds, FloorMap, bundled_office_map, dump_map, load_map, read_map
from .geometry import (
    Hit,
    Point,
    Ray,
    Wall,
    first_hit,
    mirror_point,
    normalize_azimuth,
    reflect_ray,
)
from .gpp import (
    TS,
    Lobe,
    PowerAngleProfile,
    absolute_delays,
    extract_lobes,
    quantize_delay,
    rstd_resolution,
    ta_min_distance,
    utdoa_resolution,
)
from .scenario import ScenarioConfig, load_scenario
from .tracer import Interaction, Mpc, TraceParams, los_visible, trace_paths

__version__ = "0.1.0"

__all__ = sorted(
    name for name, obj in globals().items()
    if not name.startswith("_") and not isinstance(obj, _ModuleType)
)
