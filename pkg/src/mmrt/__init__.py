"""Deterministic specular ray tracing and link-level evaluation for
millimeter-wave channels."""

from .channel import (
    ArrayConfig,
    LinkBudget,
    assemble_channel,
    beamforming_snr_db,
    noise_power_dbm,
    snr_series,
    steering_vector,
)
from .geom import (
    DEFAULT_TOLERANCES,
    Plane,
    Tolerances,
    Triangle,
    mirror_point,
    point_in_triangle,
    segment_plane_intersection,
    segment_triangle_intersect,
    vec3,
)
from .metrics import (
    CampaignReport,
    ComparisonReport,
    campaign_speedup,
    compare_campaigns,
    nrmse,
    snr_cdf,
    tradeoff_table,
)
from .scene import (
    Material,
    NodeConfig,
    Scene,
    Trajectory,
    load_scene,
    load_trajectory,
    make_indoor1,
    make_lroom,
    make_parking_lot,
    save_scene,
    save_trajectory,
)
from .tracer import (
    SPEED_OF_LIGHT_M_S,
    Mpc,
    TraceConfig,
    TraceResult,
    Tracer,
    free_space_gain_db,
    mpc_phase,
    path_gain_db,
    reflection_tree_candidate_count,
    trace_los,
    trace_reflection,
    trace_timestep,
    trace_trajectory,
)

__version__ = "0.1.0"
