"""Language-driven aerial mission generation and trajectory evaluation.

A natural-language request plus a georeferenced satellite image become a
ground-station-compatible waypoint mission; a benchmark harness scores
generated missions against human ground truth with sequential, DTW and
nearest-neighbour RMSE metrics.
"""

from .evaluation import (
    EvalReport,
    MetricResult,
    SampleResult,
    Trajectory,
    aggregate,
    dtw_rmse,
    evaluate_pair,
    knn_rmse,
    length_delta_pct,
    sequential_rmse,
    trajectory_length_m,
)
from .geo import (
    EARTH_RADIUS_M,
    BoundsError,
    GeoPoint,
    GeoReference,
    PixelPoint,
    ProjectionDomainError,
    geo_to_pixel,
    haversine_m,
    local_xy_m,
    pixel_to_geo,
)
from .mission import (
    ActionKind,
    EmptyMissionError,
    MissionItem,
    MissionPlan,
    PlanValidationError,
    SequenceError,
    WaypointFormatError,
    build_survey_plan,
    extract_trajectory,
    make_home,
    parse_wpl,
    serialize_wpl,
    validate_flight_shape,
)
from .pipeline import (
    ActionGenerationError,
    MissionRequest,
    PipelineTrace,
    RejectedPlanError,
    StageError,
    generate_actions_llm,
    order_waypoints,
    run_pipeline,
)
from .providers import (
    ChatCompletionsProvider,
    GoalSet,
    GroundedPoints,
    Instruction,
    MockProvider,
    NoGoalsError,
    ProviderConfig,
    ProviderError,
    ResponseParseError,
    build_provider,
    extract_goals,
    locate_objects,
    parse_point_markup,
)

__version__ = "0.1.0"
