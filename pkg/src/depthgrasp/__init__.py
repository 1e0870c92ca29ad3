"""Depth-camera grasp perception pipeline.

Turns a raw depth frame into a servo velocity command: backprojection to a
3D point cloud, confidence-ordered plane consensus to strip the table,
density clustering of the remaining object points, centroid scene graph
with target selection, and a distance-triggered control state machine.
Ships with a synthetic depth simulator and an evaluation/benchmark harness.
"""

from depthgrasp.depth_io import (
    CameraIntrinsics,
    DepthFrame,
    PointCloud,
    backproject,
    load_depth_frame,
    load_intrinsics,
    project,
)
from depthgrasp.density import (
    DensityParams,
    OrderedCloud,
    confidence_weights,
    neighborhood_density,
    sort_by_confidence,
)
from depthgrasp.plane_fit import (
    PlaneModel,
    ProsacParams,
    fit_plane_prosac,
    plane_from_three_points,
    point_plane_distance,
    remove_plane,
)
from depthgrasp.clustering import ClusterAssignment, ClusterParams, dbscan, dbscan_reference
from depthgrasp.scene_graph import (
    ObjectNode,
    SceneGraph,
    cluster_centroids_pca,
    select_target,
    target_distance,
)
from depthgrasp.control import (
    ControlConfig,
    ControllerState,
    ForceTriggerConfig,
    Phase,
    step_button,
    step_force,
    step_vision,
)
from depthgrasp.pipeline import PipelineConfig, process_frame

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "DepthFrame",
    "PointCloud",
    "backproject",
    "load_depth_frame",
    "load_intrinsics",
    "project",
    "DensityParams",
    "OrderedCloud",
    "confidence_weights",
    "neighborhood_density",
    "sort_by_confidence",
    "PlaneModel",
    "ProsacParams",
    "fit_plane_prosac",
    "plane_from_three_points",
    "point_plane_distance",
    "remove_plane",
    "ClusterAssignment",
    "ClusterParams",
    "dbscan",
    "dbscan_reference",
    "ObjectNode",
    "SceneGraph",
    "cluster_centroids_pca",
    "select_target",
    "target_distance",
    "ControlConfig",
    "ControllerState",
    "ForceTriggerConfig",
    "Phase",
    "step_button",
    "step_force",
    "step_vision",
    "PipelineConfig",
    "process_frame",
]
