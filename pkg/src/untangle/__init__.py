"""Untangle labeled point sets with compactly supported flow diffeomorphisms."""
from .errors import (
    ChartInconsistency,
    ConvergenceError,
    DimensionMismatch,
    DocumentError,
    IntegrationDiverged,
    InvalidParameters,
    PlanningFailed,
    RelocationFailed,
    ShapeError,
    UntangleError,
)
from .geometry import Ball, Hyperplane, LabeledDataset, PointCloud
from .kernels import BumpProfile, bump_derivative, bump_eval
from .flows import (
    AffineChart,
    ChartCompression,
    Compression,
    DiffeoPipeline,
    FlowMap,
    IdentityChart,
    Translation,
    flow_apply,
    flow_invert,
    make_chart_compression,
    make_compression,
    make_translation,
    pipeline_apply,
    pipeline_invert_apply,
)
from .transport import Path, cover_path, make_transport, plan_path, safety_radius
from .relocation import (
    LiftSpec,
    RelocationProblem,
    apply_to_clouds,
    assign_label_subtargets,
    layout_targets,
    lift_embed,
    lift_relocate_project,
    project_down,
    relocate_disjoint,
    verify_relocation,
)
from .separability import (
    SeparationCertificate,
    certify_pairwise,
    hull_distance,
    separate_pair,
    verify_certificate,
)
from .neuralnet import Activation, Network, load_fixture, load_network, network_eval
from . import datasets

__version__ = "0.1.0"
