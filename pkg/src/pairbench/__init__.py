"""Image pair retrieval evaluation with geometric ground truth.

The harness ranks all ordered image pairs between two subsets of a scene
by descriptor cosine similarity, labels each pair with a two-criterion
geometric ground truth (view angle, then essential-matrix rotation
agreement), and reports P@k, R@k, and mAP@k with timing statistics.
"""
from .codecs import (
    CorrespondenceSet,
    DescriptorSet,
    read_correspondence_file,
    read_descriptor_file,
    write_correspondence_file,
    write_descriptor_file,
)
from .errors import (
    CheiralityAmbiguousError,
    ConfigurationError,
    DataIntegrityError,
    HarnessError,
    NumericalError,
)
from .geometry import (
    EssentialMatrix,
    GeometryConfig,
    RelativePose,
    geodesic_distance,
    relative_rotation,
    sampson_distance,
    view_angle,
    view_direction,
)
from .groundtruth import (
    GroundTruthLabel,
    GroundTruthMatrix,
    LabelStatus,
    label_pair,
    label_scene,
)
from .metrics import (
    DatasetMetrics,
    SceneMetrics,
    aggregate_dataset,
    compute_scene_metrics,
)
from .ransac import RansacResult, RansacStatus, ransac_essential
from .retrieval import PairRanking, cosine_similarity, similarity_matrix, top_k_pairs
from .scene import (
    CameraIntrinsics,
    ContiguousHalves,
    ExplicitRanges,
    ImageRecord,
    Pose,
    SceneManifest,
    load_manifest,
    load_manifest_dir,
    split_scene,
    write_manifest,
)

__version__ = "0.1.0"
