from .sequence import SequenceFile, SequenceFormatError, load_sequence, save_sequence
from .synthetic import SyntheticConfig, generate_synthetic_dataset, INTERACTION_TYPES
from .training import (
    build_pose_dataset,
    build_control_windows,
    build_contact_dataset,
)
from .augment import augment_object_swap, AugmentResult
from .cleanup import temporal_smooth, remove_foot_slide, detect_ground_foot_contacts

__all__ = [
    "SequenceFile",
    "SequenceFormatError",
    "load_sequence",
    "save_sequence",
    "SyntheticConfig",
    "generate_synthetic_dataset",
    "INTERACTION_TYPES",
    "build_pose_dataset",
    "build_control_windows",
    "build_contact_dataset",
    "augment_object_swap",
    "AugmentResult",
    "temporal_smooth",
    "remove_foot_slide",
    "detect_ground_foot_contacts",
]
