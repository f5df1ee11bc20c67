from .mesh import TriangleMesh, ObjParseError
from .chair import ChairModel, ChairRegistry, ChairTransform
from .parametric import ChairParams, build_chair_mesh, make_chair_set, contact_regions
from .encodings import (
    CHAIR_ENCODING_LEN,
    EGO_ENCODING_LEN,
    encode_chair_centric,
    encode_chair_centered,
    encode_ego_cylinder,
    ego_cell_index,
)
from .contacts import ContactSpec, ContactHit, detect_contacts, project_contact

__all__ = [
    "TriangleMesh",
    "ObjParseError",
    "ChairModel",
    "ChairRegistry",
    "ChairTransform",
    "ChairParams",
    "build_chair_mesh",
    "make_chair_set",
    "contact_regions",
    "CHAIR_ENCODING_LEN",
    "EGO_ENCODING_LEN",
    "encode_chair_centric",
    "encode_chair_centered",
    "encode_ego_cylinder",
    "ego_cell_index",
    "ContactSpec",
    "ContactHit",
    "detect_contacts",
    "project_contact",
]
