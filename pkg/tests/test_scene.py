import numpy as np
import pytest

from chairmotion.kinematics import RootTransform
from chairmotion.scene import (
    CHAIR_ENCODING_LEN,
    EGO_ENCODING_LEN,
    ChairModel,
    ChairParams,
    ChairRegistry,
    ChairTransform,
    ObjParseError,
    TriangleMesh,
    build_chair_mesh,
    contact_regions,
    detect_contacts,
    encode_chair_centric,
    encode_ego_cylinder,
    make_chair_set,
    project_contact,
)
from chairmotion.scene.encodings import EGO_ANGULAR, EGO_RADIAL, EGO_VERTICAL
from chairmotion.scene.mesh import triangles_intersect_boxes
from chairmotion.scene.parametric import box_mesh, seat_metadata


def default_chair(transform=None):
    p = ChairParams()
    return ChairModel("c0", build_chair_mesh(p), transform, seat_metadata(p)), p


# ----------------------------------------------------------------- obj/mesh


def test_obj_roundtrip():
    mesh = box_mesh([0, 0, 0], [1, 2, 3])
    text = mesh.to_obj_text()
    back = TriangleMesh.from_obj_text(text)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.faces, mesh.faces)


def test_obj_parse_error_line_number():
    bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 nope\n"
    with pytest.raises(ObjParseError) as e:
        TriangleMesh.from_obj_text(bad)
    assert e.value.line_number == 4


def test_obj_empty_rejected():
    with pytest.raises(ObjParseError):
        TriangleMesh.from_obj_text("# nothing here\n")


def closest_point_oracle(mesh, p):
    """Brute force: best of face-plane, edge, and vertex candidates."""
    best = None
    best_d = np.inf
    for f in mesh.faces:
        tri = mesh.vertices[f]
        cands = [tri[0], tri[1], tri[2]]
        # edges
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            t = np.clip(np.dot(p - a, b - a) / np.dot(b - a, b - a), 0, 1)
            cands.append(a + t * (b - a))
        # plane projection if inside
        n = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        nn = np.dot(n, n)
        if nn > 1e-24:
            q = p - n * np.dot(p - tri[0], n) / nn
            # barycentric inside test
            v0, v1, v2 = tri[1] - tri[0], tri[2] - tri[0], q - tri[0]
            d00, d01, d11 = np.dot(v0, v0), np.dot(v0, v1), np.dot(v1, v1)
            d20, d21 = np.dot(v2, v0), np.dot(v2, v1)
            den = d00 * d11 - d01 * d01
            if abs(den) > 1e-24:
                v = (d11 * d20 - d01 * d21) / den
                w = (d00 * d21 - d01 * d20) / den
                if v >= -1e-12 and w >= -1e-12 and v + w <= 1 + 1e-12:
                    cands.append(q)
        for cpt in cands:
            d = np.linalg.norm(p - cpt)
            if d < best_d:
                best_d, best = d, cpt
    return best, best_d


def test_closest_point_matches_oracle():
    chair, _ = default_chair()
    rng = np.random.default_rng(0)
    for _ in range(30):
        p = rng.uniform([-1, -0.2, -1], [1, 1.5, 1])
        cp, d, _ = chair.mesh.closest_point(p)
        ocp, od = closest_point_oracle(chair.mesh, p)
        assert abs(d - od) < 1e-9
        assert np.linalg.norm(cp - ocp) < 1e-9


def voxel_oracle(mesh, centers, half):
    """Slow per-pair SAT via the same primitive on single boxes."""
    a, b, c = mesh.triangles()
    out = np.zeros(len(centers), dtype=bool)
    for i, ctr in enumerate(centers):
        out[i] = triangles_intersect_boxes(a, b, c, ctr[None, :], half).any()
    return out


def test_voxelization_cube_matches_bruteforce():
    mesh = box_mesh([-0.5, 0.0, -0.5], [0.5, 1.0, 0.5])
    chair = ChairModel("cube", mesh)
    occ = chair.grid_occupancy.astype(bool)
    oracle = voxel_oracle(mesh, chair.grid_centers_local, chair.grid_cell / 2.0)
    assert np.array_equal(occ, oracle)
    assert occ.any()
    # a hollow cube: strictly interior cells of the 8x8x8 stay empty
    assert not occ.all()


# --------------------------------------------------------------- encodings


def test_chair_encoding_shape_and_ranges():
    chair, _ = default_chair()
    enc = encode_chair_centric(chair, np.array([1.0, 0.9, 2.0]))
    assert enc.shape == (CHAIR_ENCODING_LEN,)
    occ = enc.reshape(-1, 4)[:, 0]
    assert np.all((occ >= 0) & (occ <= 1))
    assert np.all(np.isfinite(enc))


def test_chair_encoding_root_at_voxel_center():
    chair, _ = default_chair()
    center_local = chair.grid_centers_local[100]
    world = chair.transform.to_world(center_local)
    enc = encode_chair_centric(chair, world).reshape(-1, 4)
    assert np.max(np.abs(enc[100, 1:])) < 1e-12


def test_chair_encoding_translation_invariance():
    chair, _ = default_chair()
    root = np.array([0.6, 0.95, 1.1])
    enc0 = encode_chair_centric(chair, root)

    shift = np.array([2.0, 0.0, 0.0])
    moved = chair.with_transform(
        ChairTransform(chair.transform.position + shift, chair.transform.yaw)
    )
    enc1 = encode_chair_centric(moved, root + shift)
    occ0, occ1 = enc0.reshape(-1, 4)[:, 0], enc1.reshape(-1, 4)[:, 0]
    assert np.array_equal(occ0, occ1)
    assert np.max(np.abs(enc0 - enc1)) < 1e-9


def test_chair_encoding_rigid_invariance():
    chair, _ = default_chair(ChairTransform(np.array([0.3, 0.0, -0.2]), yaw=0.4))
    root = np.array([0.9, 0.95, 1.3])
    enc0 = encode_chair_centric(chair, root)

    from chairmotion.kinematics.rotations import yaw_matrix

    g_yaw = 1.1
    g_t = np.array([-1.5, 0.0, 2.5])
    rot = yaw_matrix(g_yaw)
    moved = chair.with_transform(
        ChairTransform(rot @ chair.transform.position + g_t, chair.transform.yaw + g_yaw)
    )
    enc1 = encode_chair_centric(moved, rot @ root + g_t)
    assert np.max(np.abs(enc0 - enc1)) < 1e-9


def test_chair_encoding_offset_difference_identity():
    # offset(root at a) - offset(root at b) = (b - a) in the chair frame
    chair, _ = default_chair()
    a = np.array([0.2, 1.0, 0.5])
    b = np.array([-0.4, 0.8, 1.5])
    ea = encode_chair_centric(chair, a).reshape(-1, 4)[:, 1:]
    eb = encode_chair_centric(chair, b).reshape(-1, 4)[:, 1:]
    expected = chair.transform.to_local(b) - chair.transform.to_local(a)
    assert np.max(np.abs((ea - eb) - expected)) < 1e-9


def test_ego_encoding_far_chair_all_zero():
    chair, _ = default_chair(ChairTransform(np.array([10.0, 0.0, 0.0])))
    enc = encode_ego_cylinder(chair, RootTransform(0, 0, 0, 0.95))
    assert enc.shape == (EGO_ENCODING_LEN,)
    assert np.all(enc == 0)


def test_ego_encoding_over_seat_nonzero():
    chair, _ = default_chair()
    root = RootTransform(0.0, 0.0, 0.0, 0.95)  # standing on the seat footprint
    enc = encode_ego_cylinder(chair, root)
    assert enc.sum() > 0


def test_ego_encoding_bin_aligned_rotation_permutes():
    chair, _ = default_chair(ChairTransform(np.array([0.5, 0.0, 0.6]), yaw=0.2))
    root = RootTransform(-0.1, 0.25, 0.3, 0.95)
    enc0 = encode_ego_cylinder(chair, root)

    # rotate chair and character together by 90 deg about the world origin
    from chairmotion.kinematics.rotations import yaw_matrix

    g = np.pi / 2.0
    rot = yaw_matrix(g)
    moved = chair.with_transform(
        ChairTransform(rot @ chair.transform.position, chair.transform.yaw + g)
    )
    p = rot @ np.array([root.x, 0.0, root.z])
    root2 = RootTransform(p[0], p[2], root.yaw + g, root.height)
    enc1 = encode_ego_cylinder(moved, root2)
    # same cells in the co-rotated frame
    assert np.array_equal(enc0, enc1)


def test_ego_encoding_value_range():
    chair, _ = default_chair()
    enc = encode_ego_cylinder(chair, RootTransform(0.4, 0.3, 0.0, 0.95))
    assert set(np.unique(enc)).issubset({0.0, 1.0})
    assert enc.shape == (EGO_ANGULAR * EGO_RADIAL * EGO_VERTICAL,)


# ----------------------------------------------------------------- contacts


def test_detect_contact_on_vertex():
    chair, _ = default_chair()
    v = chair.world_mesh().vertices[0]
    pos = np.zeros((22, 3))
    pos[9] = v
    hits = detect_contacts(pos, [9], chair)
    assert hits[0].in_contact
    assert hits[0].distance < 1e-12


def test_detect_contact_far_hand():
    chair, _ = default_chair()
    pos = np.zeros((22, 3))
    pos[9] = chair.seat_center_world + np.array([0.0, 1.0, 0.0])
    hits = detect_contacts(pos, [9], chair)
    assert not hits[0].in_contact


def test_detect_threshold_monotone():
    chair, _ = default_chair()
    rng = np.random.default_rng(1)
    pos = np.zeros((22, 3))
    keys = [0, 9, 13, 16, 20]
    for j in keys:
        pos[j] = chair.seat_center_world + rng.uniform(-0.12, 0.12, 3)
    sets = []
    for thr in (3.0, 5.0, 9.0):
        hits = detect_contacts(pos, keys, chair, threshold_cm=thr)
        sets.append({h.joint for h in hits if h.in_contact})
    assert sets[0] <= sets[1] <= sets[2]


def test_project_contact_on_surface_unchanged():
    chair, _ = default_chair()
    p = chair.world_mesh().vertices[5]
    out = project_contact(p, chair)
    assert out is not None
    assert np.linalg.norm(out - p) < 1e-9


def test_project_contact_normal_offset():
    chair, p = default_chair()
    # 5 cm above the middle of the seat surface: projects straight down
    seat_top = np.array([0.05, p.seat_height, 0.1])
    probe = seat_top + np.array([0.0, 0.05, 0.0])
    out = project_contact(probe, chair)
    assert out is not None
    assert np.linalg.norm(out - seat_top) < 1e-9


def test_project_contact_far_point_neglected():
    chair, _ = default_chair()
    assert project_contact(np.array([0.0, 3.0, 0.0]), chair) is None


def test_project_contact_idempotent():
    chair, _ = default_chair()
    rng = np.random.default_rng(2)
    for _ in range(20):
        probe = chair.seat_center_world + rng.uniform(-0.3, 0.3, 3)
        out = project_contact(probe, chair)
        if out is None:
            continue
        again = project_contact(out, chair)
        assert again is not None
        assert np.linalg.norm(again - out) < 1e-9


# ------------------------------------------------------------ chairs et al.


def test_registry_roundtrip(tmp_path):
    chairs = make_chair_set(3, seed=4)
    reg = ChairRegistry()
    for chair, _ in chairs:
        reg.add(chair)
    reg.save(tmp_path)
    back = ChairRegistry.load(tmp_path)
    assert back.ids() == reg.ids()
    c0 = back.get("chair_000")
    assert np.allclose(c0.mesh.vertices, reg.get("chair_000").mesh.vertices)
    assert np.allclose(c0.grid_occupancy, reg.get("chair_000").grid_occupancy)


def test_contact_regions_on_surface():
    for chair, params in make_chair_set(6, seed=5):
        regions = contact_regions(params)
        for side in ("left", "right"):
            center, half = regions[side]
            d = chair.mesh.distance(center)
            assert d < 0.01, f"{chair.id} {side} patch center {d:.3f} m off surface"


def test_empty_mesh_rejected():
    with pytest.raises(Exception):
        ChairModel("bad", TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int)))
