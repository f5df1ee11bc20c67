import numpy as np
import pytest

from chairmotion.dataio import (
    AugmentResult,
    SequenceFormatError,
    SyntheticConfig,
    augment_object_swap,
    detect_ground_foot_contacts,
    generate_synthetic_dataset,
    load_sequence,
    remove_foot_slide,
    save_sequence,
    temporal_smooth,
)
from chairmotion.dataio.cleanup import foot_slide_metric, smoothness_objective
from chairmotion.dataio.training import (
    SequenceFeatures,
    build_contact_dataset,
    build_control_windows,
    build_pose_dataset,
    resolve_chair,
)
from chairmotion.kinematics import default_skeleton, sample_trajectory_window
from chairmotion.posenet import assemble_input, input_slice
from chairmotion.scene import make_chair_set


@pytest.fixture(scope="module")
def small_world():
    chairs = make_chair_set(4, seed=11)
    registry = {c.id: c for c, _ in chairs}
    seqs = generate_synthetic_dataset(chairs, SyntheticConfig(sequences=8, seed=5))
    return chairs, registry, seqs


# ------------------------------------------------------------- sequence io


def test_sequence_roundtrip_bytes(tmp_path, small_world):
    _, _, seqs = small_world
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    save_sequence(seqs[0], p1)
    loaded = load_sequence(p1)
    save_sequence(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert len(loaded) == len(seqs[0])
    assert loaded.interaction_type == seqs[0].interaction_type
    for a, b in zip(seqs[0].frames[:5], loaded.frames[:5]):
        assert np.array_equal(a.joint_positions, b.joint_positions)
        assert np.array_equal(a.joint_rotations, b.joint_rotations)


def test_sequence_corrupt_line_names_line(tmp_path, small_world):
    _, _, seqs = small_world
    p = tmp_path / "c.jsonl"
    save_sequence(seqs[0], p)
    lines = p.read_text().splitlines()
    lines[3] = lines[3][:-20]  # mangle frame on line 4
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SequenceFormatError) as e:
        load_sequence(p)
    assert "line 4" in str(e.value)


def test_sequence_wrong_fps_rejected(tmp_path, small_world):
    import json

    _, _, seqs = small_world
    p = tmp_path / "d.jsonl"
    save_sequence(seqs[0], p)
    lines = p.read_text().splitlines()
    header = json.loads(lines[0])
    header["fps"] = 60.0
    lines[0] = json.dumps(header, sort_keys=True)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(SequenceFormatError) as e:
        load_sequence(p)
    assert "fps" in str(e.value)


def test_sequence_truncated_rejected(tmp_path, small_world):
    _, _, seqs = small_world
    p = tmp_path / "e.jsonl"
    save_sequence(seqs[0], p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-10]) + "\n")
    with pytest.raises(SequenceFormatError) as e:
        load_sequence(p)
    assert "truncated" in str(e.value)


# ---------------------------------------------------------------- generator


def test_generator_deterministic(small_world):
    chairs, _, seqs = small_world
    again = generate_synthetic_dataset(chairs, SyntheticConfig(sequences=8, seed=5))
    for a, b in zip(seqs, again):
        assert a.interaction_type == b.interaction_type
        assert len(a) == len(b)
        for fa, fb in zip(a.frames, b.frames):
            assert np.array_equal(fa.joint_positions, fb.joint_positions)
            assert np.array_equal(fa.joint_rotations, fb.joint_rotations)


def test_generator_style_mix_degenerate(small_world):
    chairs, _, _ = small_world
    cfg = SyntheticConfig(sequences=6, seed=2, style_mix=(0, 0, 0, 1, 0, 0))
    seqs = generate_synthetic_dataset(chairs, cfg)
    for s in seqs:
        assert s.interaction_type == "no_contact"
        assert not (s.contact_flags[:, 1:3] > 0.5).any()


def test_generator_contacts_touch_surface(small_world):
    chairs, registry, seqs = small_world
    skel = default_skeleton()
    checked = 0
    for s in seqs:
        chair = resolve_chair(registry, s)
        for t in range(len(s)):
            for h, side in enumerate(("left", "right")):
                if s.contact_flags[t, 1 + h] > 0.5:
                    w = s.frames[t].world_positions()
                    d = chair.distance_world(w[skel.index(f"{side}_wrist")])
                    assert d < 0.05
                    checked += 1
    if not any(s.interaction_type in ("right_hand", "left_hand", "both_hands", "free") for s in seqs):
        pytest.skip("no contact styles drawn")
    assert checked > 0


def test_generator_phases_monotone_within_reach(small_world):
    _, _, seqs = small_world
    for s in seqs:
        ph = s.local_phases
        assert ph.min() >= 0 and ph.max() <= 1


def test_training_input_matches_runtime_assembly(small_world):
    # the vectorized builder and the runtime assembler must agree exactly
    chairs, registry, seqs = small_world
    skel = default_skeleton()
    seq = next(s for s in seqs if s.interaction_type != "locomotion")
    chair = resolve_chair(registry, seq)
    feats = SequenceFeatures(seq, chair, skel)
    for i in (0, len(seq) // 2, len(seq) - 2):
        x_fast = feats.input_vector(i)
        window = sample_trajectory_window(seq.frames, i, seq.fps)
        x_ref = assemble_input(
            seq.frames[i], window, seq.goal, chair,
            feats.control_signal(i), seq.global_phase[i],
        )
        assert np.max(np.abs(x_fast - x_ref)) < 1e-12


def test_pose_dataset_control_zeroed_before_activation(small_world):
    chairs, registry, seqs = small_world
    seq = next(s for s in seqs if s.interaction_type in ("both_hands", "right_hand", "left_hand"))
    skel = default_skeleton()
    feats = SequenceFeatures(seq, resolve_chair(registry, seq), skel)
    act = feats.activation_frame
    assert act > 0
    for i in range(0, act, 10):
        assert np.all(feats.control_signal(i) == 0)


def test_contact_dataset_skips_locomotion(small_world):
    chairs, registry, seqs = small_world
    data = build_contact_dataset(seqs, registry)
    n_expected = sum(1 for s in seqs if s.interaction_type != "locomotion")
    assert len(data.scene) == n_expected


# ------------------------------------------------------------ augmentation


def test_augment_identity_is_noop(small_world):
    chairs, registry, seqs = small_world
    seq = next(s for s in seqs if s.interaction_type in ("both_hands", "right_hand", "left_hand"))
    chair = resolve_chair(registry, seq)
    res = augment_object_swap(seq, chair, chair, scale=1.0)
    assert res.accepted
    for a, b in zip(seq.frames[::20], res.sequence.frames[::20]):
        assert np.max(np.abs(a.joint_positions - b.joint_positions)) < 1e-6


def test_augment_scale_keeps_contacts(small_world):
    chairs, registry, seqs = small_world
    skel = default_skeleton()
    seq = next(s for s in seqs if s.interaction_type in ("right_hand", "left_hand", "both_hands"))
    chair = resolve_chair(registry, seq)
    res = augment_object_swap(seq, chair, chair, scale=1.1)
    assert res.accepted, res.to_json()
    target_chair = chair.scaled(1.1).with_transform(chair.transform)
    out = res.sequence
    for t in range(len(out)):
        for h, side in enumerate(("left", "right")):
            if out.contact_flags[t, 1 + h] > 0.5:
                w = out.frames[t].world_positions()
                d = target_chair.distance_world(w[skel.index(f"{side}_wrist")])
                assert d < 0.012, (t, side, d)


def test_augment_swap_to_other_chair_reports(small_world):
    chairs, registry, seqs = small_world
    seq = next(s for s in seqs if s.interaction_type in ("right_hand", "left_hand", "both_hands"))
    src = resolve_chair(registry, seq)
    other = next(c for c, _ in chairs if c.id != seq.chair_id)
    res = augment_object_swap(seq, src, other, scale=1.0)
    assert isinstance(res, AugmentResult)
    assert res.contact_frames > 0
    assert res.max_residual >= 0
    if res.accepted:
        assert res.sequence is not None
        assert len(res.sequence) == len(seq)
    else:
        assert res.sequence is None


def test_augment_rejects_bad_scale(small_world):
    chairs, registry, seqs = small_world
    chair = resolve_chair(registry, seqs[0])
    with pytest.raises(ValueError):
        augment_object_swap(seqs[0], chair, chair, scale=2.0)


# ----------------------------------------------------------------- cleanup


def test_smooth_constant_sequence_unchanged(small_world):
    chairs, registry, seqs = small_world
    seq = seqs[0]
    # constant sub-sequence: repeat one frame
    from chairmotion.dataio.sequence import SequenceFile

    n = 10
    const = SequenceFile(
        subject="t", chair_id=seq.chair_id, interaction_type="no_contact",
        frames=[seq.frames[0].copy() for _ in range(n)],
        contact_flags=np.zeros((n, 5)), local_phases=np.zeros((n, 2)),
        global_phase=np.zeros(n), contacts=seq.contacts, goal=seq.goal,
        chair_transform=seq.chair_transform,
    )
    out, trace = temporal_smooth(const)
    for a, b in zip(const.frames, out.frames):
        assert np.max(np.abs(a.joint_rotations - b.joint_rotations)) < 1e-8
    assert trace[0] == pytest.approx(0.0, abs=1e-18)


def test_smooth_objective_monotone_and_reduces_spike(small_world):
    chairs, registry, seqs = small_world
    seq = next(s for s in seqs if len(s) > 60)
    # inject a one-frame rotation jitter spike
    import copy

    spiked = copy.deepcopy(seq)
    mid = len(spiked) // 2
    spiked.frames[mid].joint_rotations[5] += 0.25
    out, trace = temporal_smooth(spiked, iterations=50)
    assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def spike_acc(frames, t):
        r = np.array([frames[t - 1].joint_rotations, frames[t].joint_rotations, frames[t + 1].joint_rotations])
        return float(np.linalg.norm(r[2] - 2 * r[1] + r[0]))

    before = spike_acc(spiked.frames, mid)
    after = spike_acc(out.frames, mid)
    assert after < 0.5 * before


def test_foot_slide_removal(small_world):
    chairs, registry, seqs = small_world
    seq = next(s for s in seqs if s.interaction_type != "locomotion")
    skel = default_skeleton()

    # inject 2 cm/frame slide on the left ankle during a 10-frame window
    import copy

    bad = copy.deepcopy(seq)
    t0 = 5
    ankle = skel.index("left_ankle")
    for k in range(10):
        fr = bad.frames[t0 + k]
        fr.joint_positions[ankle] += fr.root.direction_to_local(
            np.array([0.02 * k, 0.0, 0.0])
        )
    labels = np.zeros((len(bad), 4), dtype=bool)
    labels[t0 : t0 + 10, 0] = True  # left ankle in contact
    before = foot_slide_metric(bad, labels, skel)
    assert before > 0.015
    fixed = remove_foot_slide(bad, labels, skel)
    after = foot_slide_metric(fixed, labels, skel)
    assert after < 0.002, f"slide {after*1000:.2f} mm/frame"
    # frames outside the group + blend window untouched
    for t in list(range(0, max(t0 - 4, 0))) + list(range(t0 + 14, len(bad))):
        assert np.max(np.abs(fixed.frames[t].joint_positions - bad.frames[t].joint_positions)) < 1e-12


def test_foot_slide_static_feet_unchanged(small_world):
    chairs, registry, seqs = small_world
    from chairmotion.dataio.sequence import SequenceFile

    base = seqs[0].frames[0]
    n = 12
    const = SequenceFile(
        subject="t", chair_id=seqs[0].chair_id, interaction_type="no_contact",
        frames=[base.copy() for _ in range(n)],
        contact_flags=np.zeros((n, 5)), local_phases=np.zeros((n, 2)),
        global_phase=np.zeros(n), contacts=seqs[0].contacts, goal=seqs[0].goal,
        chair_transform=seqs[0].chair_transform,
    )
    labels = np.ones((n, 4), dtype=bool)
    out = remove_foot_slide(const, labels)
    for a, b in zip(const.frames, out.frames):
        assert np.max(np.abs(a.joint_positions - b.joint_positions)) < 1e-8


def test_group_mean_targets_independent_recompute(small_world):
    from chairmotion.dataio.cleanup import group_mean_targets

    rng = np.random.default_rng(8)
    pos = rng.normal(size=(30, 3))
    labels = np.zeros(30, dtype=bool)
    labels[4:9] = True
    labels[15:20] = True
    groups = group_mean_targets(pos, labels)
    assert len(groups) == 2
    g0 = groups[0]
    manual = sum(pos[t] for t in range(4, 9)) / 5
    assert np.max(np.abs(g0[2] - manual)) < 1e-12


def test_detect_ground_contacts_shape(small_world):
    _, _, seqs = small_world
    labels = detect_ground_foot_contacts(seqs[0])
    assert labels.shape == (len(seqs[0]), 4)
    assert labels.any()
