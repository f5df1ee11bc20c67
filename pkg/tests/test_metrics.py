import numpy as np
import pytest

from chairmotion.metrics import (
    HandTrack,
    MetricUndefinedError,
    ace,
    ap_at_k,
    apd_contacts,
    apd_poses,
    apd_poses_sq,
    apd_poses_sq_fast,
)


def brute_ace(tracks):
    """Independent oracle: explicit double loop."""
    dists = []
    for t in tracks:
        best = np.inf
        for p in t.trajectory:
            d = np.sqrt(sum((p[i] - t.target[i]) ** 2 for i in range(3)))
            best = min(best, d)
        dists.append(best)
    return sum(dists) / len(dists) * 100.0


def brute_apd(features):
    n = len(features)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            total += np.sqrt(np.sum((features[i] - features[j]) ** 2))
    return total / (n * (n - 1))


def brute_apd_contacts(samples_per_object):
    total = 0.0
    count = 0
    for samples in samples_per_object:
        n = len(samples)
        for hand in range(2):
            for i in range(n):
                for j in range(n):
                    if i == j:
                        continue
                    d = samples[i, hand] * 100 - samples[j, hand] * 100
                    total += float(np.sum(d**2))
                    count += 1
    return total / count


# --------------------------------------------------------------------- ACE


def test_ace_exact_hit_contributes_zero():
    target = np.array([1.0, 2.0, 3.0])
    traj = np.vstack([np.zeros(3), target, np.ones(3)])
    assert ace([HandTrack(target, traj)]) == 0.0


def test_ace_straight_line_miss():
    # path passes 3 cm from the target at closest approach
    target = np.array([0.0, 0.03, 0.0])
    xs = np.linspace(-1, 1, 201)
    traj = np.stack([xs, np.zeros_like(xs), np.zeros_like(xs)], axis=1)
    track = HandTrack(target, traj)
    assert ace([track]) == pytest.approx(3.0, abs=1e-9)
    assert ace([track]) == pytest.approx(brute_ace([track]), abs=1e-9)


def test_ace_matches_bruteforce_randomized():
    rng = np.random.default_rng(0)
    tracks = [
        HandTrack(rng.normal(size=3), rng.normal(size=(50, 3))) for _ in range(7)
    ]
    assert ace(tracks) == pytest.approx(brute_ace(tracks), abs=1e-9)


def test_ace_undefined_without_hands():
    with pytest.raises(MetricUndefinedError):
        ace([])


# -------------------------------------------------------------------- AP@k


def test_ap_all_exact_hits():
    target = np.zeros(3)
    tracks = [HandTrack(target, np.zeros((5, 3))) for _ in range(4)]
    ap = ap_at_k(tracks)
    assert all(v == 1.0 for v in ap.values())


def test_ap_enumeration():
    # closest distances 2, 4, 6, 8 cm
    tracks = []
    for d_cm in (2, 4, 6, 8):
        target = np.array([0.0, 0.0, d_cm / 100.0])
        tracks.append(HandTrack(target, np.zeros((3, 3))))
    ap = ap_at_k(tracks)
    assert ap[3.0] == pytest.approx(0.25)
    assert ap[5.0] == pytest.approx(0.5)
    assert ap[7.0] == pytest.approx(0.75)
    assert ap[9.0] == pytest.approx(1.0)


def test_ap_monotone_in_k():
    rng = np.random.default_rng(1)
    tracks = [
        HandTrack(rng.normal(size=3), rng.normal(size=(30, 3))) for _ in range(20)
    ]
    ap = ap_at_k(tracks, thresholds_cm=(1, 2, 3, 5, 8, 13, 21, 100))
    vals = list(ap.values())
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_ace_below_k_implies_ap_one():
    rng = np.random.default_rng(2)
    tracks = []
    for _ in range(10):
        target = rng.normal(size=3)
        traj = target + rng.normal(size=(20, 3)) * 0.002  # all within ~1 cm
        tracks.append(HandTrack(target, traj))
    if ace(tracks) < 5.0:
        assert ap_at_k(tracks)[5.0] == 1.0


# --------------------------------------------------------------------- APD


def test_apd_identical_frames_zero():
    feats = np.tile(np.arange(5.0), (4, 1))
    assert apd_poses(feats) == 0.0


def test_apd_two_frames_is_distance():
    a = np.zeros(6)
    b = np.ones(6) * 2.0
    d = np.linalg.norm(a - b)
    assert apd_poses(np.stack([a, b])) == pytest.approx(d, abs=1e-12)


def test_apd_matches_bruteforce():
    rng = np.random.default_rng(3)
    feats = rng.normal(size=(25, 8))
    assert apd_poses(feats) == pytest.approx(brute_apd(feats), abs=1e-9)


def test_apd_permutation_invariant():
    rng = np.random.default_rng(4)
    feats = rng.normal(size=(15, 6))
    shuffled = feats[rng.permutation(15)]
    assert apd_poses(feats) == pytest.approx(apd_poses(shuffled), abs=1e-12)


def test_apd_sq_fast_matches_reference():
    rng = np.random.default_rng(5)
    for n in (2, 3, 10, 64):
        feats = rng.normal(size=(n, 12))
        assert apd_poses_sq_fast(feats) == pytest.approx(
            apd_poses_sq(feats), rel=1e-9, abs=1e-6
        )


def test_apd_needs_two_frames():
    with pytest.raises(MetricUndefinedError):
        apd_poses(np.zeros((1, 4)))


# ----------------------------------------------------------- contact APD


def test_apd_contacts_identical_zero():
    samples = np.tile(np.array([[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]]), (5, 1, 1))
    assert apd_contacts([samples]) == 0.0


def test_apd_contacts_small_case_closed_form():
    # one object, two samples, both hands 5 cm apart -> mean squared 25
    a = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    b = a + np.array([0.05, 0.0, 0.0])
    samples = np.stack([a, b])
    assert apd_contacts([samples]) == pytest.approx(25.0, abs=1e-9)


def test_apd_contacts_matches_bruteforce():
    rng = np.random.default_rng(6)
    objs = [rng.normal(size=(6, 2, 3)) * 0.2 for _ in range(4)]
    assert apd_contacts(objs) == pytest.approx(brute_apd_contacts(objs), rel=1e-9)


def test_apd_contacts_needs_two_samples():
    with pytest.raises(MetricUndefinedError):
        apd_contacts([np.zeros((1, 2, 3))])
