"""Evaluation metrics: contact accuracy (ACE, AP@k) and diversity (APD).

ACE takes, per constrained hand, the distance between the target contact and
the closest point of the synthesized hand trajectory, averaged over hands and
episodes (reported in cm). AP@k is the fraction reached within k cm. Pose
APD is the mean pairwise Euclidean distance between flattened pose features
over frames; contact APD follows the squared-distance form with per-hand and
per-object averaging (values quoted in cm by convention, though the squared
form makes the unit cm^2 strictly speaking).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

AP_THRESHOLDS_CM = (3.0, 5.0, 7.0, 9.0)


class MetricUndefinedError(ValueError):
    pass


@dataclass
class HandTrack:
    """One constrained hand in one episode: target + trajectory over frames."""

    target: np.ndarray  # (3,)
    trajectory: np.ndarray  # (T, 3)

    def closest_distance(self) -> float:
        d = np.linalg.norm(self.trajectory - self.target, axis=1)
        return float(d.min())


def hand_tracks_from_episode(result, skeleton) -> list[HandTrack]:
    """Per contact-goal segment, the constrained hands' world trajectories."""
    tracks = []
    wrists = {"left": skeleton.index("left_wrist"), "right": skeleton.index("right_wrist")}
    world = np.array([fr.world_positions() for fr in result.frames])
    for report in result.reports:
        a = report.start_frame
        b = min(report.end_frame, len(result.frames))
        if b <= a:
            continue
        for side in ("left", "right"):
            target = report.targets[side]
            if target is None:
                continue
            tracks.append(
                HandTrack(np.asarray(target), world[a:b, wrists[side]])
            )
    return tracks


def ace(tracks: list[HandTrack]) -> float:
    """Average contact error in cm over constrained hands."""
    if not tracks:
        raise MetricUndefinedError("no constrained hands: ACE is undefined")
    return float(np.mean([t.closest_distance() for t in tracks]) * 100.0)


def ap_at_k(
    tracks: list[HandTrack], thresholds_cm=AP_THRESHOLDS_CM
) -> dict[float, float]:
    """Fraction of contacts reached within each threshold."""
    if not tracks:
        raise MetricUndefinedError("no constrained hands: AP@k is undefined")
    dists_cm = np.array([t.closest_distance() * 100.0 for t in tracks])
    return {float(k): float(np.mean(dists_cm < k)) for k in thresholds_cm}


def apd_poses(features: np.ndarray) -> float:
    """Average pairwise Euclidean distance across frames' pose features.

    features: (N, D) flattened per-frame pose features; the O(N^2) pairwise
    form is authoritative.
    """
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    if n < 2:
        raise MetricUndefinedError("APD needs at least 2 frames")
    return float(pdist(features, metric="euclidean").mean())


def apd_poses_sq(features: np.ndarray) -> float:
    """Squared-distance variant, O(N^2) reference."""
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    if n < 2:
        raise MetricUndefinedError("APD needs at least 2 frames")
    return float((pdist(features, metric="sqeuclidean")).mean())


def apd_poses_sq_fast(features: np.ndarray) -> float:
    """O(N) mean-centered identity for the squared-distance APD.

    mean_{i != j} |x_i - x_j|^2 = 2N/(N-1) * mean per-dim variance summed.
    """
    features = np.asarray(features, dtype=np.float64)
    n = len(features)
    if n < 2:
        raise MetricUndefinedError("APD needs at least 2 frames")
    centered = features - features.mean(axis=0, keepdims=True)
    total_var = float(np.sum(centered**2) / n)
    return 2.0 * n / (n - 1) * total_var


def segment_frames(result, segment: str) -> np.ndarray:
    """Pose features of an episode restricted to 'approach' or 'sit' frames."""
    feats = []
    for fr, activity in zip(result.frames, result.activities):
        is_sit = activity != "approaching"
        if (segment == "sit") == is_sit:
            feats.append(fr.flat_features())
    return np.array(feats)


def apd_episodes(results, segment: str = "sit") -> float:
    """Pose APD pooled over the given segment of several episodes."""
    chunks = [segment_frames(r, segment) for r in results]
    chunks = [c for c in chunks if len(c)]
    if not chunks:
        raise MetricUndefinedError(f"no {segment} frames across episodes")
    return apd_poses(np.vstack(chunks))


def apd_contacts(samples_per_object: list[np.ndarray]) -> float:
    """Contact-position diversity: the squared-distance average, per hand and
    object, over all ordered sample pairs.

    samples_per_object: per object an (N, 2, 3) array of hand-contact pairs
    (meters). The value carries cm^2 semantics (squared distances of cm
    coordinates) but is conventionally quoted as "cm".
    """
    total = 0.0
    count = 0
    for samples in samples_per_object:
        samples = np.asarray(samples, dtype=np.float64)
        n = len(samples)
        if n < 2:
            raise MetricUndefinedError("APD needs at least 2 samples per object")
        for hand in range(2):
            pts = samples[:, hand, :] * 100.0  # cm
            d2 = pdist(pts, metric="sqeuclidean")
            # ordered pairs: each unordered pair counts twice
            total += 2.0 * d2.sum()
            count += n * (n - 1)
    if count == 0:
        raise MetricUndefinedError("no objects")
    # Eq. form: sum over hands/objects/pairs divided by 2 L N (N-1); the
    # bookkeeping above accumulates the same denominator per object
    return float(total / count)


def apd_contacts_rms(samples_per_object: list[np.ndarray]) -> float:
    """Display-friendly square root of the squared-distance average (cm)."""
    return float(np.sqrt(apd_contacts(samples_per_object)))


def evaluate_episodes(results, skeleton) -> dict:
    """The benchmark report: ACE, AP@k, APD per segment."""
    tracks = []
    for r in results:
        tracks.extend(hand_tracks_from_episode(r, skeleton))
    report: dict = {"episodes": len(results), "constrained_hands": len(tracks)}
    if tracks:
        report["ace_cm"] = ace(tracks)
        report["ap_at_k"] = {f"{k:g}": v for k, v in ap_at_k(tracks).items()}
    for segment in ("approach", "sit"):
        try:
            report[f"apd_{segment}"] = apd_episodes(results, segment)
        except MetricUndefinedError:
            report[f"apd_{segment}"] = None
    return report
