"""RIS codebook construction, sampling distribution and block switching."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ArrayGeometry, SteeringDirection, steering_vector

KMEANS_MAX_ITER = 50
BROADSIDE = SteeringDirection(0.0, 0.0)


@dataclass(frozen=True)
class RisCodebook:
    phase_vectors: np.ndarray  # (L, N)
    centroids: tuple

    def __post_init__(self):
        if len(self.centroids) < 1 or self.phase_vectors.shape[0] != len(self.centroids):
            raise ValueError("codebook needs one phase vector per centroid and at least one entry")
        if not np.allclose(np.abs(self.phase_vectors), 1.0, atol=1e-12):
            raise ValueError("codebook entries must have unit modulus")

    @property
    def size(self) -> int:
        return len(self.centroids)


@dataclass(frozen=True)
class SamplingPmf:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("pmf must be a non-empty vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf must be nonnegative and sum to one, got {p}")
        object.__setattr__(self, "probs", p)

    @property
    def cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.probs)
        # trailing zero-probability states must stay unreachable
        cdf[np.flatnonzero(self.probs)[-1]:] = 1.0
        return cdf


@dataclass(frozen=True)
class SwitchingSchedule:
    """RIS state holder; ``ts_slots == 0`` means the first draw is kept forever."""

    ts_slots: int
    current_state: int = -1
    block_index: int = -1

    def __post_init__(self):
        if self.ts_slots < 0:
            raise ValueError(f"ts_slots must be >= 0, got {self.ts_slots}")


def _farthest_point_init(points: np.ndarray, n_centers: int) -> np.ndarray:
    chosen = [0]
    nearest = np.sum((points - points[0]) ** 2, axis=1)
    while len(chosen) < n_centers:
        nxt = int(np.argmax(nearest))
        if nearest[nxt] == 0.0:
            break  # every remaining point coincides with a center
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def _assign(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def cluster_directions(points: np.ndarray, n_regions: int):
    """k-means in direction-cosine space. Returns (centers, assignment); centers may be fewer than requested."""
    centers = _farthest_point_init(points, n_regions)
    assignment = _assign(points, centers)
    for _ in range(KMEANS_MAX_ITER):
        new_centers = centers.copy()
        for j in range(len(centers)):
            members = points[assignment == j]
            if len(members):
                new_centers[j] = members.mean(axis=0)
        new_assignment = _assign(points, new_centers)
        centers = new_centers
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    return centers, assignment


def tile_and_build(ue_directions, n_regions: int, geom: ArrayGeometry):
    """Partition UE cascaded directions into regions and build codebook + pmf.

    Returns
    -------
    codebook : RisCodebook
    pmf : SamplingPmf
        ``probs[l]`` is the fraction of UEs assigned to region ``l``.
    assignment : np.ndarray
        Region index of every UE.
    """
    if n_regions < 1:
        raise ValueError(f"number of regions must be >= 1, got {n_regions}")
    ue_directions = list(ue_directions)
    if not ue_directions:
        raise ValueError("need at least one UE direction")
    points = np.array([[d.u, d.v] for d in ue_directions], dtype=float)
    centers, assignment = cluster_directions(points, n_regions)

    counts = np.bincount(assignment, minlength=n_regions).astype(float)
    centroids = []
    for j in range(n_regions):
        if j < len(centers) and counts[j] > 0:
            centroids.append(SteeringDirection(float(centers[j, 0]), float(centers[j, 1])))
        else:
            centroids.append(BROADSIDE)
    phase_vectors = np.vstack([steering_vector(geom, c) for c in centroids])
    pmf = SamplingPmf(counts / len(ue_directions))
    return RisCodebook(phase_vectors, tuple(centroids)), pmf, assignment


def codebook_from_directions(directions, geom: ArrayGeometry) -> RisCodebook:
    directions = tuple(directions)
    return RisCodebook(np.vstack([steering_vector(geom, d) for d in directions]), directions)


def sample_state(pmf: SamplingPmf, rng: np.random.Generator) -> int:
    return int(np.searchsorted(pmf.cdf, rng.random(), side="right"))


def sample_states(pmf: SamplingPmf, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` i.i.d. draws; consumes the generator exactly like ``n`` calls to :func:`sample_state`."""
    return np.searchsorted(pmf.cdf, rng.random(n), side="right").astype(np.int64)


def advance(schedule: SwitchingSchedule, slot: int, pmf: SamplingPmf, rng) -> SwitchingSchedule:
    if schedule.ts_slots == 0:
        if schedule.current_state < 0:
            return replace(schedule, current_state=sample_state(pmf, rng), block_index=0)
        return schedule
    if slot % schedule.ts_slots == 0:
        return replace(schedule, current_state=sample_state(pmf, rng),
                       block_index=slot // schedule.ts_slots)
    return schedule


def state_sequence(pmf: SamplingPmf, ts_slots: int, n_slots: int, rng, start_slot: int = 0) -> np.ndarray:
    """Per-slot RIS state for slots ``start_slot .. start_slot + n_slots - 1``.

    ``start_slot`` must be a block boundary; draws match repeated :func:`advance` calls.
    """
    if ts_slots == 0:
        if start_slot != 0:
            raise ValueError("a never-switching schedule is drawn once at slot 0")
        return np.full(n_slots, sample_state(pmf, rng), dtype=np.int64)
    if start_slot % ts_slots:
        raise ValueError("start_slot must be a multiple of ts_slots")
    n_blocks = -(-n_slots // ts_slots)
    return np.repeat(sample_states(pmf, rng, n_blocks), ts_slots)[:n_slots]


def optimal_state_for_ue(codebook: RisCodebook, ue_response: np.ndarray):
    """Codeword maximising ``|phi^H a|**2``; ties go to the lowest index."""
    gains = np.abs(codebook.phase_vectors.conj() @ ue_response) ** 2
    idx = int(np.argmax(gains))
    return idx, float(gains[idx])


def codebook_rows(codebook: RisCodebook, pmf: SamplingPmf):
    """Flat rows ``(index, centroid_u, centroid_v, prob)`` for export."""
    return [(i, c.u, c.v, float(p)) for i, (c, p) in enumerate(zip(codebook.centroids, pmf.probs))]
