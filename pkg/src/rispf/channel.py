"""Geometry, path loss, fading and the scalar BS-RIS-UE channel.

Directions are carried as direction cosines ``(u, v)`` rather than angles:
the array response only depends on them, and the sum of two physical
directions (a cascaded direction) generally has no real angle pair.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array with ``n_x`` columns and ``n_y`` rows."""

    n_x: int
    n_y: int
    spacing_wavelengths: float = 0.25

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError(f"array needs at least one element per axis, got {self.n_x}x{self.n_y}")
        if not self.spacing_wavelengths > 0:
            raise ValueError(f"spacing_wavelengths must be positive, got {self.spacing_wavelengths}")

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y

    @classmethod
    def square(cls, n_elements: int, spacing_wavelengths: float = 0.25) -> "ArrayGeometry":
        side = int(round(np.sqrt(n_elements)))
        if side * side != n_elements:
            raise ValueError(f"{n_elements} elements do not form a square array")
        return cls(side, side, spacing_wavelengths)


@dataclass(frozen=True)
class SteeringDirection:
    u: float
    v: float

    @classmethod
    def from_angles(cls, azimuth: float, elevation: float = 0.0) -> "SteeringDirection":
        """Direction cosines of an azimuth/elevation pair given in radians."""
        return cls(float(np.cos(elevation) * np.cos(azimuth)),
                   float(np.cos(elevation) * np.sin(azimuth)))

    def is_physical(self) -> bool:
        return self.u * self.u + self.v * self.v <= 1.0 + 1e-12


@dataclass(frozen=True)
class LinkBudget:
    """Large-scale link parameters; all gains in dB."""

    c0_db: float = -30.0
    exponent_bs_ris: float = 2.0
    exponent_ris_ue: float = 2.8
    exponent_bs_ue: float = 3.8
    tx_snr_db: float = 110.0

    def __post_init__(self):
        for name in ("exponent_bs_ris", "exponent_ris_ue", "exponent_bs_ue"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def tx_snr(self) -> float:
        return db_to_linear(self.tx_snr_db)


@dataclass(frozen=True)
class UePlacement:
    position: tuple[float, float]
    cascaded_direction: SteeringDirection
    fading: complex
    beta: float


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def steering_vector(geom: ArrayGeometry, direction: SteeringDirection) -> np.ndarray:
    """UPA response ``a_x(u) kron a_y(v)``; element ``(m, n)`` sits at index ``m*n_y + n``."""
    k = 2.0 * np.pi * geom.spacing_wavelengths
    a_x = np.exp(1j * k * direction.u * np.arange(geom.n_x))
    a_y = np.exp(1j * k * direction.v * np.arange(geom.n_y))
    return np.kron(a_x, a_y)


def steering_matrix(geom: ArrayGeometry, directions) -> np.ndarray:
    """Stack of steering vectors, one row per direction."""
    directions = list(directions)
    if not directions:
        return np.empty((0, geom.n_elements), dtype=complex)
    return np.vstack([steering_vector(geom, d) for d in directions])


def cascaded_direction(bs_dir: SteeringDirection, ue_dir: SteeringDirection) -> SteeringDirection:
    return SteeringDirection(bs_dir.u + ue_dir.u, bs_dir.v + ue_dir.v)


def direction_between(src, dst) -> SteeringDirection:
    """Direction cosines of ``dst`` seen from ``src`` in a planar (zero elevation) layout."""
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    return SteeringDirection.from_angles(float(np.arctan2(dy, dx)))


def path_loss_linear(distance_m: float, exponent: float, budget: LinkBudget) -> float:
    """Single-slope gain ``C0 * d**-exponent`` referenced to 1 m."""
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    if not exponent > 0:
        raise ValueError(f"path-loss exponent must be positive, got {exponent}")
    return 10.0 ** (budget.c0_db / 10.0) * distance_m ** (-exponent)


def cascaded_path_gain(bs_pos, ris_pos, ue_pos, budget: LinkBudget) -> float:
    d1 = float(np.hypot(ris_pos[0] - bs_pos[0], ris_pos[1] - bs_pos[1]))
    d2 = float(np.hypot(ue_pos[0] - ris_pos[0], ue_pos[1] - ris_pos[1]))
    return (path_loss_linear(d1, budget.exponent_bs_ris, budget)
            * path_loss_linear(d2, budget.exponent_ris_ue, budget))


def draw_fading(rng: np.random.Generator, size=None) -> np.ndarray:
    """Circularly symmetric CN(0, 1) draws."""
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return (re + 1j * im) / np.sqrt(2.0)


def effective_channel(phase_vector, cascaded_response, beta: float, alpha: complex) -> complex:
    """``sqrt(beta) * alpha * phi^H a``."""
    phase_vector = np.asarray(phase_vector)
    cascaded_response = np.asarray(cascaded_response)
    if phase_vector.shape != cascaded_response.shape:
        raise ValueError(f"length mismatch: {phase_vector.shape} vs {cascaded_response.shape}")
    return complex(np.sqrt(beta) * alpha * np.vdot(phase_vector, cascaded_response))


def spectral_efficiency(g, budget: LinkBudget):
    return np.log2(1.0 + np.abs(g) ** 2 * budget.tx_snr)


def array_gains(codewords: np.ndarray, responses: np.ndarray) -> np.ndarray:
    """``|phi_l^H a_k|**2`` for every UE ``k`` (rows) and codeword ``l`` (columns)."""
    return np.abs(responses.conj() @ codewords.T) ** 2
