"""Chain geometry, physical rate constants, and the phased collective initial state.

All rates are expressed in units of the free-space linewidth gamma (so times are
in 1/gamma) and all lengths in units of the guided-mode wavelength lambda_wg.
The default group velocity is anchored to the Rb D2 line so that runs with
centimetre-scale cavities map onto realistic retardation times.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Rb D2 reference transition anchoring the reduced unit system.
GAMMA_RAD_PER_S = 2.0 * math.pi * 6.07e6
LAMBDA0_M = 780e-9
C_M_PER_S = 299_792_458.0

# Effective mode index lambda0 / lambda_wg of the guided mode.  Config value,
# not a measured quantity; every quoted rate is independent of it.
DEFAULT_MODE_INDEX = 1.2

# Speed of light in units of gamma * lambda_wg, then the nanofiber group velocity.
C_REDUCED = C_M_PER_S / (GAMMA_RAD_PER_S * LAMBDA0_M) * DEFAULT_MODE_INDEX
DEFAULT_V_G = 0.7 * C_REDUCED

# Pairs closer than this (in lambda_wg) are rejected: the scalar coupling and
# the optional free-space 1/xi^3 correction are not trustworthy at contact.
MIN_SEPARATION = 0.01


class ConfigError(ValueError):
    """Invalid chain or run configuration."""


class GeometryError(ValueError):
    """Atom placement violating the minimum-separation floor."""


class SegmentRole(enum.Enum):
    LEFT_MIRROR = "left_mirror"
    EMITTER = "emitter"
    RIGHT_MIRROR = "right_mirror"


@dataclass(frozen=True)
class PhysParams:
    """Physical rate and wavelength constants of the atom-waveguide system.

    gamma      free-space decay rate; the unit of inverse time (default 1).
    beta       coupling ratio gamma_1d / gamma.
    gamma_ext  decay rate into external (non-guided) modes, units of gamma.
    v_g        group velocity of the guided mode, units of lambda_wg * gamma.
    lambda_wg  guided-mode wavelength; the unit of length (default 1).
    lambda0    vacuum wavelength, used only by the optional free-space
               dipole-dipole correction.  Defaults to mode-index * lambda_wg.
    """

    gamma: float = 1.0
    beta: float = 0.1
    gamma_ext: float = 0.95
    v_g: float = DEFAULT_V_G
    lambda_wg: float = 1.0
    lambda0: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.gamma_ext > 0:
            raise ConfigError(f"gamma_ext must be positive, got {self.gamma_ext}")
        if not self.v_g > 0:
            raise ConfigError(f"v_g must be positive, got {self.v_g}")
        if not self.lambda_wg > 0:
            raise ConfigError(f"lambda_wg must be positive, got {self.lambda_wg}")
        if self.lambda0 is None:
            object.__setattr__(self, "lambda0", DEFAULT_MODE_INDEX * self.lambda_wg)
        if not self.gamma_ext < self.gamma:
            raise ConfigError(
                f"gamma_ext={self.gamma_ext} must stay below gamma={self.gamma}"
            )
        # Purcell condition: waveguide plus external modes beat free space.
        if not self.gamma_ext + self.beta * self.gamma > self.gamma:
            raise ConfigError(
                f"gamma_ext + gamma_1d = {self.gamma_ext + self.beta * self.gamma} "
                f"must exceed gamma = {self.gamma}"
            )

    @property
    def gamma_1d(self) -> float:
        return self.beta * self.gamma

    @property
    def gamma_wg(self) -> float:
        """Coherent guided exchange rate: half of gamma_1d (sigma- channel)."""
        return 0.5 * self.gamma_1d

    @property
    def gamma_raman(self) -> float:
        """Guided Raman loss per atom: the incoherent half of gamma_1d."""
        return self.gamma_1d - self.gamma_wg

    @property
    def gamma_tot(self) -> float:
        """Total single-atom decay rate next to the waveguide."""
        return self.gamma_ext + self.gamma_1d

    @property
    def k_wg(self) -> float:
        return 2.0 * math.pi / self.lambda_wg

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "gamma_ext": self.gamma_ext,
            "v_g": self.v_g,
            "lambda_wg": self.lambda_wg,
            "lambda0": self.lambda0,
        }


@dataclass(frozen=True)
class DisorderSpec:
    """Uniformly random placement at `density` atoms per lambda_wg/2."""

    density: float = 1.0

    def __post_init__(self):
        if not self.density > 0:
            raise ConfigError(f"disorder density must be positive, got {self.density}")


@dataclass(frozen=True)
class SegmentSpec:
    role: SegmentRole
    count: int
    spacing: Optional[float] = None  # None -> lambda_wg / 2
    disorder: Optional[DisorderSpec] = None

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError(f"segment count must be >= 0, got {self.count}")
        if self.spacing is not None and not self.spacing > 0:
            raise ConfigError(f"segment spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class ChainSpec:
    """Ordered segment layout [LeftMirror?, Emitter, RightMirror?] plus seeds."""

    segments: tuple[SegmentSpec, ...]
    gap_d0: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        emitters = [s for s in self.segments if s.role is SegmentRole.EMITTER]
        if len(emitters) != 1 or emitters[0].count < 1:
            raise ConfigError("chain needs exactly one emitter segment with count >= 1")
        order = [s.role for s in self.segments if s.count > 0]
        allowed = {
            (SegmentRole.EMITTER,),
            (SegmentRole.LEFT_MIRROR, SegmentRole.EMITTER),
            (SegmentRole.EMITTER, SegmentRole.RIGHT_MIRROR),
            (SegmentRole.LEFT_MIRROR, SegmentRole.EMITTER, SegmentRole.RIGHT_MIRROR),
        }
        if tuple(order) not in allowed:
            raise ConfigError(f"segment order {order} is not left/emitter/right")
        if len(order) > 1 and not self.gap_d0 > 0:
            raise ConfigError("gap_d0 must be positive when more than one segment is present")

    @classmethod
    def three_segment(
        cls,
        n_left: int,
        n_center: int,
        n_right: int,
        gap_d0: float = 0.5,
        spacing: Optional[float] = None,
        left_disorder: Optional[DisorderSpec] = None,
        right_disorder: Optional[DisorderSpec] = None,
        rng_seed: int = 0,
    ) -> "ChainSpec":
        segments = []
        if n_left > 0:
            segments.append(
                SegmentSpec(SegmentRole.LEFT_MIRROR, n_left, spacing, left_disorder)
            )
        segments.append(SegmentSpec(SegmentRole.EMITTER, n_center, spacing))
        if n_right > 0:
            segments.append(
                SegmentSpec(SegmentRole.RIGHT_MIRROR, n_right, spacing, right_disorder)
            )
        return cls(tuple(segments), gap_d0=gap_d0, rng_seed=rng_seed)

    def counts(self) -> dict:
        out = {role: 0 for role in SegmentRole}
        for seg in self.segments:
            out[seg.role] += seg.count
        return {
            "n_left": out[SegmentRole.LEFT_MIRROR],
            "n_center": out[SegmentRole.EMITTER],
            "n_right": out[SegmentRole.RIGHT_MIRROR],
        }


@dataclass
class AtomArray:
    """Sorted atom positions along the chain axis with their segment roles."""

    positions: np.ndarray
    emitter_start: int
    emitter_stop: int  # exclusive
    roles: tuple[SegmentRole, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    @property
    def emitter_indices(self) -> np.ndarray:
        return np.arange(self.emitter_start, self.emitter_stop)

    @property
    def emitter_count(self) -> int:
        return self.emitter_stop - self.emitter_start

    @property
    def emitter_positions(self) -> np.ndarray:
        return self.positions[self.emitter_start : self.emitter_stop]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "z_over_lambda_wg", "segment_role"])
            for i, (z, role) in enumerate(zip(self.positions, self.roles)):
                writer.writerow([i, repr(float(z)), role.value])


@dataclass
class StateVector:
    """Single-excitation amplitudes over the atoms; unit norm at construction."""

    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError(f"state vector norm {norm} differs from 1 beyond 1e-12")

    @property
    def n_atoms(self) -> int:
        return len(self.amplitudes)


def _segment_positions(
    seg: SegmentSpec, z_start: float, params: PhysParams, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Return the segment's atom positions and the coordinate of its far edge."""
    half_wave = 0.5 * params.lambda_wg
    if seg.disorder is None:
        spacing = half_wave if seg.spacing is None else seg.spacing
        pos = z_start + spacing * np.arange(seg.count)
        return pos, z_start + spacing * (seg.count - 1)
    # Disordered segment: uniform draws over the nominal length count/density
    # half-waves; the nominal span (not the last atom) defines the far edge.
    length = seg.count / seg.disorder.density * half_wave
    pos = np.sort(rng.uniform(z_start, z_start + length, size=seg.count))
    return pos, z_start + length


def build_chain(spec: ChainSpec, params: PhysParams) -> AtomArray:
    """Place every segment along the axis, first atom at z = 0.

    Lattice segments are exactly periodic; disordered segments consume the
    chain's seeded RNG in segment order, so a (spec, seed) pair reproduces the
    same geometry bit for bit.  Segments are separated edge to edge by gap_d0.
    """
    rng = np.random.default_rng(spec.rng_seed)
    positions: list[np.ndarray] = []
    roles: list[SegmentRole] = []
    emitter_start = emitter_stop = 0
    cursor = 0.0
    first = True
    for seg in spec.segments:
        if seg.count == 0:
            continue
        z_start = cursor if first else cursor + spec.gap_d0
        pos, far_edge = _segment_positions(seg, z_start, params, rng)
        if seg.role is SegmentRole.EMITTER:
            emitter_start = sum(len(p) for p in positions)
            emitter_stop = emitter_start + seg.count
        positions.append(pos)
        roles.extend([seg.role] * seg.count)
        cursor = far_edge
        first = False

    z = np.concatenate(positions)
    z = z - z[0]  # absolute origin at the first atom
    if emitter_stop == emitter_start:
        raise ConfigError("chain has no emitter atoms")
    gaps = np.diff(z)
    floor = MIN_SEPARATION * params.lambda_wg
    if np.any(gaps < floor):
        bad = int(np.argmax(gaps < floor))
        raise GeometryError(
            f"atoms {bad} and {bad + 1} are separated by {gaps[bad]:.4g} lambda_wg, "
            f"below the floor {floor:.4g}"
        )
    metadata = {
        "gap_convention": "edge-to-edge; disordered segments measured by their nominal span",
        "phase_convention": "+k_wg * z_a (mod 2 pi)",
        "rng_seed": spec.rng_seed,
    }
    return AtomArray(z, emitter_start, emitter_stop, tuple(roles), metadata)


def dicke_initial_state(array: AtomArray, params: PhysParams) -> StateVector:
    """Equal-weight emitter superposition with waveguide-matched phases.

    c_a = exp(i k_wg z_a) / sqrt(N_C) on the emitter segment, zero elsewhere.
    On a half-wave lattice the phases alternate between 0 and pi, so the
    amplitudes alternate in sign.
    """
    if array.emitter_count < 1:
        raise ConfigError("emitter segment is empty")
    amps = np.zeros(array.n_atoms, dtype=complex)
    z_c = array.emitter_positions
    amps[array.emitter_start : array.emitter_stop] = (
        np.exp(1j * params.k_wg * z_c) / math.sqrt(array.emitter_count)
    )
    return StateVector(amps)
