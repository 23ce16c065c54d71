"""Single-photon polarization states, Stokes vectors and the fixed wave plates.

Amplitude slots are ordered ``[L, R]`` in the circular basis and ``[h, v]``
in the linear basis. The quarter-wave plate is a lossless relabeling
``L <-> h``, ``R <-> v``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

Basis = Literal["circular", "linear"]
BASES = ("circular", "linear")

NORM_SLACK = 1e-12
NORMALIZED_TOL = 1e-9

_S = 1 / np.sqrt(2)
# diagonal basis (h +/- v)/sqrt2 -> h, v
HWP_DIAG = np.array([[1, 1], [1, -1]], dtype=complex) * _S
# circular-in-linear basis (h +/- i v)/sqrt2 -> h, v
HWP_CIRC = np.array([[1, -1j], [1, 1j]], dtype=complex) * _S


def _as_vector(amplitudes, size: int) -> np.ndarray:
    vec = np.array(amplitudes, dtype=complex).reshape(-1)
    if vec.shape != (size,):
        raise ValueError(f"expected {size} amplitudes, got {vec.size}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("amplitudes must be finite")
    vec.setflags(write=False)
    return vec


def _encode_amplitudes(vec: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in vec]


def _decode_amplitudes(pairs) -> list[complex]:
    return [complex(re, im) for re, im in pairs]


@dataclass(frozen=True, eq=False)
class PolarizationState:
    """Polarization qubit of one photon; sub-normalized vectors encode loss."""

    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")
        vec = _as_vector(self.amplitudes, 2)
        if np.vdot(vec, vec).real > 1 + NORM_SLACK:
            raise ValueError("polarization state norm exceeds 1")
        object.__setattr__(self, "amplitudes", vec)

    @classmethod
    def circular(cls, c_l, c_r) -> PolarizationState:
        return cls("circular", [c_l, c_r])

    @classmethod
    def linear(cls, c_h, c_v) -> PolarizationState:
        return cls("linear", [c_h, c_v])

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def to_dict(self) -> dict:
        return {"basis": self.basis, "amplitudes": _encode_amplitudes(self.amplitudes)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> PolarizationState:
        return cls(data["basis"], _decode_amplitudes(data["amplitudes"]))

    @classmethod
    def from_json(cls, text: str) -> PolarizationState:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class StokesVector:
    s_x: float
    s_y: float
    s_z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z])


def stokes(state: PolarizationState) -> StokesVector:
    """Expectation values of the Stokes operators in a one-photon state.

    The state must be normalized and expressed in the circular basis.
    """
    if state.basis != "circular":
        raise ValueError("stokes() needs a circular-basis state; apply qwp() first")
    if abs(state.norm_sq - 1) > NORMALIZED_TOL:
        raise ValueError(f"stokes() needs a normalized state, norm^2 = {state.norm_sq}")
    c_l, c_r = state.amplitudes
    cross = np.conj(c_l) * c_r
    return StokesVector(
        float(cross.real),
        float(cross.imag),
        float((abs(c_l) ** 2 - abs(c_r) ** 2) / 2),
    )


def qwp(state: PolarizationState) -> PolarizationState:
    other = "linear" if state.basis == "circular" else "circular"
    return PolarizationState(other, state.amplitudes)


def _plate(state: PolarizationState, matrix: np.ndarray, name: str) -> PolarizationState:
    if state.basis != "linear":
        raise ValueError(f"{name} acts on linear-basis states; apply qwp() first")
    return PolarizationState("linear", matrix @ state.amplitudes)


def hwp_diag(state: PolarizationState) -> PolarizationState:
    """Map ``(h + v)/sqrt2 -> h`` and ``(h - v)/sqrt2 -> v``."""
    return _plate(state, HWP_DIAG, "hwp_diag")


def hwp_circ(state: PolarizationState) -> PolarizationState:
    """Map ``(h + i v)/sqrt2 -> h`` and ``(h - i v)/sqrt2 -> v``.

    This is a fixed 2x2 unitary rather than a physical half-wave plate at
    some tilt angle.
    """
    return _plate(state, HWP_CIRC, "hwp_circ")


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Joint polarization of two photons, photon 1 slowest: ``[00, 01, 10, 11]``.

    Slot bit 0 is ``L`` or ``h`` and bit 1 is ``R`` or ``v``, per ``basis``.
    """

    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")
        vec = _as_vector(self.amplitudes, 4)
        if np.vdot(vec, vec).real > 1 + NORM_SLACK:
            raise ValueError("two-photon state norm exceeds 1")
        object.__setattr__(self, "amplitudes", vec)

    def schmidt_coefficients(self) -> np.ndarray:
        return np.linalg.svd(self.amplitudes.reshape(2, 2), compute_uv=False)

    def to_dict(self) -> dict:
        return {"basis": self.basis, "amplitudes": _encode_amplitudes(self.amplitudes)}


def qwp_both(state: TwoPhotonState) -> TwoPhotonState:
    other = "linear" if state.basis == "circular" else "circular"
    return TwoPhotonState(other, state.amplitudes)
