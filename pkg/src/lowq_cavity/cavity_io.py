"""Steady-state reflection of a single photon from a single-sided cavity.

Both coefficients are closed-form ratios evaluated with complex arithmetic;
the empty-cavity one equals the loaded one at ``g = 0``. Frequencies and rates may be given in any consistent unit; the CLI
works in units of ``kappa``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

#: Above these ratios the weak-excitation assumption behind the closed form
#: is flagged (the result is still returned).
ADVISORY_GAMMA_OVER_KAPPA = 1.0
ADVISORY_G_OVER_KAPPA = 10.0

SWEEP_COLUMNS = (
    "detuning_over_kappa",
    "abs_r_atom",
    "phase_r_atom",
    "abs_r_empty",
    "phase_r_empty",
)


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class CavityParams:
    """Parameter set of one atom-cavity node.

    Attributes
    ----------
    omega_c : float
        Cavity mode frequency.
    omega_0 : float
        Atomic transition frequency.
    kappa : float
        Cavity damping rate, strictly positive.
    gamma : float
        Atomic decay rate, non-negative.
    g : float
        Atom-cavity coupling strength, non-negative.
    """

    omega_c: float = 0.0
    omega_0: float = 0.0
    kappa: float = 1.0
    gamma: float = 0.0
    g: float = 0.0

    def __post_init__(self):
        for name in ("omega_c", "omega_0", "kappa", "gamma", "g"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")

    @property
    def advisory(self) -> bool:
        """True when ``gamma > kappa`` or ``g > 10 kappa``."""
        return (
            self.gamma > ADVISORY_GAMMA_OVER_KAPPA * self.kappa
            or self.g > ADVISORY_G_OVER_KAPPA * self.kappa
        )

    def operating_point(self) -> float:
        """Probe frequency ``omega_c - kappa/2`` used by the protocols."""
        return self.omega_c - self.kappa / 2


def principal_phase(z: complex) -> float:
    """Argument of ``z`` in the half-open interval (-pi, pi]."""
    phase = math.atan2(z.imag, z.real)
    if phase == -math.pi:
        return math.pi
    return phase


@dataclass(frozen=True)
class ReflectionResult:
    amplitude: complex
    magnitude: float = field(init=False)
    phase: float = field(init=False)
    # weak-excitation assumption may be strained for these parameters
    advisory: bool = False

    def __post_init__(self):
        amp = complex(self.amplitude)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "magnitude", abs(amp))
        object.__setattr__(self, "phase", principal_phase(amp))


def _empty_amplitude(params: CavityParams, omega_p: float) -> complex:
    dc = params.omega_c - omega_p
    half_k = params.kappa / 2
    return complex(-half_k, dc) / complex(half_k, dc)


def reflection_empty(params: CavityParams, omega_p: float) -> ReflectionResult:
    """Reflection coefficient of the cavity with the atom decoupled.

    ``r0 = [i(omega_c - omega_p) - kappa/2] / [i(omega_c - omega_p) + kappa/2]``,
    which is unimodular. Only ``omega_c`` and ``kappa`` of ``params`` matter.
    """
    omega_p = _check_finite("omega_p", omega_p)
    return ReflectionResult(_empty_amplitude(params, omega_p), advisory=params.advisory)


def reflection_with_atom(params: CavityParams, omega_p: float) -> ReflectionResult:
    """Reflection coefficient of the cavity holding one two-level atom.

    Parameters
    ----------
    params : CavityParams
        Node parameters.
    omega_p : float
        Frequency of the monochromatic probe photon.

    Returns
    -------
    ReflectionResult
        ``r = {[i dc - k/2][i da + y/2] + g^2} / {[i dc + k/2][i da + y/2] + g^2}``
        with ``dc = omega_c - omega_p``, ``da = omega_0 - omega_p``.
    """
    omega_p = _check_finite("omega_p", omega_p)
    dc = complex(0.0, params.omega_c - omega_p)
    atom = complex(params.gamma / 2, params.omega_0 - omega_p)
    if atom == 0 and params.g == 0:
        # resonant lossless atom with zero coupling: 0/0, the atom is simply absent
        return ReflectionResult(_empty_amplitude(params, omega_p), advisory=params.advisory)
    g2 = params.g**2
    half_k = params.kappa / 2
    num = (dc - half_k) * atom + g2
    den = (dc + half_k) * atom + g2
    return ReflectionResult(num / den, advisory=params.advisory)


def faraday_rotation(params: CavityParams, omega_p: float, atom_bit: int) -> float:
    """Polarization rotation angle for an atom prepared in ``|atom_bit>``.

    Bit 0 gives ``phi0 - phi``, bit 1 gives ``phi - phi0``, with ``phi`` and
    ``phi0`` the principal phases of the loaded and empty reflections.
    """
    if atom_bit not in (0, 1):
        raise ValueError(f"atom_bit must be 0 or 1, got {atom_bit!r}")
    diff = reflection_empty(params, omega_p).phase - reflection_with_atom(params, omega_p).phase
    return diff if atom_bit == 0 else -diff


@dataclass(frozen=True)
class SweepTable:
    """Reflection with and without the atom on a uniform detuning grid.

    ``detuning_grid`` holds ``(omega_p - omega_c) / kappa``.
    """

    detuning_grid: tuple[float, ...]
    with_atom: tuple[ReflectionResult, ...]
    empty: tuple[ReflectionResult, ...]

    def __post_init__(self):
        n = len(self.detuning_grid)
        if len(self.with_atom) != n or len(self.empty) != n:
            raise ValueError("sweep columns must have equal length")
        if any(b <= a for a, b in zip(self.detuning_grid, self.detuning_grid[1:])):
            raise ValueError("detuning grid must be strictly increasing")

    def __len__(self):
        return len(self.detuning_grid)

    def rows(self) -> list[dict[str, float]]:
        return [
            {
                "detuning_over_kappa": d,
                "abs_r_atom": ra.magnitude,
                "phase_r_atom": ra.phase,
                "abs_r_empty": re.magnitude,
                "phase_r_empty": re.phase,
            }
            for d, ra, re in zip(self.detuning_grid, self.with_atom, self.empty)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows():
            writer.writerow([f"{row[c]:.15g}" for c in SWEEP_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.rows(), indent=2) + "\n"


def sweep_reflection(
    params: CavityParams,
    detuning_min: float,
    detuning_max: float,
    n_points: int,
) -> SweepTable:
    """Evaluate both reflection coefficients over ``n_points`` uniform detunings.

    Detunings are in units of ``kappa`` and measured as ``omega_p - omega_c``.
    """
    if isinstance(n_points, bool) or int(n_points) != n_points or n_points < 2:
        raise ValueError(f"n_points must be an integer >= 2, got {n_points!r}")
    detuning_min = _check_finite("detuning_min", detuning_min)
    detuning_max = _check_finite("detuning_max", detuning_max)
    if not detuning_min < detuning_max:
        raise ValueError("detuning_min must be smaller than detuning_max")
    grid = tuple(float(d) for d in np.linspace(detuning_min, detuning_max, int(n_points)))
    omegas = [params.omega_c + d * params.kappa for d in grid]
    return SweepTable(
        detuning_grid=grid,
        with_atom=tuple(reflection_with_atom(params, w) for w in omegas),
        empty=tuple(reflection_empty(params, w) for w in omegas),
    )
