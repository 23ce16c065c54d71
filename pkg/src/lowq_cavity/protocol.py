"""Photon-atom state-vector engine for the Faraday-rotation protocols.

Register layout: one optional photon qubit followed by the atomic qubits in
cavity-visit order, photon slowest (row-major). Atom bit 0 is ``|g_-1>`` and
bit 1 is ``|g_+1>``; photon bit 0 is ``L``/``h`` and bit 1 is ``R``/``v``.
Atom indices in the public API are 1-based positions in the register.

Lossy reflection in exact mode leaves sub-normalized vectors; their squared
norm is the probability that the heralding photon survived. Measurements
return every branch, and post-states are renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .cavity_io import CavityParams, reflection_empty, reflection_with_atom
from .polarization import HWP_CIRC, HWP_DIAG, NORM_SLACK, NORMALIZED_TOL, TwoPhotonState

PhotonBasis = Literal["circular", "linear"]

PHOTON_LABELS = {"circular": ("L", "R"), "linear": ("h", "v")}
ATOM_LABELS = ("+", "-")

_S = 1 / np.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _S
IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# phases at the ideal operating point: phi = pi (atom coupled), phi0 = pi/2 (empty)
IDEAL_R = complex(-1.0, 0.0)
IDEAL_R0 = complex(0.0, 1.0)


def _normalized(vec: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(vec)
    return vec / n if n > 0 else vec


def _check_unit(name: str, *coeffs) -> None:
    total = sum(abs(complex(c)) ** 2 for c in coeffs)
    if abs(total - 1) > NORMALIZED_TOL:
        raise ValueError(f"{name} must be normalized, |.|^2 sum = {total:.12g}")


@dataclass(frozen=True, eq=False)
class SystemState:
    """Joint amplitude vector of an optional photon and ``n_atoms`` atoms.

    ``photon_basis`` is ``None`` once the photon has been detected and removed.
    ``atom_labels`` remembers which cavity each remaining atom sits in.
    """

    amplitudes: np.ndarray
    n_atoms: int
    photon_basis: Optional[PhotonBasis] = "circular"
    atom_labels: tuple[int, ...] = ()
    norm_sq: float = field(init=False)

    def __post_init__(self):
        if self.n_atoms < 0:
            raise ValueError("n_atoms must be >= 0")
        if self.photon_basis not in (None, "circular", "linear"):
            raise ValueError(f"unknown photon basis {self.photon_basis!r}")
        vec = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if vec.size != 2**self.n_qubits:
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got {vec.size}")
        if not np.all(np.isfinite(vec)):
            raise ValueError("amplitudes must be finite")
        norm_sq = float(np.vdot(vec, vec).real)
        if norm_sq > 1 + NORM_SLACK:
            raise ValueError(f"state norm^2 {norm_sq} exceeds 1")
        vec.setflags(write=False)
        labels = tuple(self.atom_labels) or tuple(range(1, self.n_atoms + 1))
        if len(labels) != self.n_atoms:
            raise ValueError("atom_labels must name every atom")
        object.__setattr__(self, "amplitudes", vec)
        object.__setattr__(self, "atom_labels", labels)
        object.__setattr__(self, "norm_sq", norm_sq)

    @property
    def has_photon(self) -> bool:
        return self.photon_basis is not None

    @property
    def n_qubits(self) -> int:
        return self.n_atoms + (1 if self.has_photon else 0)

    @classmethod
    def product(cls, photon, atoms: Sequence, photon_basis: Optional[PhotonBasis] = "circular"):
        """Tensor product of a photon amplitude pair and per-atom ``(alpha, beta)`` pairs.

        Pass ``photon=None`` for an atoms-only register.
        """
        vec = np.ones(1, dtype=complex)
        if photon is not None:
            p = getattr(photon, "amplitudes", photon)
            if hasattr(photon, "basis"):
                photon_basis = photon.basis
            vec = np.kron(vec, np.asarray(p, dtype=complex))
        else:
            photon_basis = None
        for pair in atoms:
            vec = np.kron(vec, np.asarray(pair, dtype=complex))
        return cls(vec, len(atoms), photon_basis)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def atom_axis(self, atom_index: int) -> int:
        if isinstance(atom_index, bool) or not 1 <= atom_index <= self.n_atoms:
            raise IndexError(f"atom_index {atom_index} outside 1..{self.n_atoms}")
        return atom_index - 1 + (1 if self.has_photon else 0)

    def with_amplitudes(self, tensor: np.ndarray, **changes) -> SystemState:
        kwargs = dict(n_atoms=self.n_atoms, photon_basis=self.photon_basis, atom_labels=self.atom_labels)
        kwargs.update(changes)
        return SystemState(np.asarray(tensor).reshape(-1), **kwargs)

    def normalized(self) -> SystemState:
        return self.with_amplitudes(_normalized(self.amplitudes))

    def to_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "photon_basis": self.photon_basis,
            "atom_labels": list(self.atom_labels),
            "norm_sq": self.norm_sq,
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
        }


def _apply_1q(tensor: np.ndarray, axis: int, matrix: np.ndarray) -> np.ndarray:
    out = np.tensordot(matrix, tensor, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class PhaseModel:
    """Source of the reflection amplitudes used when the photon hits a cavity.

    ``ideal`` uses ``r = e^{i pi}`` and ``r0 = e^{i pi/2}`` for every cavity.
    ``exact`` evaluates the closed-form coefficients with one ``CavityParams``
    per cavity (a single entry is shared by all cavities) at ``omega_p``;
    ``omega_p=None`` means each cavity's own ``omega_c - kappa/2``.
    """

    mode: Literal["ideal", "exact"] = "ideal"
    params: tuple[CavityParams, ...] = ()
    omega_p: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("ideal", "exact"):
            raise ValueError(f"mode must be 'ideal' or 'exact', got {self.mode!r}")
        object.__setattr__(self, "params", tuple(self.params))
        if self.mode == "exact" and not self.params:
            raise ValueError("exact mode needs at least one CavityParams")

    @classmethod
    def ideal(cls) -> PhaseModel:
        return cls("ideal")

    @classmethod
    def exact(cls, params, omega_p: Optional[float] = None) -> PhaseModel:
        if isinstance(params, CavityParams):
            params = (params,)
        return cls("exact", tuple(params), omega_p)

    def cavity(self, cavity: int) -> CavityParams:
        if len(self.params) == 1:
            return self.params[0]
        if not 1 <= cavity <= len(self.params):
            raise IndexError(f"no CavityParams for cavity {cavity}")
        return self.params[cavity - 1]

    def coefficients(self, cavity: int = 1) -> tuple[complex, complex]:
        """``(r, r0)`` for the given 1-based cavity."""
        if self.mode == "ideal":
            return IDEAL_R, IDEAL_R0
        p = self.cavity(cavity)
        w = p.operating_point() if self.omega_p is None else self.omega_p
        return reflection_with_atom(p, w).amplitude, reflection_empty(p, w).amplitude


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outcome: str
    probability: float
    post_state: SystemState
    bit: int = 0


def convert_basis(state: SystemState) -> SystemState:
    """Pass the photon through a quarter-wave plate (``L <-> h``, ``R <-> v``)."""
    if not state.has_photon:
        raise ValueError("register holds no photon")
    other = "linear" if state.photon_basis == "circular" else "circular"
    return state.with_amplitudes(state.amplitudes, photon_basis=other)


def scatter(state: SystemState, atom_index: int, model: PhaseModel) -> SystemState:
    """Reflect the photon off the cavity holding the atom at ``atom_index``.

    Atom in ``|0>`` couples only to ``L``; atom in ``|1>`` only to ``R``. The
    coupled component picks up ``r``, the other one ``r0``.
    """
    if state.photon_basis != "circular":
        raise ValueError("scatter() needs a circular-basis photon in the register")
    axis = state.atom_axis(atom_index)
    r, r0 = model.coefficients(state.atom_labels[atom_index - 1])
    factors = np.array([[r, r0], [r0, r]], dtype=complex)  # [photon_bit, atom_bit]
    shape = [1] * state.n_qubits
    shape[0] = shape[axis] = 2
    return state.with_amplitudes(state.tensor() * factors.reshape(shape))


def _project(state: SystemState, axis: int, labels, **changes) -> list[MeasurementRecord]:
    records = []
    tensor = state.tensor()
    for bit, label in enumerate(labels):
        branch = np.take(tensor, bit, axis=axis)
        prob = float(np.vdot(branch, branch).real)
        records.append(
            MeasurementRecord(label, prob, state.with_amplitudes(_normalized(branch.reshape(-1)), **changes), bit)
        )
    return records


def detect_photon(state: SystemState, plate: Literal["diag", "circ"] = "diag") -> list[MeasurementRecord]:
    """Send the photon through ``hwp_diag``/``hwp_circ`` and detect it in ``h``/``v``.

    Both branches are returned; the post-states hold only the atoms.
    """
    if state.photon_basis != "linear":
        raise ValueError("detect_photon() needs a linear-basis photon; apply convert_basis() first")
    matrices = {"diag": HWP_DIAG, "circ": HWP_CIRC}
    if plate not in matrices:
        raise ValueError(f"plate must be 'diag' or 'circ', got {plate!r}")
    tensor = _apply_1q(state.tensor(), 0, matrices[plate])
    rotated = state.with_amplitudes(tensor)
    return _project(rotated, 0, PHOTON_LABELS["linear"], photon_basis=None)


def hadamard_atom(state: SystemState, atom_index: int) -> SystemState:
    axis = state.atom_axis(atom_index)
    return state.with_amplitudes(_apply_1q(state.tensor(), axis, HADAMARD))


def apply_atom_operator(state: SystemState, atom_index: int, matrix) -> SystemState:
    axis = state.atom_axis(atom_index)
    return state.with_amplitudes(_apply_1q(state.tensor(), axis, np.asarray(matrix, dtype=complex)))


def measure_atom_z(state: SystemState, atom_index: int) -> list[MeasurementRecord]:
    """Project one atom on ``{|0>, |1>}``, labelled ``"+"`` and ``"-"``.

    The measured atom is removed from the register of each post-state.
    """
    axis = state.atom_axis(atom_index)
    labels = state.atom_labels[: atom_index - 1] + state.atom_labels[atom_index:]
    return _project(state, axis, ATOM_LABELS, n_atoms=state.n_atoms - 1, atom_labels=labels)


def sample_outcome(records: Sequence[MeasurementRecord], rng: np.random.Generator):
    """Draw one branch with its probability; ``None`` means the photon was lost."""
    u = rng.random()
    acc = 0.0
    for rec in records:
        acc += rec.probability
        if u < acc:
            return rec
    return None


def fidelity(a, b) -> float:
    """Overlap ``|<a|b>|^2`` of two normalized state vectors."""
    a = np.asarray(getattr(a, "amplitudes", a), dtype=complex).reshape(-1)
    b = np.asarray(getattr(b, "amplitudes", b), dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.size} vs {b.size}")
    for name, v in (("a", a), ("b", b)):
        if abs(np.vdot(v, v).real - 1) > NORMALIZED_TOL:
            raise ValueError(f"{name} is not normalized")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def _branch_fidelity(post: np.ndarray, target) -> Optional[float]:
    target = _normalized(np.asarray(target, dtype=complex))
    if np.linalg.norm(post) == 0 or np.linalg.norm(target) == 0:
        return None
    return fidelity(_normalized(post), target)


# --------------------------------------------------------------------------
# entanglement generation


def pair_targets(alpha1, beta1, alpha2, beta2) -> dict[str, np.ndarray]:
    """Unnormalized ideal atomic states heralded by ``h`` and ``v``."""
    return {
        "h": np.array([0, alpha1 * beta2, beta1 * alpha2, 0], dtype=complex),
        "v": np.array([alpha1 * alpha2, 0, 0, -beta1 * beta2], dtype=complex),
    }


def three_targets(coeffs) -> dict[str, np.ndarray]:
    """Unnormalized ideal three-atom states for the ``h + iv`` and ``h - iv`` heralds."""
    (a1, b1), (a2, b2), (a3, b3) = coeffs
    plus = np.zeros(8, dtype=complex)
    minus = np.zeros(8, dtype=complex)
    plus[0b000] = a1 * a2 * a3
    plus[0b110] = -b1 * b2 * a3
    plus[0b011] = -a1 * b2 * b3
    plus[0b101] = -b1 * a2 * b3
    minus[0b111] = b1 * b2 * b3
    minus[0b001] = -a1 * a2 * b3
    minus[0b100] = -b1 * a2 * a3
    minus[0b010] = -a1 * b2 * a3
    return {"plus": plus, "minus": minus}


def run_chain(atoms: Sequence, model: PhaseModel, plate: Literal["diag", "circ"]) -> list[MeasurementRecord]:
    """One ``(h + v)/sqrt2`` photon visits every cavity in order, then is detected."""
    state = SystemState.product([_S, _S], atoms, photon_basis="linear")
    state = convert_basis(state)
    for k in range(1, len(atoms) + 1):
        state = scatter(state, k, model)
    return detect_photon(convert_basis(state), plate)


def entangle_pair(alpha1, beta1, alpha2, beta2, model: Optional[PhaseModel] = None) -> dict[str, MeasurementRecord]:
    """Herald two-atom entanglement with a single photon.

    Returns
    -------
    dict
        ``{"h": record, "v": record}``; the probabilities add up to the
        photon survival probability (1 in ideal mode).
    """
    _check_unit("(alpha1, beta1)", alpha1, beta1)
    _check_unit("(alpha2, beta2)", alpha2, beta2)
    h, v = run_chain([(alpha1, beta1), (alpha2, beta2)], model or PhaseModel.ideal(), "diag")
    return {"h": h, "v": v}


def entangle_three(coeffs, model: Optional[PhaseModel] = None) -> dict[str, MeasurementRecord]:
    """Three-cavity version of ``entangle_pair``, detected with ``hwp_circ``."""
    coeffs = [tuple(c) for c in coeffs]
    if len(coeffs) != 3:
        raise ValueError("entangle_three needs exactly three (alpha, beta) pairs")
    for k, (a, b) in enumerate(coeffs, 1):
        _check_unit(f"atom {k} coefficients", a, b)
    h, v = run_chain(coeffs, model or PhaseModel.ideal(), "circ")
    # h after hwp_circ heralds (h + iv), v heralds (h - iv)
    return {"plus": replace(h, outcome="plus"), "minus": replace(v, outcome="minus")}


def convert_to_photons(atomic_state, through_qwp: bool = True) -> TwoPhotonState:
    """Map ``a|01> + b|10>`` of two atoms onto ``a|R>1|L>2 + b|L>1|R>2``.

    ``atomic_state`` is a 4-vector over ``|00>, |01>, |10>, |11>`` (or an
    atoms-only ``SystemState``). With ``through_qwp`` the photons are then
    relabelled into the linear basis.
    """
    vec = np.asarray(getattr(atomic_state, "amplitudes", atomic_state), dtype=complex).reshape(-1)
    if vec.shape != (4,):
        raise ValueError("expected a two-atom state with 4 amplitudes")
    if abs(vec[0]) > NORMALIZED_TOL or abs(vec[3]) > NORMALIZED_TOL:
        raise ValueError("atomic state has support outside {|01>, |10>}")
    _check_unit("atomic state", vec[1], vec[2])
    photons = np.zeros(4, dtype=complex)
    photons[0b10] = vec[0b01]  # R1 L2
    photons[0b01] = vec[0b10]  # L1 R2
    return TwoPhotonState("linear" if through_qwp else "circular", photons)


# --------------------------------------------------------------------------
# state transfer


@dataclass(frozen=True)
class Correction:
    name: str
    matrix: np.ndarray


@dataclass(frozen=True)
class CorrectionTable:
    """Single-qubit operation for each (photon outcome, atom outcome) pair."""

    entries: dict

    def __post_init__(self):
        for key, corr in self.entries.items():
            m = np.asarray(corr.matrix, dtype=complex)
            if m.shape != (2, 2) or not np.allclose(m.conj().T @ m, IDENTITY, atol=1e-12, rtol=0):
                raise ValueError(f"correction {corr.name} for {key} is not unitary")

    def __getitem__(self, key) -> Correction:
        return self.entries[key]


def _rx_quarter(sign: int) -> np.ndarray:
    # exp(sign * i pi/4 sigma_x)
    return (IDENTITY + sign * 1j * SIGMA_X) * _S


PHOTON_TRANSFER_CORRECTIONS = CorrectionTable({
    ("h", "+"): Correction("M1", -1j * _rx_quarter(-1)),
    ("h", "-"): Correction("M2", -1j * SIGMA_Y @ _rx_quarter(-1)),
    ("v", "+"): Correction("M3", -1j * SIGMA_Y @ _rx_quarter(+1)),
    ("v", "-"): Correction("M4", 1j * _rx_quarter(+1)),
})

# atom 2 is heralded in a|0>-b|1>, a|0>+b|1>, b|0>+a|1>, -b|0>+a|1> (table order)
ATOM_TRANSFER_CORRECTIONS = CorrectionTable({
    ("v", "+"): Correction("Z", SIGMA_Z),
    ("v", "-"): Correction("I", IDENTITY),
    ("h", "+"): Correction("X", SIGMA_X),
    ("h", "-"): Correction("ZX", SIGMA_Z @ SIGMA_X),
})


@dataclass(frozen=True, eq=False)
class TransferBranch:
    photon: str
    atom: str
    probability: float
    correction: str
    received: np.ndarray   # normalized atom-2 state before the correction
    recovered: np.ndarray  # after the correction
    fidelity: Optional[float]

    @property
    def label(self) -> str:
        return f"{self.photon};{self.atom}"

    def to_dict(self) -> dict:
        return {
            "outcome": self.label,
            "probability": self.probability,
            "correction": self.correction,
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.recovered],
            "fidelity": self.fidelity,
        }


def _finish_transfer(photon_records, atom_index, table, target, pre_hadamard: bool):
    branches = {}
    for rec in photon_records:
        state = rec.post_state if pre_hadamard else hadamard_atom(rec.post_state, atom_index)
        for arec in measure_atom_z(state, atom_index):
            corr = table[(rec.outcome, arec.outcome)]
            received = arec.post_state.amplitudes
            recovered = _normalized(corr.matrix @ received)
            branches[(rec.outcome, arec.outcome)] = TransferBranch(
                photon=rec.outcome,
                atom=arec.outcome,
                probability=rec.probability * arec.probability,
                correction=corr.name,
                received=received,
                recovered=recovered,
                fidelity=_branch_fidelity(recovered, target),
            )
    return branches


def transfer_photon_to_atom(x, y, model: Optional[PhaseModel] = None) -> dict[tuple[str, str], TransferBranch]:
    """Move the polarization ``x|h> + y|v>`` onto the second atom of an entangled pair.

    The atoms start in ``(|01> + |10>)/sqrt2`` and the photon meets cavity 1
    only. Keys are ``(photon outcome, atom-1 outcome)``.
    """
    _check_unit("(x, y)", x, y)
    model = model or PhaseModel.ideal()
    bell = np.array([0, _S, _S, 0], dtype=complex)
    state = SystemState(np.kron([x, y], bell), 2, "linear")
    state = convert_basis(scatter(convert_basis(state), 1, model))
    records = detect_photon(state, "diag")
    return _finish_transfer(records, 1, PHOTON_TRANSFER_CORRECTIONS, [x, y], pre_hadamard=False)


def transfer_atom_to_atom(alpha1, beta1, model: Optional[PhaseModel] = None) -> dict[tuple[str, str], TransferBranch]:
    """Move ``alpha1|0> + beta1|1>`` from atom 1 onto atom 2 (prepared in ``|+>``)."""
    _check_unit("(alpha1, beta1)", alpha1, beta1)
    model = model or PhaseModel.ideal()
    state = SystemState.product([_S, _S], [(alpha1, beta1), (_S, _S)], photon_basis="linear")
    state = convert_basis(state)
    state = scatter(scatter(state, 1, model), 2, model)
    state = hadamard_atom(convert_basis(state), 1)
    records = detect_photon(state, "diag")
    return _finish_transfer(records, 1, ATOM_TRANSFER_CORRECTIONS, [alpha1, beta1], pre_hadamard=True)
