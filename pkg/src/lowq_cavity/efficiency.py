"""Loss budget and time-to-success of the heralded protocols.

Every attempt sends one photon; an attempt succeeds with the budget's overall
efficiency, so the number of attempts until the first herald is geometric.
Photon travel time between cavities is ignored.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

# fixed partition size: merged statistics never depend on the worker count
CHUNK_TRIALS = 1 << 17


@dataclass(frozen=True)
class LossBudget:
    """Per-stage inefficiencies of one protocol run.

    Defaults reproduce the two-atom estimate: 2% atomic-decay failure per
    atom, a 1e-4 detector factor from dark counts, 6% fiber and mirror loss,
    and a source of 1e4 photons per second.
    """

    atom_decay_fraction: float = 0.02
    n_atoms: int = 2
    detector_factor: float = 1e-4
    optical_loss_fraction: float = 0.06
    photon_rate: float = 1e4

    def __post_init__(self):
        for name in ("atom_decay_fraction", "detector_factor", "optical_loss_fraction", "photon_rate"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if not 0 <= self.atom_decay_fraction < 1:
            raise ValueError(f"atom_decay_fraction must lie in [0, 1), got {self.atom_decay_fraction}")
        if not 0 <= self.optical_loss_fraction < 1:
            raise ValueError(f"optical_loss_fraction must lie in [0, 1), got {self.optical_loss_fraction}")
        if not 0 < self.detector_factor <= 1:
            raise ValueError(f"detector_factor must lie in (0, 1], got {self.detector_factor}")
        if isinstance(self.n_atoms, bool) or int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be an integer >= 1, got {self.n_atoms!r}")
        if self.photon_rate <= 0:
            raise ValueError(f"photon_rate must be > 0, got {self.photon_rate}")


def success_probability(budget: LossBudget) -> float:
    """Probability that one photon heralds a successful run."""
    return (
        (1 - budget.atom_decay_fraction) ** budget.n_atoms
        * budget.detector_factor
        * (1 - budget.optical_loss_fraction)
    )


def expected_time(budget: LossBudget) -> float:
    """Mean waiting time in seconds, ``1 / (photon_rate * p)``."""
    p = success_probability(budget)
    if p <= 0:
        raise ValueError("success probability is zero; expected time is unbounded")
    return 1.0 / (budget.photon_rate * p)


@dataclass(frozen=True)
class SuccessStats:
    p_success: float
    expected_attempts: float
    expected_time_s: float
    mc_mean_s: Optional[float] = None
    mc_stddev_s: Optional[float] = None
    n_trials: Optional[int] = None
    seed: Optional[int] = None

    @property
    def mc_standard_error_s(self) -> Optional[float]:
        if self.mc_stddev_s is None or not self.n_trials:
            return None
        return self.mc_stddev_s / math.sqrt(self.n_trials)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def closed_form_stats(budget: LossBudget) -> SuccessStats:
    p = success_probability(budget)
    return SuccessStats(p, 1.0 / p, expected_time(budget))


def _chunk_moments(seq: np.random.SeedSequence, n: int, p: float) -> tuple[int, float, float]:
    attempts = np.random.default_rng(seq).geometric(p, size=n).astype(np.float64)
    mean = float(attempts.mean())
    m2 = float(np.sum((attempts - mean) ** 2))
    return n, mean, m2


def _merge(a, b):
    # pairwise update of (count, mean, sum of squared deviations)
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, sa + sb + delta * delta * na * nb / n


def monte_carlo_time(
    budget: LossBudget,
    seed: int,
    n_trials: int,
    workers: int = 1,
) -> SuccessStats:
    """Sample geometric attempt counts and summarize the time to success.

    Trials are split into fixed-size chunks, each driven by its own child of
    ``SeedSequence(seed)``, so the result is bit-identical for any ``workers``.
    The reported standard deviation uses ``ddof=1`` (0 for a single trial).
    """
    if isinstance(n_trials, bool) or int(n_trials) != n_trials or n_trials < 1:
        raise ValueError(f"n_trials must be an integer >= 1, got {n_trials!r}")
    n_trials = int(n_trials)
    base = closed_form_stats(budget)
    p = base.p_success
    sizes = [CHUNK_TRIALS] * (n_trials // CHUNK_TRIALS)
    if n_trials % CHUNK_TRIALS:
        sizes.append(n_trials % CHUNK_TRIALS)
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_moments, seqs, sizes, [p] * len(sizes)))
    else:
        parts = [_chunk_moments(s, n, p) for s, n in zip(seqs, sizes)]
    total = parts[0]
    for part in parts[1:]:
        total = _merge(total, part)
    n, mean_attempts, m2 = total
    std_attempts = math.sqrt(m2 / (n - 1)) if n > 1 else 0.0
    return SuccessStats(
        p_success=p,
        expected_attempts=base.expected_attempts,
        expected_time_s=base.expected_time_s,
        mc_mean_s=mean_attempts / budget.photon_rate,
        mc_stddev_s=std_attempts / budget.photon_rate,
        n_trials=n_trials,
        seed=seed,
    )
