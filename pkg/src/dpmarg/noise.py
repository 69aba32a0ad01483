"""Privacy calibration and the Gaussian noise step, with a simple-composition
privacy ledger and counter-based reproducible RNG streams."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .queries import QueryDistribution, RowDatabase, true_parity_answers


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")


@dataclass
class LedgerEntry:
    label: str
    epsilon: float
    delta: float
    note: str = ""


@dataclass
class PrivacyLedger:
    """Running (epsilon, delta) totals under simple composition."""

    entries: list = field(default_factory=list)

    def charge(self, label: str, epsilon: float, delta: float, note: str = ""):
        self.entries.append(LedgerEntry(label, float(epsilon), float(delta), note))

    @property
    def total_epsilon(self) -> float:
        return sum(e.epsilon for e in self.entries)

    @property
    def total_delta(self) -> float:
        return sum(e.delta for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"label": e.label, "epsilon": e.epsilon, "delta": e.delta, "note": e.note}
                for e in self.entries
            ],
            "total_epsilon": self.total_epsilon,
            "total_delta": self.total_delta,
        }


def privacy_multiplier(pp: PrivacyParams) -> float:
    """Gaussian noise scale per unit l2 sensitivity: (1 + sqrt(2 ln(1/delta))) / epsilon."""
    return (1.0 + math.sqrt(2.0 * math.log(1.0 / pp.delta))) / pp.epsilon


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; accepts an int seed or a SeedSequence."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split_rng(seed, n: int):
    """n independent Philox streams derived from one seed."""
    if isinstance(seed, np.random.SeedSequence):
        children = seed.spawn(n)
    else:
        children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def noisy_scaled_answers(
    db: RowDatabase,
    p: QueryDistribution,
    pp: PrivacyParams,
    rng: np.random.Generator,
    ledger: PrivacyLedger | None = None,
    noise_multiplier: float | None = None,
):
    """Gaussian mechanism on the reweighted parity answers.

    Returns (support, y_tilde) with y_tilde_i = sqrt(p_i) * y_i + w_i over the
    sorted support of p, w_i iid N(0, c(eps, delta)^2). Every scaled query
    column has squared norm sum_i p_i = 1, so unit sensitivity suffices.

    noise_multiplier overrides c(eps, delta); pass 0.0 for the noise-free
    test mode (the ledger entry is then marked as not private).
    """
    support = p.support
    if not support:
        raise ValidationError("query distribution has empty support")
    p.validate_for(db.d)
    scale = privacy_multiplier(pp) if noise_multiplier is None else float(noise_multiplier)
    # draw noise before touching the data so the stream is data-independent
    w = scale * rng.standard_normal(len(support))
    y = true_parity_answers(db, support)
    sqrt_p = np.sqrt(p.weight_array(support))
    y_tilde = sqrt_p * y + w
    if ledger is not None:
        note = "" if noise_multiplier is None else (
            f"noise multiplier overridden to {scale}; not a privacy guarantee"
        )
        ledger.charge("gaussian", pp.epsilon, pp.delta, note)
    return support, y_tilde
