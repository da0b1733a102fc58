"""Photon-number statistics of coherent and thermal light.

Coherent light is Poissonian, ``P(n) = exp(-nbar) nbar**n / n!``; thermal
light follows the Bose-Einstein law ``P(n) = nbar**n / (nbar + 1)**(n + 1)``,
which is the geometric distribution with success probability
``1 / (nbar + 1)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import DomainError

__all__ = [
    "CANONICAL_NBARS",
    "N_FEATURES",
    "SourceKind",
    "PhotonCountSequence",
    "check_nbar",
    "coherent_pmf",
    "thermal_pmf",
    "coherent_logpmf",
    "thermal_logpmf",
    "pmf",
    "logpmf",
    "sample_counts",
    "theoretical_feature_pmf",
]

CANONICAL_NBARS = (0.40, 0.53, 0.67, 0.77)

# P(0) ... P(5) plus the P(>=6) overflow bucket
N_FEATURES = 7

_EXACT_MAX_N = 20


class SourceKind(str, enum.Enum):
    COHERENT = "coherent"
    THERMAL = "thermal"

    @property
    def target(self) -> int:
        """ADALINE target: +1 for coherent, -1 for thermal."""
        return 1 if self is SourceKind.COHERENT else -1

    @property
    def index(self) -> int:
        """Output-unit index for the softmax networks."""
        return 0 if self is SourceKind.COHERENT else 1

    @classmethod
    def from_target(cls, value: float) -> "SourceKind":
        return cls.COHERENT if value > 0 else cls.THERMAL

    @classmethod
    def parse(cls, value: "str | SourceKind") -> "SourceKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown source kind {value!r}") from None


def check_nbar(nbar: float) -> float:
    try:
        value = float(nbar)
    except (TypeError, ValueError):
        raise DomainError(f"mean photon number must be a real number, got {nbar!r}") from None
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"mean photon number must be finite and > 0, got {nbar!r}")
    return value


def _check_n(n: int) -> int:
    if isinstance(n, (bool, np.bool_)) or int(n) != n or n < 0:
        raise DomainError(f"photon number must be a non-negative integer, got {n!r}")
    return int(n)


def coherent_pmf(n: int, nbar: float) -> float:
    nbar = check_nbar(nbar)
    n = _check_n(n)
    if n <= _EXACT_MAX_N:
        return math.exp(-nbar) * nbar**n / math.factorial(n)
    return math.exp(-nbar + n * math.log(nbar) - math.lgamma(n + 1))


def thermal_pmf(n: int, nbar: float) -> float:
    nbar = check_nbar(nbar)
    n = _check_n(n)
    if n <= _EXACT_MAX_N:
        return nbar**n / (nbar + 1.0) ** (n + 1)
    return math.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar))


def coherent_logpmf(n, nbar: float) -> np.ndarray:
    """Vectorized log of the Poisson mass; ``n`` may be any integer array."""
    nbar = check_nbar(nbar)
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("photon numbers must be non-negative")
    return -nbar + n * math.log(nbar) - gammaln(n + 1.0)


def thermal_logpmf(n, nbar: float) -> np.ndarray:
    nbar = check_nbar(nbar)
    n = np.asarray(n)
    if np.any(n < 0):
        raise DomainError("photon numbers must be non-negative")
    return n * math.log(nbar) - (n + 1.0) * math.log1p(nbar)


def pmf(source: SourceKind, n: int, nbar: float) -> float:
    source = SourceKind.parse(source)
    return coherent_pmf(n, nbar) if source is SourceKind.COHERENT else thermal_pmf(n, nbar)


def logpmf(source: SourceKind, n, nbar: float) -> np.ndarray:
    source = SourceKind.parse(source)
    if source is SourceKind.COHERENT:
        return coherent_logpmf(n, nbar)
    return thermal_logpmf(n, nbar)


@dataclass(frozen=True, eq=False)
class PhotonCountSequence:
    """Photon counts, one per time bin, for one source and one subset.

    ``source`` and ``nbar`` are ``None`` for counts recovered from a trace
    whose provenance is unknown.
    """

    counts: np.ndarray
    source: SourceKind | None = None
    nbar: float | None = None
    seed: int | None = None

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64).reshape(-1)
        if counts.size < 1:
            raise DomainError("a count sequence needs at least one bin")
        if np.any(counts < 0):
            raise DomainError("photon counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        if self.source is not None:
            object.__setattr__(self, "source", SourceKind.parse(self.source))
        if self.nbar is not None:
            object.__setattr__(self, "nbar", check_nbar(self.nbar))

    def __len__(self) -> int:
        return int(self.counts.size)

    def __eq__(self, other):
        if not isinstance(other, PhotonCountSequence):
            return NotImplemented
        return (
            self.source == other.source
            and self.nbar == other.nbar
            and self.seed == other.seed
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None


def _draw(source: SourceKind, nbar: float, size, rng: np.random.Generator) -> np.ndarray:
    if source is SourceKind.COHERENT:
        return rng.poisson(nbar, size=size).astype(np.int64)
    # numpy's geometric counts trials up to and including the first success
    return rng.geometric(1.0 / (nbar + 1.0), size=size).astype(np.int64) - 1


def sample_counts(source: SourceKind, nbar: float, m: int, seed: int) -> PhotonCountSequence:
    """Draw ``m`` independent photon counts; a pure function of its arguments."""
    source = SourceKind.parse(source)
    nbar = check_nbar(nbar)
    if int(m) != m or m < 1:
        raise DomainError(f"number of bins must be a positive integer, got {m!r}")
    rng = np.random.default_rng(seed)
    return PhotonCountSequence(_draw(source, nbar, int(m), rng), source, nbar, int(seed))


def theoretical_feature_pmf(source: SourceKind, nbar: float) -> np.ndarray:
    """Analytic ``[P(0), ..., P(5), P(>=6)]`` for a source."""
    source = SourceKind.parse(source)
    nbar = check_nbar(nbar)
    head = [pmf(source, n, nbar) for n in range(N_FEATURES - 1)]
    if source is SourceKind.COHERENT:
        # regularized lower incomplete gamma P(6, nbar) == Pr[Poisson(nbar) >= 6]
        tail = float(gammainc(N_FEATURES - 1, nbar))
    else:
        tail = (nbar / (nbar + 1.0)) ** (N_FEATURES - 1)
    return np.array(head + [tail], dtype=float)
