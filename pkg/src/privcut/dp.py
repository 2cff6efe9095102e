"""Laplace sampling, the exponential mechanism, and budget composition.

The exponential mechanism is exposed both as a sampler and in an
exact-probability form returning the full normalized distribution; the
privacy auditor and the analytic ratio tests use the latter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LOG2 = float(np.log(2.0))


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) pair."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


class RandomSource:
    """Reproducible randomness: identical (seed, stream) gives identical draws.

    Wraps a PCG64 generator keyed by ``SeedSequence(seed, spawn_key=path)``.
    ``derive(i)`` yields an independent child stream, which is how per-trial
    generators are produced from a master seed without any shared state.
    """

    def __init__(self, seed: int, stream: int = 0, _path: tuple = ()):
        self.seed = int(seed)
        self.stream = int(stream)
        self._path = (self.stream,) + tuple(_path)
        self.gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=self._path))
        )

    def derive(self, *indices: int) -> "RandomSource":
        child = RandomSource.__new__(RandomSource)
        child.seed = self.seed
        child.stream = self.stream
        child._path = self._path + tuple(int(i) for i in indices)
        child.gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=child._path))
        )
        return child

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, path={self._path})"


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RandomSource or numpy Generator, got {type(rng)!r}")


def laplace(scale: float, rng, size=None):
    """Draw from the Laplace density (1/2b) exp(-|x|/b) with b = ``scale``.

    Sampled by inverse CDF on one 64-bit uniform per draw:
    ``u ~ U[-1/2, 1/2)``, ``x = -b * sign(u) * log(1 - 2|u|)``, so two
    implementations sharing the RNG stream produce identical values.
    Mean 0, variance 2 b^2.
    """
    if not scale > 0:
        raise ValueError(f"laplace scale must be positive, got {scale}")
    gen = _as_generator(rng)
    u = gen.random(size) - 0.5
    # u = -1/2 would hit log(0); the guard keeps the map total
    mag = np.maximum(1.0 - 2.0 * np.abs(u), 5e-324)
    x = -scale * np.sign(u) * np.log(mag)
    if size is None:
        return float(x)
    return x


def exponential_mechanism_probs(
    scores,
    sensitivity: float,
    epsilon: float,
    direction: str = "minimize",
) -> np.ndarray:
    """Normalized selection probabilities exp(-+ eps*score/(2*sens)) / Z.

    Log-sum-exp stabilized; adding a constant to all scores leaves the
    output exactly unchanged.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("candidate set is empty")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if not sensitivity > 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if direction == "minimize":
        logits = -epsilon * scores / (2.0 * sensitivity)
    elif direction == "maximize":
        logits = epsilon * scores / (2.0 * sensitivity)
    else:
        raise ValueError(f"direction must be minimize or maximize, got {direction!r}")
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def exponential_mechanism(
    candidates,
    score,
    sensitivity: float,
    epsilon: float,
    rng,
    direction: str = "minimize",
):
    """Sample a candidate with probability exp(-+ eps*score/(2*sens)).

    ``candidates`` is an indexed finite set (sequence); ``score`` is either
    a callable on candidates or a precomputed array aligned with them.
    Ties in score are handled by the sampling itself, never by an argmax
    shortcut.
    """
    candidates = list(candidates) if not isinstance(candidates, (list, np.ndarray)) else candidates
    ncand = len(candidates)
    if ncand == 0:
        raise ValueError("candidate set is empty")
    if callable(score):
        scores = np.array([float(score(c)) for c in candidates])
    else:
        scores = np.asarray(score, dtype=np.float64)
        if scores.shape[0] != ncand:
            raise ValueError("score array does not match the candidate set")
    idx = sample_index(
        exponential_mechanism_probs(scores, sensitivity, epsilon, direction), rng
    )
    if isinstance(candidates, np.ndarray):
        return candidates[idx]
    return candidates[idx]


def sample_index(probs: np.ndarray, rng) -> int:
    """Index draw from a probability vector via one uniform."""
    gen = _as_generator(rng)
    cum = np.cumsum(probs)
    u = gen.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(probs) - 1))


@dataclass
class CompositionLedger:
    """Running record of (tag, epsilon, delta) privacy spends.

    mode "basic": totals follow sequential composition, (sum eps, sum delta).
    mode "advanced": the k-fold composition bound
    eps' = sqrt(2 k ln(1/delta')) * eps + k * eps * (e^eps - 1),
    delta' extra slack, valid when all entries share one epsilon.
    """

    entries: list = field(default_factory=list)
    mode: str = "basic"
    delta_prime: float | None = None

    def spend(self, tag: str, epsilon: float, delta: float = 0.0):
        if not epsilon > 0:
            raise ValueError("per-mechanism epsilon must be positive")
        if not 0.0 <= delta < 1.0:
            raise ValueError("per-mechanism delta must lie in [0, 1)")
        self.entries.append((str(tag), float(epsilon), float(delta)))
        return self

    def total(self) -> PrivacyBudget:
        return compose(self)


def advanced_composition_epsilon(k: int, epsilon: float, delta_prime: float) -> float:
    """Closed-form epsilon of k-fold advanced composition."""
    return float(
        np.sqrt(2.0 * k * np.log(1.0 / delta_prime)) * epsilon
        + k * epsilon * (np.exp(epsilon) - 1.0)
    )


def compose(ledger: CompositionLedger) -> PrivacyBudget:
    """Total privacy budget of a ledger under its composition mode."""
    if not ledger.entries:
        raise ValueError("cannot compose an empty ledger")
    if ledger.mode == "basic":
        eps = sum(e for _, e, _ in ledger.entries)
        delta = sum(d for _, _, d in ledger.entries)
        return PrivacyBudget(eps, delta)
    if ledger.mode == "advanced":
        if ledger.delta_prime is None or not 0 < ledger.delta_prime < 1:
            raise ValueError("advanced mode needs delta_prime in (0, 1)")
        epsilons = {e for _, e, _ in ledger.entries}
        if len(epsilons) != 1:
            raise ValueError(
                "advanced composition formula assumes identical per-mechanism epsilon"
            )
        eps = epsilons.pop()
        k = len(ledger.entries)
        total_eps = advanced_composition_epsilon(k, eps, ledger.delta_prime)
        total_delta = sum(d for _, _, d in ledger.entries) + ledger.delta_prime
        return PrivacyBudget(total_eps, total_delta)
    raise ValueError(f"unknown composition mode {ledger.mode!r}")
