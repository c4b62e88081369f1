"""Simulation, perfect sampling and coupling-time tools.

Randomness comes from :class:`SeededStream`, a thin wrapper over numpy's
PCG64 bit generator.  Discrete transition indices are drawn by comparing a
uniform 64-bit integer with thresholds ``floor(2**64 * y_k / y)`` computed in
exact integer arithmetic, so ``P(j) = x_j / y`` up to ``2**-64``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Mapping, Sequence

import numpy as np

from .arrays import as_rates
from .chains import apply_T, apply_U, ranked_basis

TWO64 = 1 << 64


@dataclass(frozen=True)
class StatTolerances:
    """Acceptance bands for statistical comparisons."""

    sigma: float = 3.0
    tv: float = 0.01
    min_expected: float = 5.0  # smaller cells are pooled before the normal band applies


TOLERANCES = StatTolerances()


class SeededStream:
    """Deterministic random source: identical seed gives identical draws."""

    def __init__(self, seed: int, replica: int = 0):
        self.seed = (int(seed) ^ int(replica)) & (TWO64 - 1)
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        self.counter = 0

    def uint64(self, size: int) -> np.ndarray:
        self.counter += size
        return self.rng.integers(0, TWO64, size=size, dtype=np.uint64, endpoint=False)

    def exponential(self, rate: float, size) -> np.ndarray:
        self.counter += int(np.prod(size))
        return self.rng.exponential(1.0 / rate, size=size)

    def poisson(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        self.counter += lam.size
        return self.rng.poisson(lam)


class IndexSampler:
    """Draw ``j`` with probability ``weights[j] / sum(weights)`` (exact Fractions)."""

    def __init__(self, weights: Sequence[Fraction], stream: SeededStream, block: int = 4096):
        weights = [Fraction(w) for w in weights]
        total = sum(weights)
        if total <= 0 or any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative with a positive total")
        acc, cuts = Fraction(0), []
        for w in weights[:-1]:
            acc += w
            cuts.append(math.floor(acc / total * TWO64))
        self.cuts = np.array(cuts, dtype=np.uint64)
        self.stream = stream
        self.block = block
        self._buf: List[int] = []

    def _refill(self):
        u = self.stream.uint64(self.block)
        self._buf = np.searchsorted(self.cuts, u, side="right").tolist()[::-1]

    def draw(self) -> int:
        if not self._buf:
            self._refill()
        return self._buf.pop()

    def draw_many(self, size: int) -> np.ndarray:
        return np.searchsorted(self.cuts, self.stream.uint64(size), side="right")


@dataclass
class EmpiricalDistribution:
    counts: Counter = field(default_factory=Counter)
    total: int = 0

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable]) -> "EmpiricalDistribution":
        c = Counter(samples)
        return cls(c, sum(c.values()))

    def add(self, state, k: int = 1):
        self.counts[state] += k
        self.total += k

    def merge(self, other: "EmpiricalDistribution") -> "EmpiricalDistribution":
        return EmpiricalDistribution(self.counts + other.counts, self.total + other.total)

    def probabilities(self) -> Dict[Hashable, float]:
        return {s: c / self.total for s, c in self.counts.items()}

    def marginal(self, key) -> "EmpiricalDistribution":
        out = Counter()
        for s, c in self.counts.items():
            out[key(s)] += c
        return EmpiricalDistribution(out, self.total)

    def to_csv(self) -> str:
        lines = ["state,count,probability"]
        for s in sorted(self.counts):
            label = "-".join(map(str, s)) if isinstance(s, tuple) else str(s)
            lines.append(f"{label},{self.counts[s]},{self.counts[s] / self.total:.12g}")
        return "\n".join(lines) + "\n"


def tv_distance(p, q: Mapping[Hashable, object], complete: bool = True) -> float:
    """``0.5 * sum |p(s) - q(s)|``.

    ``p`` is an :class:`EmpiricalDistribution` or a probability map.  With
    ``complete=False`` the exact law ``q`` may be listed on a subset of its
    support; the unlisted mass ``1 - sum(q)`` is counted as unmatched.
    """
    probs = p.probabilities() if isinstance(p, EmpiricalDistribution) else dict(p)
    extra = [s for s in probs if s not in q and probs[s] > 0]
    if extra and complete:
        raise ValueError(f"state {extra[0]!r} is outside the exact law's state space")
    listed = sum(float(v) for v in q.values())
    if complete and abs(listed - 1) > 1e-12:
        raise ValueError("exact law does not sum to one")
    dist = sum(abs(probs.get(s, 0.0) - float(v)) for s, v in q.items())
    dist += sum(probs[s] for s in extra)
    if not complete:
        dist += max(0.0, 1 - listed)
    return 0.5 * dist


POOLED = "pooled"


def cell_zscores(p: EmpiricalDistribution, q: Mapping[Hashable, object],
                 min_expected: float | None = None) -> Dict[Hashable, float]:
    """Per-state deviation in binomial standard errors.

    With ``min_expected``, states whose expected count falls below it (and
    any observed state missing from ``q``) are merged into one ``POOLED``
    cell carrying the remaining exact mass, so the normal band stays valid.
    """
    cells = {s: float(v) for s, v in q.items()}
    observed = {s: p.counts.get(s, 0) for s in cells}
    if min_expected is not None:
        small = [s for s, v in cells.items() if v * p.total < min_expected]
        pooled_mass = max(0.0, 1 - sum(cells.values())) + sum(cells[s] for s in small)
        pooled_count = p.total - sum(observed[s] for s in cells if s not in small)
        for s in small:
            del cells[s], observed[s]
        if pooled_mass > 0 or pooled_count > 0:
            cells[POOLED], observed[POOLED] = pooled_mass, pooled_count
    out = {}
    for s, v in cells.items():
        sigma = math.sqrt(v * (1 - v) / p.total) if 0 < v < 1 else 0.0
        diff = observed[s] / p.total - v
        out[s] = diff / sigma if sigma else (0.0 if diff == 0 else math.inf)
    return out


def within_bands(p: EmpiricalDistribution, q: Mapping[Hashable, object],
                 tol: StatTolerances = TOLERANCES) -> Dict[str, object]:
    """TV distance and per-cell z-scores checked against ``tol``."""
    z = cell_zscores(p, q, tol.min_expected)
    worst = max(z, key=lambda s: abs(z[s])) if z else None
    tv = tv_distance(p, q, complete=False)
    return {"tv": tv, "tv_ok": tv <= tol.tv, "worst_cell": worst,
            "worst_z": abs(z[worst]) if worst is not None else 0.0,
            "cells_ok": all(abs(v) <= tol.sigma for v in z.values())}


# -- continuous-time simulation ----------------------------------------------

@dataclass
class SimulationResult:
    jumps: EmpiricalDistribution
    time_weights: Dict[Hashable, float]
    final_state: tuple
    elapsed: float
    trajectory: List[tuple] = field(default_factory=list)

    def time_average(self) -> Dict[Hashable, float]:
        total = sum(self.time_weights.values())
        if total == 0:
            return {self.final_state: 1.0}
        return {s: t / total for s, t in self.time_weights.items()}


def _chain_setup(chain: str, n: int, x):
    x = as_rates(x)
    if chain == "z":
        rates = x.require(n + 1).rates[: n + 1]
        return rates, lambda s, j: apply_U(s, j)
    if chain == "y":
        rates = x.require(n).rates[:n]
        return rates, lambda s, j: apply_T(s, j, n)
    raise ValueError(f"unknown chain {chain!r}; expected 'z' or 'y'")


def simulate_ctmc(chain: str, n: int, x, initial, steps: int, stream: SeededStream,
                  skip_self_loops: bool = False, record: bool = False) -> SimulationResult:
    """Event-driven simulation of ``Z`` (``chain="z"``) or ``Y`` (``chain="y"``).

    With self-loops kept the total event rate is the same in every state and
    each event picks index ``j`` with probability ``x_j / y``.  With
    ``skip_self_loops`` only state-changing events are drawn and holding
    times use the state's own exit rate.  Both give the same time averages.
    """
    if steps < 0:
        raise ValueError("horizon must be nonnegative")
    rates, move = _chain_setup(chain, n, x)
    state = tuple(initial)
    if len(state) != n and chain == "z":
        raise ValueError(f"initial configuration must have {n} bins")
    if chain == "y" and sum(state) != n:
        raise ValueError(f"initial state must be a composition of {n}")
    jumps = EmpiricalDistribution()
    weights: Dict[Hashable, float] = {}
    trajectory: List[tuple] = []
    t = 0.0
    if steps == 0:
        jumps.add(state)
        return SimulationResult(jumps, {state: 0.0}, state, 0.0, trajectory)
    total_rate = float(sum(rates))
    if not skip_self_loops:
        sampler = IndexSampler(rates, stream)
        holds = stream.exponential(total_rate, steps)
        for k in range(steps):
            hold = float(holds[k])
            weights[state] = weights.get(state, 0.0) + hold
            t += hold
            state = move(state, sampler.draw())
            jumps.add(state)
            if record:
                trajectory.append((t, state))
        return SimulationResult(jumps, weights, state, t, trajectory)
    u = stream.uint64(steps)
    e = stream.exponential(1.0, steps)
    for k in range(steps):
        targets = [(j, move(state, j)) for j in range(len(rates)) if rates[j]]
        live = [(j, s) for j, s in targets if s != state]
        if not live:
            raise ValueError(f"state {state} is absorbing")
        out_rate = sum(rates[j] for j, _ in live)
        hold = float(e[k]) / float(out_rate)
        weights[state] = weights.get(state, 0.0) + hold
        t += hold
        threshold = int(u[k])
        acc = Fraction(0)
        for j, s in live:
            acc += rates[j]
            if threshold < math.floor(acc / out_rate * TWO64):
                break
        state = s
        jumps.add(state)
        if record:
            trajectory.append((t, state))
    return SimulationResult(jumps, weights, state, t, trajectory)


# -- perfect sampling of Z ------------------------------------------------------

def sample_Z_perfect(n: int, x, stream: SeededStream, count: int = 1,
                     bins: int | None = None, return_epochs: bool = False):
    """Exact draws from the stationary law of ``Z`` via the bi-infinite construction.

    Epoch lengths ``t_i ~ Exp(x_0)``; ``B[i, k] ~ Poisson(x_k t_i)`` balls fall
    into bin ``k`` during epoch ``i`` (counted backwards); bin ``i`` now holds
    ``sum_j B[i+1-j, j]``.  Returns an integer array of shape ``(count, bins)``.

    ``bins`` (default ``n``) restricts the draw to the leading bins, whose
    joint law involves only ``x_0..x_bins``.
    """
    bins = n if bins is None else bins
    if not 0 <= bins <= n:
        raise ValueError(f"bins must lie in 0..{n}")
    x = as_rates(x).require(bins + 1)
    rates = [float(r) for r in x.rates[: bins + 1]]
    t = stream.exponential(rates[0], (count, bins))
    Z = np.zeros((count, bins), dtype=np.int64)
    for i in range(1, bins + 1):
        for k in range(1, bins - i + 2):
            Z[:, i + k - 2] += stream.poisson(rates[k] * t[:, i - 1])
    if return_epochs:
        return Z, t
    return Z


# -- grand coupling -------------------------------------------------------------

def classify_effective(u: Sequence[int]) -> List[bool]:
    """``u_i`` is ineffective iff ``u_i >= 2`` with at most ``u_i - 2`` zeros before it."""
    flags, zeros = [], 0
    for v in u:
        flags.append(not (v >= 2 and zeros <= v - 2))
        if v == 0:
            zeros += 1
    return flags


def grand_coupling_time_formula(u: Sequence[int], n: int):
    """Position (1-based) of the ``(n-1)``-th effective element, or None."""
    if n <= 1:
        return 0
    seen = 0
    for pos, eff in enumerate(classify_effective(u), start=1):
        if eff:
            seen += 1
            if seen == n - 1:
                return pos
    return None


def grand_coupling_time_bruteforce(u: Sequence[int], n: int, cap: int = 16):
    """Run every composition of ``n`` through ``T_{u_1}, T_{u_2}, ...``; first singleton time."""
    if n > cap:
        raise ValueError(f"brute-force coupling capped at n <= {cap}")
    states = set(ranked_basis(n))
    if len(states) == 1:
        return 0
    for pos, j in enumerate(u, start=1):
        if not 0 <= j <= n - 1:
            raise ValueError(f"index {j} outside 0..{n - 1}")
        states = {apply_T(s, j, n) for s in states}
        if len(states) == 1:
            return pos
    return None


def coalesced_state(u: Sequence[int], n: int):
    """Common image of all compositions under the whole sequence, or None."""
    states = {apply_T_seq(s, u, n) for s in ranked_basis(n)}
    return states.pop() if len(states) == 1 else None


def apply_T_seq(c, u: Iterable[int], n: int):
    for j in u:
        c = apply_T(c, j, n)
    return c


@dataclass
class CFTPDraw:
    state: tuple
    window: int
    indices: tuple = ()  # the window in forward time order, oldest first


def cftp_sample(n: int, x, stream: SeededStream, max_steps: int = 100_000,
                sampler: IndexSampler | None = None) -> CFTPDraw:
    """Coupling from the past for ``Y``.

    Indices are drawn one at a time going further into the past.  Prepending
    a zero can only make later entries effective, so the effective count of
    the window is tracked incrementally; once it reaches ``n - 1`` the
    composed map is constant and its value at time 0 is returned.
    """
    if n == 1:
        return CFTPDraw((1,), 0, ())
    if sampler is None:
        rates = as_rates(x).require_positive(n).rates[:n]
        sampler = IndexSampler(rates, stream)
    past: List[int] = []
    zeros = 0
    effective = 0
    pending: Counter = Counter()
    while effective < n - 1:
        if len(past) >= max_steps:
            raise RuntimeError(f"CFTP did not coalesce within {max_steps} steps")
        j = sampler.draw()
        past.append(j)
        if j == 0:
            zeros += 1
            effective += pending.pop(zeros, 0)
        if j <= 1:
            effective += 1
        else:
            # effective once the number of zeros before it reaches j - 1
            pending[zeros + j - 1] += 1
    forward = tuple(reversed(past))
    state = (n,)
    for j in forward:
        state = apply_T(state, j, n)
    return CFTPDraw(state, len(past), forward)


def cftp_samples(n: int, x, count: int, stream: SeededStream, **kw) -> EmpiricalDistribution:
    rates = as_rates(x).require_positive(n).rates[:n]
    sampler = IndexSampler(rates, stream)
    dist = EmpiricalDistribution()
    for _ in range(count):
        dist.add(cftp_sample(n, rates, stream, sampler=sampler, **kw).state)
    return dist


def random_sequence(n: int, x, length: int, stream: SeededStream) -> List[int]:
    rates = as_rates(x).require(n).rates[:n]
    return IndexSampler(rates, stream).draw_many(length).tolist()


def mean_coupling_time(n: int, x, trials: int, stream: SeededStream, length: int | None = None) -> float:
    """Average grand coupling time of i.i.d. index sequences with law ``x_j / y_{n-1}``."""
    length = length or 50 * n
    rates = as_rates(x).require(n).rates[:n]
    sampler = IndexSampler(rates, stream)
    total = 0
    for _ in range(trials):
        u = [sampler.draw() for _ in range(length)]
        tau = grand_coupling_time_formula(u, n)
        if tau is None:
            raise RuntimeError("sequence too short to couple; raise length")
        total += tau
    return total / trials
