"""
Synchronizing sets for rlbwt-lab
Direct construction with periodic-region handling, verification, the
compressed representation comp_k(S), window recovery and sampled identifiers.

Positions are 1-based. A position i is a candidate when i <= n - 2*tau + 1.
"""
import logging
import math
import random
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .errors import RestartRequested, RetryLimitExceeded
from .grammar_queries import Fragment
from .text import Lz77Parse, Text, shortest_period

log = logging.getLogger(__name__)

INFINITY = math.inf


def periodic_mask(data: bytes, length: int, max_period: int) -> np.ndarray:
    """mask[s] is True iff per(data[s:s+length]) <= max_period (0-based starts)."""
    arr = np.frombuffer(data, dtype=np.uint8)
    count = len(arr) - length + 1
    if count <= 0:
        return np.zeros(0, dtype=bool)
    if max_period >= length:
        return np.ones(count, dtype=bool)
    starts = np.arange(count)
    mask = np.zeros(count, dtype=bool)
    for p in range(1, max_period + 1):
        mismatches = np.concatenate(([0], np.cumsum(arr[:-p] != arr[p:])))
        mask |= mismatches[starts + length - p] == mismatches[starts]
    return mask


@dataclass(frozen=True)
class PeriodicSets:
    """Q holds the starts of highly periodic tau-windows, B the non-Q positions bordering them."""

    tau: int
    q: FrozenSet[int]
    b: FrozenSet[int]


def periodic_sets(text: Text, tau: int) -> PeriodicSets:
    max_period = tau // 3
    last = text.n - tau + 1
    in_q = periodic_mask(text.data, tau, max_period)
    q = frozenset(int(s) + 1 for s in np.flatnonzero(in_q))
    if tau > 1:
        shorter = periodic_mask(text.data, tau - 1, max_period)
        near = shorter[:last] | shorter[1 : last + 1]
        b = frozenset(int(s) + 1 for s in np.flatnonzero(near & ~in_q))
    else:
        b = frozenset()
    return PeriodicSets(tau, q, b)


@dataclass(frozen=True)
class SyncSet:
    tau: int
    n: int
    positions: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.positions)

    def __contains__(self, i: int) -> bool:
        idx = bisect_left(self.positions, i)
        return idx < len(self.positions) and self.positions[idx] == i

    def between(self, lo: int, hi: int) -> List[int]:
        """Elements in [lo..hi)."""
        return list(self.positions[bisect_left(self.positions, lo) : bisect_left(self.positions, hi)])

    def dump(self) -> str:
        return " ".join(str(i) for i in self.positions)


@dataclass(frozen=True)
class SyncViolation:
    condition: str
    i: int
    j: Optional[int] = None

    def describe(self) -> str:
        if self.condition == "consistency":
            return f"positions {self.i} and {self.j} share a 2tau-context but disagree on membership"
        if self.condition == "range":
            return f"position {self.i} lies outside the candidate range"
        return f"density fails for the window starting at {self.i}"


def _check_tau(text: Text, tau: int) -> None:
    if tau < 1 or 2 * tau > text.n:
        raise ValueError(f"tau must satisfy 1 <= tau <= n/2, got tau={tau} for n={text.n}")


def _priority_ids(text: Text, tau: int, sets: PeriodicSets, seed: Optional[int]) -> Dict[bytes, int]:
    """Random bijection on tau-substrings with B-substrings ranked first."""
    rng = random.Random(seed)
    data = text.data
    preferred, rest = set(), set()
    for i in range(1, text.n - tau + 2):
        key = data[i - 1 : i - 1 + tau]
        (preferred if i in sets.b else rest).add(key)
    rest -= preferred
    ordered = sorted(preferred)
    rng.shuffle(ordered)
    tail = sorted(rest)
    rng.shuffle(tail)
    return {key: rank for rank, key in enumerate(ordered + tail)}


def sync_set_from_ids(text: Text, tau: int, ids: Dict[bytes, int], q: FrozenSet[int]) -> SyncSet:
    """Keep i when the smallest id over [i..i+tau] minus Q sits at i or at i+tau."""
    data = text.data

    def ident(j: int) -> float:
        return ids.get(data[j - 1 : j - 1 + tau], INFINITY)

    positions = []
    for i in range(1, text.n - 2 * tau + 2):
        window = [ident(j) for j in range(i, i + tau + 1) if j not in q]
        if not window:
            continue
        low = min(window)
        if low == INFINITY:
            raise RestartRequested(f"no identifier in the window at {i}")
        # Q membership is a property of the substring, so ids never tie across Q
        if low in (ident(i), ident(i + tau)):
            positions.append(i)
    return SyncSet(tau, text.n, tuple(positions))


def build_sync_set(text: Text, tau: int, seed: Optional[int] = None) -> SyncSet:
    """Construct a tau-synchronizing set of text, deterministic under seed."""
    _check_tau(text, tau)
    sets = periodic_sets(text, tau)
    ids = _priority_ids(text, tau, sets, seed)
    sync = sync_set_from_ids(text, tau, ids, sets.q)
    log.debug("tau=%d: |Q|=%d |B|=%d |S|=%d", tau, len(sets.q), len(sets.b), len(sync))
    return sync


def verify_sync_set(text: Text, sync: SyncSet) -> Optional[SyncViolation]:
    """Brute-force check of consistency and density; None when both hold."""
    tau = sync.tau
    _check_tau(text, tau)
    data = text.data
    last = text.n - 2 * tau + 1
    for i in sync.positions:
        if not 1 <= i <= last:
            return SyncViolation("range", i)

    seen: Dict[bytes, int] = {}
    for i in range(1, last + 1):
        context = data[i - 1 : i - 1 + 2 * tau]
        if context not in seen:
            seen[context] = i
        elif (i in sync) != (seen[context] in sync):
            return SyncViolation("consistency", seen[context], i)

    for i in range(1, text.n - 3 * tau + 3):
        empty = not sync.between(i, i + tau)
        periodic = 3 * shortest_period(data[i - 1 : i - 1 + 3 * tau - 1]) <= tau
        if empty != periodic:
            return SyncViolation("density", i)
    return None


@dataclass(frozen=True)
class CompSyncSet:
    """S restricted to the open windows (e - 3k*tau + 2 .. e + k*tau) around phrase ends."""

    tau: int
    k: int
    n: int
    ends: Tuple[int, ...]
    positions: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.positions)


def comp_windows(ends: Sequence[int], tau: int, k: int) -> List[Tuple[int, int]]:
    """Closed intervals equal to the open windows of comp_k."""
    return [(e - 3 * k * tau + 3, e + k * tau - 1) for e in ends]


def compress(sync: SyncSet, parse: Lz77Parse, k: int = 6) -> CompSyncSet:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    ends = parse.ends
    keep = set()
    for lo, hi in comp_windows(ends, sync.tau, k):
        keep.update(sync.between(lo, hi + 1))
    return CompSyncSet(sync.tau, k, sync.n, ends, tuple(sorted(keep)))


def comp_bound(k: int, z: int, nonperiodic: bool = False) -> int:
    return (24 if nonperiodic else 72) * k * z


def compressed_sync_set(
    text: Text,
    parse: Lz77Parse,
    tau: int,
    k: int = 6,
    seed: int = 0,
    retry_limit: int = 32,
) -> Tuple[SyncSet, CompSyncSet]:
    """Resample S until |comp_k(S)| is within its size bound."""
    bound = comp_bound(k, parse.z)
    for attempt in range(retry_limit):
        sync = build_sync_set(text, tau, seed + attempt)
        comp = compress(sync, parse, k)
        if len(comp) <= bound:
            return sync, comp
        log.warning("comp_%d(S) has %d elements, above %d; resampling", k, len(comp), bound)
    raise RetryLimitExceeded(f"no synchronizing set with |comp_{k}(S)| <= {bound} in {retry_limit} attempts")


def window(comp: CompSyncSet, leftmost_index, i: int) -> List[int]:
    """
    Recover S ∩ [i..i+tau) from comp_k(S).

    leftmost_index must offer leftmost(Fragment) -> start of the leftmost
    occurrence, as CompressedIndex does. The window is clipped at n - 2*tau + 1.
    """
    tau = comp.tau
    last = comp.n - 2 * tau + 1
    if not 1 <= i <= last:
        raise ValueError(f"window start {i} outside [1..{last}]")
    end = min(i + 3 * tau - 1, comp.n + 1)
    width = min(tau, last + 1 - i)
    i_left = leftmost_index.leftmost(Fragment(i, end))
    lo = bisect_left(comp.positions, i_left)
    hi = bisect_left(comp.positions, i_left + width)
    return [i + (p - i_left) for p in comp.positions[lo:hi]]


@dataclass
class SampledIds:
    """Partial identifier map drawn from the positions close to phrase ends."""

    tau: int
    kappa: float
    close: List[int]
    sample: List[int]
    positions: List[int]
    ids: Dict[bytes, int] = field(default_factory=dict)

    def id_at(self, text: Text, i: int) -> float:
        return self.ids.get(text.data[i - 1 : i - 1 + self.tau], INFINITY)


def sampling_rate(n: int, tau: int, c_prime: float) -> float:
    """kappa = tau / (3 c' ln 2 log n), clamped below at 1."""
    return max(1.0, tau / (3 * c_prime * math.log(2) * math.log2(max(2, n))))


def sampled_ids(text: Text, parse: Lz77Parse, tau: int, c_prime: float = 2.0, seed: Optional[int] = None) -> SampledIds:
    """
    Sample tau-substrings through their leftmost occurrences near phrase ends.

    Raises RestartRequested when some window [i..i+tau] outside Q ends up
    without a sampled identifier.
    """
    _check_tau(text, tau)
    rng = random.Random(seed)
    data = text.data
    last = text.n - tau + 1
    kappa = sampling_rate(text.n, tau, c_prime)

    close = sorted({j for e in parse.ends for j in range(max(1, e - tau + 1), min(e, last) + 1)})
    sample = [j for j in close if rng.random() < 1 / kappa]

    first: Dict[bytes, int] = {}
    for j in range(1, last + 1):
        first.setdefault(data[j - 1 : j - 1 + tau], j)
    positions = [j for j in sample if first[data[j - 1 : j - 1 + tau]] == j]

    keys = [data[j - 1 : j - 1 + tau] for j in positions]
    rng.shuffle(keys)
    result = SampledIds(tau, kappa, close, sample, positions, {key: rank for rank, key in enumerate(keys)})

    q = periodic_sets(text, tau).q
    for i in range(1, text.n - 2 * tau + 2):
        free = [j for j in range(i, i + tau + 1) if j not in q]
        if free and all(result.id_at(text, j) == INFINITY for j in free):
            raise RestartRequested(f"window at {i} received no sampled identifier")
    return result


def sampled_sync_set(
    text: Text,
    parse: Lz77Parse,
    tau: int,
    c_prime: float = 2.0,
    seed: int = 0,
    retry_limit: int = 32,
) -> Tuple[SyncSet, int]:
    """Las Vegas loop over sampled_ids; returns the set and the number of restarts."""
    q = periodic_sets(text, tau).q
    for attempt in range(retry_limit):
        try:
            sample = sampled_ids(text, parse, tau, c_prime, seed + attempt)
        except RestartRequested as exc:
            log.warning("sampling restart %d: %s", attempt + 1, exc)
            continue
        return sync_set_from_ids(text, tau, sample.ids, q), attempt
    raise RetryLimitExceeded(f"sampling failed {retry_limit} times for tau={tau}")
