"""
Periodic runs for rlbwt-lab
R = {i <= n-3tau+2 : per(T[i..i+3tau-2]) <= tau/3}, its maximal runs, R-roots,
R-signatures and the local ranks used to place strings that start in a run.

A run starts at j in R' (j in R, j-1 not in R) and covers R-positions j..last.
Every R-position i of the run shares end(i), the first position breaking the
period, and the run's type, the sign of T[end] - T[end-p].
"""
import logging
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .errors import RlbwtLabError
from .range_tree import RangeTree
from .syncset import SyncSet
from .text import Text, TextInf, shortest_period

log = logging.getLogger(__name__)

Signature = Tuple[int, int, int]
Occurrences = Callable[[int, int], int]


@dataclass(frozen=True)
class PeriodicRun:
    start: int
    last: int
    end: int
    period: int
    root: int
    head: int
    exp: int
    tail: int
    sign: int

    @property
    def length(self) -> int:
        """end - start: the longest prefix of T[start..] with the run's period."""
        return self.end - self.start

    @property
    def body(self) -> int:
        """|H'H^k|, the run length without its tail."""
        return self.head + self.exp * self.period


@dataclass(frozen=True)
class LocalRank:
    """
    lt counts the part answered by the exponent counters, eq the part answered
    by the tail-ordered run sequence. When mirrored, both count strings above X
    and total = occ(X[..ell]) - occ(X) - (lt + eq).
    """

    lt: int
    eq: int
    mirrored: bool
    total: int


def minimal_rotation(s: bytes) -> bytes:
    return min(s[i:] + s[:i] for i in range(len(s)))


def truncate(sig: Signature, ell: int, period: int) -> Signature:
    """Cap the exponent at ceil(2 ell / period); capped signatures lose their head."""
    cap = -(-2 * ell // period)
    head, exp, tail = sig
    if exp >= cap:
        return (0, cap, tail)
    return sig


def exponent_counter_sweep(
    period: int,
    signatures: Dict[Tuple[int, int], int],
    queries: Iterable[Tuple[int, int]],
) -> Dict[Tuple[int, int], int]:
    """
    For each query (head, K): positions with that head and exponent < K.

    signatures maps (head, exp) of run starts to their multiplicity. A run with
    signature (h, e) holds one position per head for exponents below e and one
    per head <= h at exponent e. Rounds advance over exponents in increasing
    order, skipped rounds in one step.
    """
    counters = np.zeros(period, dtype=np.int64)
    by_exp: Dict[int, List[Tuple[int, int]]] = {}
    for (head, exp), weight in signatures.items():
        by_exp.setdefault(exp, []).append((head, weight))
    exps = sorted(by_exp)
    remaining = sum(signatures.values())
    done = -1
    nxt = 0
    answers: Dict[Tuple[int, int], int] = {}
    for head, k in sorted(set(queries), key=lambda query: query[1]):
        target = k - 1
        while nxt < len(exps) and exps[nxt] <= target:
            e = exps[nxt]
            counters += (e - done - 1) * remaining
            for h, weight in by_exp[e]:
                counters[: h + 1] += weight
            remaining -= sum(weight for _, weight in by_exp[e])
            counters += remaining
            done = e
            nxt += 1
        if target > done:
            counters += (target - done) * remaining
            done = target
        answers[(head, k)] = int(counters[head])
    return answers


class RunGroup:
    """Runs of one root and one type, ordered by (tail, T∞[end..end+2ell))."""

    def __init__(self, runs: Sequence[PeriodicRun], keys: Dict[int, bytes], ell: int, n: int):
        self.period = runs[0].period
        ordered = sorted(runs, key=lambda run: (run.tail, keys[run.start]))
        merged: List[Tuple[int, bytes, int, int]] = []
        for run in ordered:
            entry = (run.tail, keys[run.start], run.body)
            if merged and merged[-1][:3] == entry:
                merged[-1] = entry + (merged[-1][3] + 1,)
            else:
                merged.append(entry + (1,))
        self.tails = [entry[0] for entry in merged]
        self.keys = [entry[1] for entry in merged]
        self._y_max = n + 1
        self._tree = RangeTree([(x, entry[2], entry[3]) for x, entry in enumerate(merged)])
        self.signatures: Dict[Tuple[int, int], int] = {}
        for run in runs:
            head, exp, _ = truncate((run.head, run.exp, run.tail), ell, run.period)
            self.signatures[(head, exp)] = self.signatures.get((head, exp), 0) + 1
        self._lt: Dict[Tuple[int, int], int] = {}

    def prepare(self, queries: Iterable[Tuple[int, int]]) -> None:
        missing = [query for query in queries if query not in self._lt]
        if missing:
            self._lt.update(exponent_counter_sweep(self.period, self.signatures, missing))

    def lt(self, head: int, k: int) -> int:
        if (head, k) not in self._lt:
            self.prepare([(head, k)])
        return self._lt[(head, k)]

    def _weight(self, lo: int, hi: int, min_body: int) -> int:
        """Runs with index in [lo..hi) whose body is at least min_body."""
        if lo >= hi:
            return 0
        return self._tree.total(lo, hi - 1, min_body, self._y_max)

    def tails_below(self, head: int, k: int, tail: int) -> int:
        """Runs with a smaller tail that hold a position with this head and exponent."""
        return self._weight(0, bisect_left(self.tails, tail), head + k * self.period)

    def ties(self, x_rest: bytes, agree: int, tail: int, min_body: int, above: bool) -> int:
        """Runs with this tail whose continuation after end sorts below (or above) x_rest."""
        lo_block = bisect_left(self.tails, tail)
        hi_block = bisect_right(self.tails, tail)
        m = len(x_rest)
        full = [key[:m] for key in self.keys[lo_block:hi_block]]
        lo, hi = lo_block, hi_block
        if agree:
            head = [key[:agree] for key in self.keys[lo_block:hi_block]]
            lo = lo_block + bisect_left(head, x_rest[:agree])
            hi = lo_block + bisect_right(head, x_rest[:agree])
        if above:
            lo = max(lo, lo_block + bisect_right(full, x_rest))
        else:
            hi = min(hi, lo_block + bisect_left(full, x_rest))
        return self._weight(lo, hi, min_body)


class PeriodicRuns:
    """Runs of R for one round, derived from a tau-synchronizing set with tau = ell // 3."""

    def __init__(self, text: Text, sync: SyncSet, ell: int):
        if sync.tau != ell // 3:
            raise ValueError(f"round ell={ell} needs tau={ell // 3}, got tau={sync.tau}")
        self.text = text
        self.inf = TextInf(text)
        self.ell = ell
        self.tau = sync.tau
        self.n = text.n
        self.runs = self._runs(sync)
        self._starts = [run.start for run in self.runs]
        self._by_start = {run.start: run for run in self.runs}
        keys = {run.start: self.inf.window(run.end, 2 * ell) for run in self.runs}
        grouped: Dict[Tuple[int, int], List[PeriodicRun]] = {}
        for run in self.runs:
            grouped.setdefault((run.root, run.sign), []).append(run)
        self.groups = {key: RunGroup(runs, keys, ell, self.n) for key, runs in grouped.items()}
        log.debug("ell=%d: %d runs over %d roots", ell, len(self.runs), len(self.roots))

    def _runs(self, sync: SyncSet) -> List[PeriodicRun]:
        data = self.text.data
        tau = self.tau
        bounds = (0,) + sync.positions + (self.n - 2 * tau + 2,)
        self.roots: List[bytes] = []
        classes: Dict[bytes, int] = {}
        runs = []
        for a, b in zip(bounds, bounds[1:]):
            if b - a <= tau:
                continue
            start, end = a + 1, b + 2 * tau - 1
            period = shortest_period(data[start - 1 : start + 3 * tau - 2])
            if 3 * period > tau:
                raise RlbwtLabError(f"gap after {a} in S is not periodic (period {period}, tau {tau})")
            key = minimal_rotation(data[start - 1 : start - 1 + period])
            if key not in classes:
                classes[key] = len(self.roots)
                self.roots.append(data[start - 1 : start - 1 + period])
            root = classes[key]
            word = self.roots[root]
            head = next(d for d in range(period) if data[start - 1 + d : start - 1 + d + period] == word)
            exp, tail = divmod(end - start - head, period)
            sign = 1 if data[end - 1] > data[end - 1 - period] else -1
            runs.append(PeriodicRun(start, b - tau, end, period, root, head, exp, tail, sign))
        return runs

    def __len__(self) -> int:
        return len(self.runs)

    def run_of(self, j: int) -> PeriodicRun:
        idx = bisect_right(self._starts, j) - 1
        if idx < 0 or j > self.runs[idx].last:
            raise ValueError(f"position {j} is not in R")
        return self.runs[idx]

    def contains(self, j: int) -> bool:
        idx = bisect_right(self._starts, j) - 1
        return idx >= 0 and j <= self.runs[idx].last

    def run_starts(self) -> List[int]:
        return list(self._starts)

    def end(self, j: int) -> int:
        return self.run_of(j).end

    def r_root(self, j: int) -> Tuple[int, int]:
        """(delta, p) with R-root(j) = T[j+delta..j+delta+p)."""
        run = self.run_of(j)
        return (run.head - (j - run.start)) % run.period, run.period

    def r_signature(self, j: int) -> Signature:
        """(|H'|, k, |H''|) for T[j..end(j)) = H' H^k H''."""
        run = self.run_of(j)
        head, period = self.r_root(j)
        exp, tail = divmod(run.end - j - head, period)
        return head, exp, tail

    def prime_windows(self) -> Dict[bytes, List[int]]:
        """F'_{2 ell}: distinct T∞[j..j+2ell) over run starts j, with their starts."""
        out: Dict[bytes, List[int]] = {}
        for run in self.runs:
            out.setdefault(self.inf.window(run.start, 2 * self.ell), []).append(run.start)
        return out

    # -- local ranks --------------------------------------------------------

    def _plan(self, run: PeriodicRun):
        ell = self.ell
        p, head = run.period, run.head
        frame = run.sign if run.length < 2 * ell else -1
        k, t = divmod(min(run.length, 2 * ell) - head, p)
        kl, rl = divmod(ell - head, p)
        return frame, k, t, kl, rl

    def local_ranks(self, starts: Iterable[int], occurrences: Occurrences) -> Dict[int, LocalRank]:
        """
        r_X = |{j' in R : T∞[j'..j'+ell) = X[..ell], T∞[j'..j'+2ell) < X}| for
        X = T∞[j..j+2ell), j a run start. occurrences(i, m) counts T∞[i..i+m) in T.
        """
        ell = self.ell
        chosen = [self._run_starting_at(j) for j in starts]
        pending: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        for run in chosen:
            frame, k, _, kl, _ = self._plan(run)
            if run.length >= ell and kl < k:
                pending.setdefault((run.root, frame), []).extend([(run.head, k), (run.head, kl)])
        for key, queries in pending.items():
            if key in self.groups:
                self.groups[key].prepare(queries)

        out: Dict[int, LocalRank] = {}
        for run in chosen:
            frame, k, t, kl, rl = self._plan(run)
            group = self.groups.get((run.root, frame))
            lt = eq = 0
            if group is not None:
                head = run.head
                if run.length >= ell:
                    if kl < k:
                        lt = group.lt(head, k) - group.lt(head, kl) - group.tails_below(head, kl, rl)
                        eq = group.tails_below(head, k, t)
                    else:
                        eq = group.tails_below(head, k, t) - group.tails_below(head, k, rl)
                if run.length < 2 * ell:
                    x = self.inf.window(run.start, 2 * ell)
                    agree = max(0, ell - run.length)
                    eq += group.ties(x[run.length :], agree, t, run.body, above=frame == 1)
            total = lt + eq
            if frame == 1:
                total = occurrences(run.start, ell) - occurrences(run.start, 2 * ell) - total
            out[run.start] = LocalRank(lt, eq, frame == 1, total)
        return out

    def _run_starting_at(self, j: int) -> PeriodicRun:
        run = self._by_start.get(j)
        if run is None:
            raise ValueError(f"position {j} does not start a run of R")
        return run
