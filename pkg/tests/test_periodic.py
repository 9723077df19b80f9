import random

import pytest

from rlbwtlab.core.compressed_index import naive_occurrences
from rlbwtlab.core.periodic import (
    PeriodicRuns,
    exponent_counter_sweep,
    minimal_rotation,
    truncate,
)
from rlbwtlab.core.syncset import build_sync_set, periodic_mask
from rlbwtlab.core.text import Text, TextInf, shortest_period


def _periodic_text(rng: random.Random, blocks: int) -> Text:
    parts = []
    for _ in range(blocks):
        root = "".join(rng.choice("ab") for _ in range(rng.randint(1, 3)))
        parts.append((root * 60)[: rng.randint(20, 60)])
        parts.append("".join(rng.choice("abc") for _ in range(rng.randint(1, 4))))
    return Text.from_raw("".join(parts) + "$")


def _direct_r(text: Text, tau: int):
    mask = periodic_mask(text.data, 3 * tau - 1, tau // 3)
    return [s + 1 for s in range(len(mask)) if mask[s]]


def _occurrences(text: Text):
    inf = TextInf(text)

    def count(i, m):
        window = inf.window(i, m)
        if 0 in window:
            return 1
        return len(naive_occurrences(text.data, window))

    return count


def _cases(seed: int, count: int):
    rng = random.Random(seed)
    for trial in range(count):
        text = _periodic_text(rng, rng.randint(3, 7))
        for ell in (12, 18, 27):
            tau = ell // 3
            if 2 * tau > text.n:
                continue
            yield text, ell, PeriodicRuns(text, build_sync_set(text, tau, seed=trial), ell)


def test_runs_cover_exactly_r():
    for text, ell, runs in _cases(1, 12):
        covered = [j for run in runs.runs for j in range(run.start, run.last + 1)]
        assert covered == _direct_r(text, ell // 3)
        for j in covered:
            assert runs.contains(j)


def test_end_is_the_first_period_break():
    for text, _, runs in _cases(2, 8):
        data = text.data
        for run in runs.runs:
            p = run.period
            for j in range(run.start, run.last + 1):
                end = runs.end(j)
                assert shortest_period(data[j - 1 : end - 1]) == p
                assert data[end - 1] != data[end - 1 - p]
                sign = 1 if data[end - 1] > data[end - 1 - p] else -1
                assert run.sign == sign


def test_equivalent_positions_share_the_leftmost_root():
    for text, _, runs in _cases(3, 8):
        data = text.data
        positions = [j for run in runs.runs for j in range(run.start, run.last + 1)]
        for j in positions:
            delta, p = runs.r_root(j)
            root = data[j - 1 + delta : j - 1 + delta + p]
            key = minimal_rotation(data[j - 1 : j - 1 + p])
            leftmost = min(
                i for i in positions
                if runs.run_of(i).period == p and minimal_rotation(data[i - 1 : i - 1 + p]) == key
            )
            assert root == data[leftmost - 1 : leftmost - 1 + p]
            assert 0 <= delta < p


def test_signature_decomposes_the_run():
    for text, _, runs in _cases(4, 8):
        data = text.data
        for run in runs.runs:
            for j in range(run.start, run.last + 1):
                head, exp, tail = runs.r_signature(j)
                delta, p = runs.r_root(j)
                assert head == delta and exp >= 1 and 0 <= tail < p
                assert head + exp * p + tail == runs.end(j) - j
                root = data[j - 1 + head : j - 1 + head + p]
                assert data[j - 1 + head : j - 1 + head + exp * p] == root * exp
                assert data[runs.end(j) - 1 - tail : runs.end(j) - 1] == root[:tail]


def test_truncate_caps_large_exponents():
    assert truncate((2, 30, 1), 12, 3) == (0, 8, 1)
    assert truncate((2, 7, 1), 12, 3) == (2, 7, 1)
    assert truncate((1, 8, 0), 12, 3) == (0, 8, 0)


def test_positions_outside_r_are_rejected():
    text = Text.from_raw("abcdefghijklmnopqrstuvwxyz$")
    runs = PeriodicRuns(text, build_sync_set(text, 4, seed=0), 12)
    assert len(runs) == 0
    with pytest.raises(ValueError):
        runs.r_root(3)
    with pytest.raises(ValueError):
        PeriodicRuns(text, build_sync_set(text, 3, seed=0), 12)


def test_counter_sweep_matches_closed_form():
    rng = random.Random(5)
    for _ in range(30):
        period = rng.randint(1, 5)
        signatures = {}
        for _ in range(rng.randint(1, 12)):
            key = (rng.randrange(period), rng.randint(1, 9))
            signatures[key] = signatures.get(key, 0) + rng.randint(1, 3)
        queries = [(rng.randrange(period), rng.randint(0, 11)) for _ in range(20)]
        answers = exponent_counter_sweep(period, signatures, queries)
        for head, k in queries:
            expected = sum(
                weight * min(k, (exp if head <= h else exp - 1) + 1)
                for (h, exp), weight in signatures.items()
            )
            assert answers[(head, k)] == expected


def test_local_ranks_match_direct_count():
    checked = 0
    for text, ell, runs in _cases(6, 14):
        inf = TextInf(text)
        r_set = _direct_r(text, ell // 3)
        occurrences = _occurrences(text)
        ranks = runs.local_ranks(runs.run_starts(), occurrences)
        for j, rank in ranks.items():
            x = inf.window(j, 2 * ell)
            expected = sum(
                1 for i in r_set if inf.window(i, ell) == x[:ell] and inf.window(i, 2 * ell) < x
            )
            assert rank.total == expected
            if not rank.mirrored:
                assert rank.lt + rank.eq == rank.total
            checked += 1
    assert checked > 20


def test_rank_components_do_not_depend_on_batching():
    text = Text.from_raw("c" + "ab" * 20 + "c" + "ab" * 12 + "a" + "ab" * 16 + "bc$")
    runs = PeriodicRuns(text, build_sync_set(text, 6, seed=1), 18)
    occurrences = _occurrences(text)
    batch = runs.local_ranks(runs.run_starts(), occurrences)
    for j in runs.run_starts():
        rank = runs.local_ranks([j], occurrences)[j]
        assert (rank.lt, rank.eq, rank.total) == (batch[j].lt, batch[j].eq, batch[j].total)
    with pytest.raises(ValueError):
        runs.local_ranks([runs.run_starts()[0] + 1], occurrences)
