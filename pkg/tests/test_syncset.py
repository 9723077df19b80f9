import random
from bisect import bisect_left

import pytest

from rlbwtlab.core.compressed_index import CompressedIndex
from rlbwtlab.core.errors import RestartRequested
from rlbwtlab.core.lbgen import gen_thue_morse
from rlbwtlab.core.rlslp import recompress
from rlbwtlab.core.syncset import (
    SyncSet,
    build_sync_set,
    comp_bound,
    compress,
    compressed_sync_set,
    periodic_mask,
    periodic_sets,
    sampled_ids,
    sampled_sync_set,
    sampling_rate,
    sync_set_from_ids,
    verify_sync_set,
    window,
)
from rlbwtlab.core.text import Text, lz77_parse, shortest_period


def _random_text(rng: random.Random, n: int, alphabet: str) -> Text:
    return Text.from_raw("".join(rng.choice(alphabet) for _ in range(n)) + "$")


def test_periodic_mask_matches_shortest_period():
    rng = random.Random(1)
    data = "".join(rng.choice("aab") for _ in range(80)).encode("ascii")
    for length in (3, 6, 9):
        mask = periodic_mask(data, length, length // 3)
        for s in range(len(data) - length + 1):
            assert mask[s] == (shortest_period(data[s : s + length]) <= length // 3)


def test_build_passes_verification_on_random_texts():
    rng = random.Random(2)
    for trial in range(40):
        alphabet = ("ab", "abcd", "a", "aab")[trial % 4]
        text = _random_text(rng, rng.randint(20, 90), alphabet)
        for tau in (2, 3, 4, 8):
            if 2 * tau > text.n:
                continue
            sync = build_sync_set(text, tau, seed=trial)
            assert verify_sync_set(text, sync) is None


def test_single_run_keeps_only_the_last_candidate():
    text = Text.from_raw("a" * 20 + "$")
    sync = build_sync_set(text, 4, seed=3)
    assert sync.positions == (text.n - 2 * 4 + 1,)
    assert verify_sync_set(text, sync) is None


def test_thue_morse_is_dense():
    text = gen_thue_morse(256)
    tau = 8
    sync = build_sync_set(text, tau, seed=5)
    assert verify_sync_set(text, sync) is None
    assert len(sync) >= (text.n - 3 * tau + 2) // tau


def test_same_seed_same_set():
    rng = random.Random(4)
    text = _random_text(rng, 120, "ab")
    assert build_sync_set(text, 5, seed=9) == build_sync_set(text, 5, seed=9)


def test_tau_out_of_range():
    with pytest.raises(ValueError):
        build_sync_set(Text.from_raw("abc$"), 3)
    with pytest.raises(ValueError):
        build_sync_set(Text.from_raw("abc$"), 0)


def test_deleting_a_repeated_position_breaks_consistency():
    half = gen_thue_morse(40).data[:-1]
    text = Text(half + half + b"\x00")
    tau = 4
    sync = build_sync_set(text, tau, seed=1)
    victim = sync.between(1, tau + 1)[0]
    broken = SyncSet(tau, text.n, tuple(i for i in sync.positions if i != victim))
    violation = verify_sync_set(text, broken)
    assert violation is not None and violation.condition == "consistency"


def test_full_candidate_range_breaks_density_on_a_run():
    text = Text.from_raw("ab" + "a" * 30 + "b$")
    tau = 4
    everything = SyncSet(tau, text.n, tuple(range(1, text.n - 2 * tau + 2)))
    violation = verify_sync_set(text, everything)
    assert violation is not None and violation.condition == "density"
    assert "density" in violation.describe()


def _max_b_density(b, tau: int) -> int:
    width = -(-tau // 3)
    ordered = sorted(b)
    best = 0
    for idx, start in enumerate(ordered):
        best = max(best, bisect_left(ordered, start + width) - idx)
    return best


def test_b_positions_are_sparse():
    rng = random.Random(6)
    texts = [Text.from_raw("ab" * 10 + "c" + "a" * 12 + "bc" * 9 + "$")]
    texts += [_random_text(rng, 100, "aab") for _ in range(10)]
    for text in texts:
        for tau in (3, 6, 9, 12):
            sets = periodic_sets(text, tau)
            assert not (sets.b & sets.q)
            assert _max_b_density(sets.b, tau) <= 2


def test_compress_is_the_exact_window_intersection():
    rng = random.Random(7)
    text = _random_text(rng, 150, "ab")
    parse = lz77_parse(text)
    sync = build_sync_set(text, 3, seed=2)
    comp = compress(sync, parse, k=1)
    expected = {
        i for i in sync.positions if any(e - 3 * 3 + 2 < i < e + 3 for e in parse.ends)
    }
    assert set(comp.positions) == expected
    assert set(comp.positions) <= set(sync.positions)
    with pytest.raises(ValueError):
        compress(sync, parse, k=0)


def test_single_phrase_window_clips_to_the_set():
    text = Text.from_raw("ab$")
    parse = lz77_parse(text)
    sync = build_sync_set(text, 1, seed=0)
    assert compress(sync, parse, k=6).positions == sync.positions


def test_compressed_sets_stay_within_their_bound():
    rng = random.Random(8)
    for _ in range(10):
        text = _random_text(rng, 200, "ab")
        parse = lz77_parse(text)
        sync, comp = compressed_sync_set(text, parse, 4, k=6, seed=1)
        assert len(comp) <= comp_bound(6, parse.z)
        assert verify_sync_set(text, sync) is None


def test_window_recovers_the_full_set():
    rng = random.Random(9)
    half = "".join(rng.choice("ab") for _ in range(40))
    for raw in (half + half + "$", "".join(rng.choice("abc") for _ in range(90)) + "$"):
        text = Text.from_raw(raw)
        index = CompressedIndex(recompress(text))
        parse = lz77_parse(text)
        for tau in (2, 4, 6):
            sync = build_sync_set(text, tau, seed=tau)
            last = text.n - 2 * tau + 1
            for k in (1, 6):
                comp = compress(sync, parse, k)
                for i in range(1, last + 1):
                    assert window(comp, index, i) == sync.between(i, min(i + tau, last + 1))


def test_window_rejects_positions_past_the_candidates():
    text = Text.from_raw("abcabcab$")
    sync = build_sync_set(text, 2, seed=0)
    comp = compress(sync, lz77_parse(text), 1)
    with pytest.raises(ValueError):
        window(comp, CompressedIndex(recompress(text)), text.n)


def test_small_tau_samples_every_close_position():
    rng = random.Random(10)
    text = _random_text(rng, 200, "abcd")
    sample = sampled_ids(text, lz77_parse(text), 8, c_prime=2.0, seed=1)
    assert sample.kappa == 1.0
    assert sample.sample == sample.close


def test_sampled_ids_give_a_valid_sync_set():
    rng = random.Random(11)
    text = _random_text(rng, 300, "abcd")
    parse = lz77_parse(text)
    sync, restarts = sampled_sync_set(text, parse, 40, c_prime=2.0, seed=3)
    assert restarts < 32
    assert verify_sync_set(text, sync) is None


def test_sampling_restarts_are_rare_and_samples_small():
    rng = random.Random(12)
    text = _random_text(rng, 400, "abcd")
    parse = lz77_parse(text)
    tau = 48
    restarts = 0
    sizes = []
    for seed in range(50):
        try:
            sample = sampled_ids(text, parse, tau, c_prime=2.0, seed=seed)
        except RestartRequested:
            restarts += 1
            continue
        sizes.append(len(sample.sample))
        close = len(sample.close)
    assert restarts <= 5
    kappa = sampling_rate(text.n, tau, 2.0)
    assert kappa > 1.0
    assert sum(sizes) / len(sizes) <= 1.1 * close / kappa + 1


def test_unsampled_window_requests_restart():
    text = Text.from_raw("abcdefgh$")
    with pytest.raises(RestartRequested):
        sync_set_from_ids(text, 2, {}, frozenset())
