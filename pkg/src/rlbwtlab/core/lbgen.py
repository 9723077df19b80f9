"""
Lower-bound text families for rlbwt-lab
T_{Δ,N} block strings, de Bruijn constructions and the benchmark corpus generators.
"""
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence

from .measures import BoundRecord, irreducible_lcp_sum
from .text import Text, build_bwt_runs, build_suffix_array, substring_complexity

log = logging.getLogger(__name__)

DIGIT_BASE = ord("0")
DEFAULT_SIZE_LIMIT = 1 << 16
MAX_ALPHABET = 200


def _is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


def bin_k(x: int, k: int) -> str:
    """k-bit binary representation of x."""
    if not 0 <= x < (1 << k):
        raise ValueError(f"{x} does not fit in {k} bits")
    return format(x, f"0{k}b") if k else ""


def num_k(bits: str) -> int:
    return int(bits, 2) if bits else 0


@dataclass(frozen=True)
class LbParams:
    delta: int
    big_n: int

    def __post_init__(self):
        if not (_is_power_of_two(self.delta) and _is_power_of_two(self.big_n)):
            raise ValueError(f"Delta and N must be powers of two, got {self.delta}, {self.big_n}")
        if not 4 <= self.delta <= self.big_n:
            raise ValueError(f"need 4 <= Delta <= N, got Delta={self.delta}, N={self.big_n}")

    @property
    def log_delta(self) -> int:
        return self.delta.bit_length() - 1

    @property
    def regime(self) -> str:
        if self.delta == self.big_n:
            return "degenerate"
        return "small" if self.delta * self.log_delta <= self.big_n else "large"

    def block_lengths(self) -> List[int]:
        """ℓ = 2^k with log Δ <= ℓ <= N/Δ."""
        out = []
        ell = 1
        while ell <= self.big_n // self.delta:
            if ell >= self.log_delta:
                out.append(ell)
            ell *= 2
        return out

    def r_lower_bound(self) -> int:
        lg = self.log_delta
        choices = self.delta * (lg - 3) + lg + 3
        loglog = math.ceil(math.log2(lg)) if lg > 1 else 0
        return choices * ((self.big_n // self.delta).bit_length() - 1 - loglog + 1)

    def irreducible_sum_lower_bound(self) -> int:
        lg = self.log_delta
        choices = self.delta * (lg - 3) + lg + 3
        return choices * (1 << math.ceil(math.log2(self.big_n // self.delta)))


def ell_block(ell: int, delta: int) -> str:
    """B_ℓ = ⊙_{i<Δ} 2^ℓ · bin_{log Δ}(i)."""
    lg = delta.bit_length() - 1
    return "".join("2" * ell + bin_k(i, lg) for i in range(delta))


def gen_small_delta(params: LbParams) -> Text:
    if params.regime != "small":
        raise ValueError(
            f"gen_small_delta needs Delta*log(Delta) <= N (Delta={params.delta}, N={params.big_n})"
        )
    body = "".join(ell_block(ell, params.delta) for ell in params.block_lengths())
    return Text(body.encode("ascii") + b"\x00")


def lyndon_words(sigma: int, k: int) -> Iterator[List[int]]:
    """Lyndon words over [0..sigma) of length dividing k, in lexicographic order."""
    word = [-1]
    while word:
        word[-1] += 1
        m = len(word)
        if k % m == 0:
            yield list(word)
        while len(word) < k:
            word.append(word[len(word) - m])
        while word and word[-1] == sigma - 1:
            word.pop()


def de_bruijn_symbols(sigma: int, k: int, size_limit: int = DEFAULT_SIZE_LIMIT) -> List[int]:
    if sigma < 2 or k < 1:
        raise ValueError(f"de Bruijn sequences need sigma >= 2 and k >= 1, got {sigma}, {k}")
    if sigma**k > size_limit:
        raise ValueError(f"sigma^k = {sigma ** k} exceeds the size guard {size_limit}")
    out: List[int] = []
    for word in lyndon_words(sigma, k):
        out.extend(word)
    return out


def gen_de_bruijn(
    sigma: int,
    k: int,
    alphabet: Optional[Sequence[int]] = None,
    size_limit: int = DEFAULT_SIZE_LIMIT,
) -> bytes:
    """A de Bruijn sequence of order k; symbols are mapped through `alphabet`."""
    if alphabet is None:
        if sigma > MAX_ALPHABET:
            raise ValueError(f"alphabet of size {sigma} does not fit in bytes")
        alphabet = [DIGIT_BASE + c for c in range(sigma)]
    if len(alphabet) != sigma:
        raise ValueError(f"alphabet has {len(alphabet)} symbols, expected {sigma}")
    return bytes(alphabet[c] for c in de_bruijn_symbols(sigma, k, size_limit))


@dataclass
class LargeDeltaPlan:
    case: int
    sigma: int
    k: int
    adjusted_delta: Fraction
    adjusted_n: int
    blocks: int = 1


def plan_large_delta(params: LbParams) -> LargeDeltaPlan:
    big_n = params.big_n
    if params.regime != "large":
        raise ValueError(f"gen_large_delta needs Delta*log(Delta) > N with Delta < N ({params})")
    log_n = big_n.bit_length() - 1
    threshold = big_n * math.log2(log_n) / log_n
    if params.delta >= threshold:
        k = big_n // params.delta
        sigma = 1
        while (sigma + 1) ** k <= big_n:
            sigma += 1
        return LargeDeltaPlan(1, sigma, k, Fraction(params.delta), big_n)
    unit = Fraction(big_n, log_n)
    a = max(1, math.ceil(Fraction(params.delta) / unit))
    sigma = 1 << a
    k = log_n // a
    n_prime = sigma**k
    blocks = -(-big_n // n_prime)
    return LargeDeltaPlan(2, sigma, k, a * unit, big_n, blocks)


def gen_large_delta(params: LbParams, size_limit: int = DEFAULT_SIZE_LIMIT) -> Text:
    plan = plan_large_delta(params)
    if plan.case == 1:
        if plan.sigma > MAX_ALPHABET:
            raise ValueError(f"case 1 needs {plan.sigma} symbols, more than bytes allow")
        body = gen_de_bruijn(plan.sigma, plan.k, size_limit=size_limit)
    else:
        if plan.sigma * plan.blocks > MAX_ALPHABET:
            raise ValueError(f"case 2 needs {plan.sigma * plan.blocks} symbols")
        parts = []
        for j in range(plan.blocks):
            alphabet = [DIGIT_BASE + j * plan.sigma + c for c in range(plan.sigma)]
            parts.append(gen_de_bruijn(plan.sigma, plan.k, alphabet, size_limit))
        body = b"".join(parts)[: plan.adjusted_n]
    log.debug("large-delta plan %s, length %d", plan, len(body))
    return Text(body + b"\x00")


def gen_thue_morse(n: int) -> Text:
    """Length-n prefix of the Thue–Morse word over {a,b}, plus $."""
    return Text(bytes(ord("b") if bin(i).count("1") % 2 else ord("a") for i in range(n)) + b"\x00")


def gen_fibonacci(n: int) -> Text:
    """Length-n prefix of the Fibonacci word over {a,b}, plus $."""
    prev, cur = "b", "a"
    while len(cur) < n:
        prev, cur = cur, cur + prev
    return Text(cur[:n].encode("ascii") + b"\x00")


def gen_random(n: int, sigma: int, rng: random.Random) -> Text:
    if not 1 <= sigma <= 26:
        raise ValueError(f"sigma must be in [1..26], got {sigma}")
    letters = [ord("a") + c for c in range(sigma)]
    return Text(bytes(rng.choice(letters) for _ in range(n)) + b"\x00")


@dataclass
class FamilyReport:
    regime: str
    n: int
    r: int
    irreducible_sum: int
    delta: Optional[Fraction]
    records: List[BoundRecord] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(record.holds for record in self.records)


def verify_family(text: Text, params: LbParams, band: float = 8, delta_limit: int = 4096) -> FamilyReport:
    """Measure a generated text against the family's size, δ and exact counting bounds."""
    sa = build_suffix_array(text)
    r = build_bwt_runs(text, sa).r
    irr = irreducible_lcp_sum(text)
    delta = substring_complexity(text, delta_limit)[0] if text.n <= delta_limit else None
    report = FamilyReport(params.regime, text.n, r, irr, delta)
    if params.regime == "degenerate":
        log.warning("Delta == N: the family degenerates")
        return report

    def add(name, lhs, rhs, constant=1):
        report.records.append(BoundRecord(name, float(lhs), float(rhs), float(constant), lhs <= rhs))

    add("N/band<=n", params.big_n / band, text.n, band)
    add("n<=band*N", text.n, band * params.big_n, band)
    if delta is not None:
        ratio = delta / params.delta
        add("1/band<=delta/Delta", 1 / band, ratio, band)
        add("delta/Delta<=band", ratio, band, band)
    if params.regime == "small":
        add("r_lower_bound<=r", params.r_lower_bound(), r)
        add("irreducible_sum_lower_bound<=irreducible_sum", params.irreducible_sum_lower_bound(), irr)
    else:
        plan = plan_large_delta(params)
        if plan.case == 1:
            add("(sigma-1)/sigma*|S|<=r", de_bruijn_run_bound(plan.sigma, text.n - 1), r)
        else:
            add("N/4<=r", params.big_n / 4, r)
    for record in report.records:
        if not record.holds:
            log.warning("Family check %s failed: %s vs %s", record.bound_name, record.lhs, record.rhs)
    return report


def de_bruijn_run_bound(sigma: int, length: int) -> float:
    """(σ-1)/σ · |S|."""
    return (sigma - 1) / sigma * length
