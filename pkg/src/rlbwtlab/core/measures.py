"""
Repetitiveness measures for rlbwt-lab
Computes r, r̄, z, δ and irreducible-LCP sums and checks the bound family.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from .errors import VerificationError
from .text import (
    Text,
    build_bwt_runs,
    build_lcp,
    build_suffix_array,
    lz77_parse,
    reverse_text,
    substring_complexity,
)

log = logging.getLogger(__name__)


def log2c(x) -> float:
    """log2 with the argument clamped below at 2."""
    return math.log2(max(2, float(x)))


@dataclass
class BoundRecord:
    bound_name: str
    lhs: float
    rhs: float
    constant_used: float
    holds: bool


@dataclass
class BoundReport:
    n: int
    r: int
    r_rev: int
    z: int
    delta: Optional[Fraction]
    irreducible_sum: int
    records: List[BoundRecord] = field(default_factory=list)

    @property
    def violations(self) -> List[BoundRecord]:
        return [record for record in self.records if not record.holds]

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> Dict:
        data = asdict(self)
        data["delta"] = None if self.delta is None else f"{self.delta.numerator}/{self.delta.denominator}"
        return data


def irreducible_lcp_sum(text: Text, lo: int = 0, hi: Optional[int] = None) -> int:
    """Sum of irreducible LCP values v with lo <= v < hi (hi=None means unbounded)."""
    if lo < 0 or (hi is not None and hi <= lo):
        raise ValueError(f"need 0 <= lo < hi, got lo={lo}, hi={hi}")
    sa = build_suffix_array(text)
    lcp = build_lcp(text, sa, build_bwt_runs(text, sa))
    return sum(v for v in lcp.irreducible_values() if v >= lo and (hi is None or v < hi))


def leftmost_cover(text: Text, ell: int, delta: Optional[Fraction] = None) -> int:
    """Positions of T∞[1..) covered by leftmost occurrences of the strings in S_ell."""
    n = text.n
    if not 1 <= ell <= n:
        raise ValueError(f"ell must lie in [1..{n}], got {ell}")
    sa = build_suffix_array(text)
    lcp = build_lcp(text, sa, build_bwt_runs(text, sa)).lcp

    starts = list(range(n - ell + 1, n + 1))  # windows through $ are unique
    group_min = None
    for k, pos in enumerate(sa.sa):
        if n - pos + 1 <= ell:
            if group_min is not None:
                starts.append(group_min)
                group_min = None
            continue
        if group_min is not None and lcp[k] >= ell:
            group_min = min(group_min, pos)
        else:
            if group_min is not None:
                starts.append(group_min)
            group_min = pos
    if group_min is not None:
        starts.append(group_min)

    covered = 0
    reach = 0
    for start in sorted(starts):
        end = start + ell
        if end > reach:
            covered += end - max(start, reach)
            reach = end
    if delta is not None and covered > 3 * delta * ell:
        raise VerificationError(f"leftmost cover {covered} exceeds 3*delta*ell = {3 * delta * ell}")
    return covered


def _record(report: BoundReport, name: str, lhs, rhs, constant) -> None:
    holds = lhs <= rhs
    report.records.append(BoundRecord(name, float(lhs), float(rhs), float(constant), bool(holds)))
    if not holds:
        log.warning("Bound %s violated: %s > %s", name, lhs, rhs)


def verify_bounds(text: Text, constant: float = 64, delta_limit: int = 4096) -> BoundReport:
    """Measure the text and evaluate every inequality of the bound family."""
    sa = build_suffix_array(text)
    bwt = build_bwt_runs(text, sa)
    lcp = build_lcp(text, sa, bwt)
    rev = reverse_text(text)
    r_rev = build_bwt_runs(rev, build_suffix_array(rev)).r
    z = lz77_parse(text).z
    n, r = text.n, bwt.r
    delta = substring_complexity(text, delta_limit)[0] if n <= delta_limit else None
    if delta is None:
        log.warning("n=%d above the delta enumeration limit; delta bounds skipped", n)
    irr_sum = sum(lcp.irreducible_values())
    report = BoundReport(n=n, r=r, r_rev=r_rev, z=z, delta=delta, irreducible_sum=irr_sum)

    logn = log2c(n)
    c = constant
    _record(report, "irreducible_sum<=n*log(r)", irr_sum, n * log2c(r), 1)
    _record(report, "z<=C*r*log(n)", z, c * r * logn, c)
    _record(report, "r<=C*z*log^2(n)", r, c * z * logn**2, c)
    zlz = z * log2c(z)
    _record(report, "r<=C*z*log(z)*max(1,log(n)/(z*log(z)))", r, c * zlz * max(1.0, logn / zlz), c)
    _record(report, "r_rev<=C*r*log^2(n)", r_rev, c * r * logn**2, c)
    if delta is not None:
        _record(report, "delta<=z", delta, z, 1)
        _record(report, "delta<=r", delta, r, 1)
        _record(report, "r<=C*delta*log^2(n)", r, c * float(delta) * logn**2, c)
        dld = float(delta) * log2c(delta)
        _record(report, "r<=C*delta*log(delta)*max(1,log(n)/(delta*log(delta)))", r, c * dld * max(1.0, logn / dld), c)
        _record(report, "irreducible_sum<=C*n*log(delta)", irr_sum, c * n * log2c(delta), c)
    return report


def report_rows(report: BoundReport, name: str = "") -> List[Dict]:
    """Flatten a report into one row per bound for CSV/JSON emitters."""
    base = {
        "text": name,
        "n": report.n,
        "r": report.r,
        "r_rev": report.r_rev,
        "z": report.z,
        "delta": None if report.delta is None else float(report.delta),
    }
    return [dict(base, **asdict(record)) for record in report.records]
