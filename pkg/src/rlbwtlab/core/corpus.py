"""
Corpus runner for rlbwt-lab
Runs measurement and conversion over many text files in parallel and collects results
"""
import concurrent.futures
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional

from ..config import Config
from .errors import RlbwtLabError, TextFormatError
from .lz2rlbwt import ConversionStats, convert
from .measures import BoundReport, verify_bounds
from .text import build_bwt_runs, build_suffix_array, load_text, lz77_parse

log = logging.getLogger(__name__)


def collect_files(paths: Iterable[Path]) -> List[Path]:
    """Expand directories one level deep into their regular files, sorted by name."""
    out: List[Path] = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            out.extend(sorted(p for p in path.iterdir() if p.is_file() and not p.name.startswith(".")))
        elif path.exists():
            out.append(path)
        else:
            raise OSError(f"No such file or directory: {path}")
    return out


@dataclass
class ConversionRecord:
    n: int
    z: int
    r: int
    matches: bool
    stats: ConversionStats

    def as_dict(self) -> Dict:
        return {"n": self.n, "z": self.z, "r": self.r, "matches": self.matches, **self.stats.as_dict()}


@dataclass
class CorpusResult:
    reports: Dict[Path, BoundReport] = field(default_factory=dict)
    conversions: Dict[Path, ConversionRecord] = field(default_factory=dict)
    errors: Dict[Path, str] = field(default_factory=dict)
    io_errors: Dict[Path, str] = field(default_factory=dict)
    duration: float = 0.0

    @property
    def ok(self) -> bool:
        return (
            not self.errors
            and not self.io_errors
            and all(report.ok for report in self.reports.values())
            and all(record.matches for record in self.conversions.values())
        )


class CorpusRunner:
    """Per-file parallelism; each file's pipeline stays single-threaded."""

    def __init__(self, config: Config):
        self.config = config

    def _guard(self, path: Path, result: CorpusResult, run_fn):
        try:
            return run_fn()
        except (OSError, TextFormatError) as exc:
            log.warning("%s: %s", path, exc)
            result.io_errors[path] = str(exc)
        except (RlbwtLabError, ValueError) as exc:
            log.warning("%s: %s", path, exc)
            result.errors[path] = str(exc)
        return None

    def measure_file(self, path: Path) -> BoundReport:
        text = load_text(path)
        return verify_bounds(
            text,
            constant=self.config.bound_constant,
            delta_limit=self.config.delta_enumeration_limit,
        )

    def convert_file(self, path: Path, verify: bool = False) -> ConversionRecord:
        text = load_text(path)
        parse = lz77_parse(text)
        bwt, stats = convert(
            parse,
            seed=self.config.seed,
            comp_k=self.config.comp_k,
            retry_limit=self.config.retry_limit,
            verify=verify,
        )
        expected = build_bwt_runs(text, build_suffix_array(text))
        if bwt != expected:
            log.warning("%s: converted RL-BWT differs from the direct construction", path)
        return ConversionRecord(text.n, parse.z, bwt.r, bwt == expected, stats)

    def _run_all(
        self,
        paths: List[Path],
        task: Callable[[Path], object],
        store: Callable[[CorpusResult, Path, object], None],
        on_done: Optional[Callable[[Path], None]] = None,
    ) -> CorpusResult:
        start_time = time.time()
        result = CorpusResult()
        workers = max(1, min(self.config.workers, len(paths)))
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            future_map = {
                executor.submit(self._guard, path, result, lambda p=path: task(p)): path for path in paths
            }
            for future in concurrent.futures.as_completed(future_map):
                path = future_map[future]
                value = future.result()
                if value is not None:
                    store(result, path, value)
                if on_done:
                    on_done(path)
        result.duration = time.time() - start_time
        return result

    def measure_all(
        self, paths: List[Path], on_done: Optional[Callable[[Path], None]] = None
    ) -> CorpusResult:
        """BoundReport for every file; failures land in errors/io_errors keyed by path."""
        return self._run_all(
            paths,
            self.measure_file,
            lambda result, path, report: result.reports.__setitem__(path, report),
            on_done,
        )

    def convert_all(
        self,
        paths: List[Path],
        verify: bool = False,
        on_done: Optional[Callable[[Path], None]] = None,
    ) -> CorpusResult:
        return self._run_all(
            paths,
            lambda path: self.convert_file(path, verify),
            lambda result, path, record: result.conversions.__setitem__(path, record),
            on_done,
        )
