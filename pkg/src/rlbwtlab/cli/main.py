#!/usr/bin/env python3
"""
rlbwt-lab CLI
Measurement, text generation, LZ77 to RL-BWT conversion and compressed indexing
"""
import click
import csv
import functools
import io
import json
import logging
import random
import sys
from pathlib import Path
from rich.console import Console
from rich.table import Table
from rich.progress import (
    Progress,
    SpinnerColumn,
    TextColumn,
    BarColumn,
    MofNCompleteColumn,
    TimeElapsedColumn,
)
from rich.markup import escape
from rich.panel import Panel
from rich import box

from rlbwtlab import __version__
from rlbwtlab.config import OUTPUT_FORMATS, load_config, setup_logging
from rlbwtlab.core.compressed_index import CompressedIndex
from rlbwtlab.core.corpus import CorpusResult, CorpusRunner, collect_files
from rlbwtlab.core.errors import RlbwtLabError, TextFormatError, VerificationError
from rlbwtlab.core.grammar_queries import Fragment
from rlbwtlab.core.lbgen import (
    LbParams,
    gen_de_bruijn,
    gen_fibonacci,
    gen_large_delta,
    gen_random,
    gen_small_delta,
    gen_thue_morse,
    verify_family,
)
from rlbwtlab.core.lz2rlbwt import convert, write_rlbwt
from rlbwtlab.core.measures import report_rows
from rlbwtlab.core.rlslp import Rlslp, recompress, rlslp_from_lz77
from rlbwtlab.core.text import (
    Text,
    build_bwt_runs,
    build_suffix_array,
    load_text,
    lz77_decode,
    lz77_parse,
    parse_to_json,
    parse_to_lines,
    read_parse,
)

log = logging.getLogger(__name__)

console = Console()

THEME = {
    'text_main': '#e5e5e5',
    'text_muted': '#666666',
    'blue_primary': '#3b82f6',
    'border': '#1a1a1a',
    'crit': '#ff3333',
    'high': '#ff9900',
    'success': '#10b981',
}

EXIT_FAILURE = 1
EXIT_VERIFY = 2
EXIT_USAGE = 3
EXIT_IO = 4

FAMILIES = ("small-delta", "de-bruijn", "large-delta", "thue-morse", "fibonacci", "random")
INDEX_OPS = ("report", "leftmost", "rightmost", "count")

# ═══════════════════════════════════════════════════════════════════════════════
# EXIT CODES
# ═══════════════════════════════════════════════════════════════════════════════


class LabGroup(click.Group):
    """click.Group that reports usage errors with the lab's exit code."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise


def exit_codes(fn):
    """Map library exceptions raised by a command onto exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except VerificationError as exc:
            console.print(f"[{THEME['crit']}]Verification failed:[/{THEME['crit']}] {escape(str(exc))}", soft_wrap=True)
            sys.exit(EXIT_VERIFY)
        except (OSError, TextFormatError) as exc:
            console.print(f"[{THEME['crit']}]I/O error:[/{THEME['crit']}] {escape(str(exc))}", soft_wrap=True)
            sys.exit(EXIT_IO)
        except ValueError as exc:
            console.print(f"[{THEME['crit']}]Error:[/{THEME['crit']}] {escape(str(exc))}", soft_wrap=True)
            sys.exit(EXIT_USAGE)
        except RlbwtLabError as exc:
            console.print(f"[{THEME['crit']}]Error:[/{THEME['crit']}] {escape(str(exc))}", soft_wrap=True)
            sys.exit(EXIT_FAILURE)

    return wrapper


def write_text_file(text: Text, path: Path) -> None:
    """Raw bytes with the sentinel written back as a trailing '$'."""
    Path(path).write_bytes(text.data[:-1] + b"$")


def progress_bar() -> Progress:
    return Progress(
        SpinnerColumn(style=THEME['blue_primary']),
        TextColumn(f"[{THEME['text_main']}]{{task.description}}[/{THEME['text_main']}]"),
        BarColumn(style=THEME['border'], complete_style=THEME['blue_primary'], finished_style=THEME['success']),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


def print_failures(result: CorpusResult) -> None:
    for path, err in sorted({**result.errors, **result.io_errors}.items()):
        console.print(f"[{THEME['high']}]⚠ {path}:[/{THEME['high']}] {escape(err[:160])}", soft_wrap=True)


# ═══════════════════════════════════════════════════════════════════════════════
# MEASURE RENDERING
# ═══════════════════════════════════════════════════════════════════════════════


def measure_payload(result: CorpusResult) -> list:
    return [
        {"text": str(path), "ok": report.ok, **report.as_dict()}
        for path, report in sorted(result.reports.items())
    ]


def render_measure_csv(result: CorpusResult) -> str:
    rows = []
    for path, report in sorted(result.reports.items()):
        rows.extend(report_rows(report, str(path)))
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def display_measure_table(result: CorpusResult) -> None:
    table = Table(box=box.SIMPLE_HEAD, border_style=THEME['border'])
    table.add_column("Text", style=THEME['text_muted'])
    for name in ("n", "r", "r̄", "z", "δ", "Σ irr. LCP"):
        table.add_column(name, justify="right", style=THEME['text_main'])
    table.add_column("Bounds")
    for path, report in sorted(result.reports.items()):
        delta = "-" if report.delta is None else f"{float(report.delta):.3f}"
        if report.ok:
            status = f"[{THEME['success']}]✓ {len(report.records)} hold[/{THEME['success']}]"
        else:
            status = f"[{THEME['crit']}]✗ {len(report.violations)} violated[/{THEME['crit']}]"
        table.add_row(
            path.name,
            str(report.n),
            str(report.r),
            str(report.r_rev),
            str(report.z),
            delta,
            str(report.irreducible_sum),
            status,
        )
    console.print(table)
    for path, report in sorted(result.reports.items()):
        for record in report.violations:
            console.print(
                f"  [{THEME['crit']}]{path.name}: {record.bound_name}[/{THEME['crit']}] "
                f"[{THEME['text_muted']}]{record.lhs:g} > {record.rhs:g}[/{THEME['text_muted']}]"
            )


# ═══════════════════════════════════════════════════════════════════════════════
# COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════


@click.group(cls=LabGroup)
@click.option('--env-file', type=click.Path(dir_okay=False), help='Extra .env file with RLBWT_* settings')
@click.option('--seed', type=int, help='Seed for every randomized step')
@click.option('--format', 'output_format', type=click.Choice(OUTPUT_FORMATS), help='Report format')
@click.option('--workers', type=int, help='Files processed in parallel')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.version_option(__version__, prog_name="rlbwt-lab")
@click.pass_context
def cli(ctx, env_file, seed, output_format, workers, verbose):
    """rlbwt-lab - compressed text-indexing lab"""
    try:
        config = load_config(Path(env_file) if env_file else None).with_overrides(
            seed=seed,
            output_format=output_format,
            workers=workers,
            log_level="DEBUG" if verbose else None,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    setup_logging(config.log_level)
    ctx.obj = config


@cli.command()
@click.argument('paths', nargs=-1, required=True, type=click.Path())
@click.option('--output', '-o', type=click.Path(dir_okay=False), help='Save JSON report')
@click.pass_obj
@exit_codes
def measure(config, paths, output):
    """Measure r, r̄, z, δ and check the bound family for text files or directories"""
    files = collect_files(Path(p) for p in paths)
    if not files:
        raise click.UsageError("no input files")
    runner = CorpusRunner(config)
    with progress_bar() as progress:
        task = progress.add_task("measuring", total=len(files))
        result = runner.measure_all(files, on_done=lambda _: progress.advance(task))

    if config.output_format == "json":
        click.echo(json.dumps(measure_payload(result), indent=2))
    elif config.output_format == "csv":
        click.echo(render_measure_csv(result), nl=False)
    else:
        display_measure_table(result)
        console.print(f"[{THEME['text_muted']}]{len(files)} files in {result.duration:.1f}s[/{THEME['text_muted']}]")
    print_failures(result)

    if output:
        payload = {
            "seed": config.seed,
            "bound_constant": config.bound_constant,
            "reports": measure_payload(result),
            "errors": {str(p): e for p, e in {**result.errors, **result.io_errors}.items()},
        }
        Path(output).write_text(json.dumps(payload, indent=2), encoding="utf-8")

    if any(not report.ok for report in result.reports.values()):
        sys.exit(EXIT_VERIFY)
    if result.io_errors:
        sys.exit(EXIT_IO)
    if result.errors:
        sys.exit(EXIT_USAGE)


@cli.command()
@click.argument('family', type=click.Choice(FAMILIES))
@click.option('--delta', type=int, help='Δ for the small-delta / large-delta families')
@click.option('--n', 'big_n', type=int, help='N for the Δ families, length for the others')
@click.option('--sigma', type=int, help='Alphabet size (de-bruijn, random)')
@click.option('--k', type=int, help='Order of the de Bruijn sequence')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Text file to write')
@click.option('--check', is_flag=True, help='Check the family bounds on the generated text')
@click.pass_obj
@exit_codes
def gen(config, family, delta, big_n, sigma, k, out, check):
    """Generate a lower-bound family or benchmark text"""
    params = None
    if family in ("small-delta", "large-delta"):
        if delta is None or big_n is None:
            raise click.UsageError(f"{family} needs --delta and --n")
        params = LbParams(delta, big_n)
        text = gen_small_delta(params) if family == "small-delta" else gen_large_delta(params)
    elif family == "de-bruijn":
        if sigma is None or k is None:
            raise click.UsageError("de-bruijn needs --sigma and --k")
        text = Text(gen_de_bruijn(sigma, k) + b"\x00")
    else:
        if big_n is None:
            raise click.UsageError(f"{family} needs --n")
        if family == "thue-morse":
            text = gen_thue_morse(big_n)
        elif family == "fibonacci":
            text = gen_fibonacci(big_n)
        else:
            text = gen_random(big_n, sigma or 2, random.Random(config.seed))

    write_text_file(text, Path(out))
    console.print(
        f" [{THEME['blue_primary']}]rlbwt-lab[/{THEME['blue_primary']}] [{THEME['text_muted']}]│[/{THEME['text_muted']}] "
        f"wrote {family} text of {text.n} bytes to {out}"
    )

    if check and params is not None:
        report = verify_family(text, params, delta_limit=config.delta_enumeration_limit)
        table = Table(box=box.SIMPLE_HEAD, border_style=THEME['border'])
        table.add_column("Check", style=THEME['text_muted'])
        table.add_column("lhs", justify="right")
        table.add_column("rhs", justify="right")
        table.add_column("")
        for record in report.records:
            mark = f"[{THEME['success']}]✓[/{THEME['success']}]" if record.holds else f"[{THEME['crit']}]✗[/{THEME['crit']}]"
            table.add_row(record.bound_name, f"{record.lhs:g}", f"{record.rhs:g}", mark)
        console.print(table)
        if not report.ok:
            sys.exit(EXIT_VERIFY)


@cli.command(name="parse")
@click.argument('text_path', type=click.Path(dir_okay=False))
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='LZ77 parse file to write')
@click.option('--json', 'as_json', is_flag=True, help='Write the JSON form instead of records')
@exit_codes
def parse_cmd(text_path, out, as_json):
    """Write the greedy LZ77 parse of a text file"""
    parse = lz77_parse(load_text(Path(text_path)))
    if as_json:
        Path(out).write_text(parse_to_json(parse), encoding="utf-8")
    else:
        Path(out).write_text("\n".join(parse_to_lines(parse)) + "\n", encoding="utf-8")
    console.print(f"[{THEME['text_muted']}]z = {parse.z} phrases → {out}[/{THEME['text_muted']}]")


@cli.command(name="convert")
@click.option('--parse', 'parse_path', required=True, type=click.Path(dir_okay=False), help='LZ77 parse file')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='RL-BWT file to write')
@click.option('--verify', is_flag=True, help='Diff every round and the result against the oracle')
@click.pass_obj
@exit_codes
def convert_cmd(config, parse_path, out, verify):
    """Convert an LZ77 parse into RL(BWT)"""
    parse = read_parse(Path(parse_path))
    bwt, stats = convert(
        parse,
        seed=config.seed,
        comp_k=config.comp_k,
        retry_limit=config.retry_limit,
        verify=verify,
    )
    if verify:
        text = lz77_decode(parse)
        expected = build_bwt_runs(text, build_suffix_array(text))
        if bwt != expected:
            raise VerificationError(f"RL-BWT differs from the oracle: {bwt.render()[:60]} vs {expected.render()[:60]}")
    write_rlbwt(bwt, Path(out))

    if config.output_format == "json":
        click.echo(json.dumps(stats.as_dict(), indent=2))
        return
    table = Table(box=box.SIMPLE_HEAD, border_style=THEME['border'])
    for name in ("ℓ", "τ", "|S|", "|comp|", "W runs", "CWT nodes", "prime windows", "corrections", "runs"):
        table.add_column(name, justify="right")
    for rs in stats.rounds:
        table.add_row(*(str(v) for v in (
            rs.ell, rs.tau, rs.sync_size, rs.comp_size, rs.w_runs, rs.cwt_nodes,
            rs.prime_windows, rs.corrections, rs.runs_out,
        )))
    console.print(table)
    status = "verified" if verify else "done"
    console.print(Panel(
        f"n = {stats.n}   z = {stats.z}   r = {stats.r}   rounds = {len(stats.rounds)}",
        title=f"[{THEME['text_main']}]convert ({status})[/{THEME['text_main']}]",
        border_style=THEME['border'],
    ))


@cli.command()
@click.argument('paths', nargs=-1, required=True, type=click.Path())
@click.option('--verify', is_flag=True, help='Check every round against the oracle')
@click.pass_obj
@exit_codes
def bench(config, paths, verify):
    """Run the conversion over a corpus and tabulate round statistics"""
    files = collect_files(Path(p) for p in paths)
    if not files:
        raise click.UsageError("no input files")
    runner = CorpusRunner(config)
    with progress_bar() as progress:
        task = progress.add_task("converting", total=len(files))
        result = runner.convert_all(files, verify=verify, on_done=lambda _: progress.advance(task))

    if config.output_format == "json":
        click.echo(json.dumps({str(p): rec.as_dict() for p, rec in sorted(result.conversions.items())}, indent=2))
    else:
        table = Table(box=box.SIMPLE_HEAD, border_style=THEME['border'])
        table.add_column("Text", style=THEME['text_muted'])
        for name in ("n", "z", "r", "rounds", "max |RL|", "max |comp|", "match"):
            table.add_column(name, justify="right")
        for path, rec in sorted(result.conversions.items()):
            rounds = rec.stats.rounds
            table.add_row(
                path.name,
                str(rec.n),
                str(rec.z),
                str(rec.r),
                str(len(rounds)),
                str(max((rs.runs_out for rs in rounds), default=0)),
                str(max((rs.comp_size for rs in rounds), default=0)),
                "✓" if rec.matches else "✗",
            )
        console.print(table)
    print_failures(result)

    if any(not rec.matches for rec in result.conversions.values()) or (verify and result.errors):
        sys.exit(EXIT_VERIFY)
    if result.io_errors:
        sys.exit(EXIT_IO)
    if result.errors:
        sys.exit(EXIT_FAILURE)


@cli.group(cls=LabGroup)
def index():
    """Build and query the compressed pattern-matching index"""


@index.command(name="build")
@click.argument('source', type=click.Path(dir_okay=False))
@click.option('--parse', 'from_parse', is_flag=True, help='SOURCE is an LZ77 parse, not a text')
@click.option('--out', required=True, type=click.Path(dir_okay=False), help='Index descriptor (JSON)')
@click.pass_obj
@exit_codes
def index_build(config, source, from_parse, out):
    """Recompress a text (or parse) and write the grammar descriptor"""
    if from_parse:
        grammar = rlslp_from_lz77(read_parse(Path(source)), constant=config.bound_constant)
    else:
        grammar = recompress(load_text(Path(source)))
    idx = CompressedIndex(grammar)
    payload = {
        "source": str(source),
        "from_parse": from_parse,
        "stats": idx.describe(),
        "grammar": grammar.to_lines(),
    }
    Path(out).write_text(json.dumps(payload), encoding="utf-8")
    click.echo(json.dumps(payload["stats"]))


def load_index(path: Path) -> CompressedIndex:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        lines = payload["grammar"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"{path}: not an index descriptor ({exc})") from exc
    return CompressedIndex(Rlslp.from_lines(lines))


@index.command(name="query")
@click.argument('index_path', type=click.Path(dir_okay=False))
@click.option('--op', required=True, type=click.Choice(INDEX_OPS))
@click.option('--pat-start', required=True, type=int, help='1-based start of one occurrence of P')
@click.option('--pat-len', required=True, type=int, help='|P|')
@exit_codes
def index_query(index_path, op, pat_start, pat_len):
    """Answer one query for the pattern T[start..start+len)"""
    idx = load_index(Path(index_path))
    if pat_len < 1:
        raise ValueError(f"pattern length must be positive, got {pat_len}")
    pattern = Fragment(pat_start, pat_start + pat_len)
    answer = getattr(idx, op)(pattern)
    click.echo(json.dumps({"op": op, "pat_start": pat_start, "pat_len": pat_len, "result": answer}))


if __name__ == "__main__":
    cli()
