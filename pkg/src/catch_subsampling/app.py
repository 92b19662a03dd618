import argparse
import asyncio
import contextlib
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Awaitable, Callable, Dict, Iterator, List, Optional, Sequence, TextIO

from catch_subsampling.catch_core import compress, compression_ratio
from catch_subsampling.catch_types import (
    CatchError, CompressionOptions, DiscreteMeasure, GeometryError, InvalidInputError, StabilityViolatedError,
)
from catch_subsampling.catchls import stability_factors
from catch_subsampling.config import RunConfig, load_run_config
from catch_subsampling.experiments import (
    NORMS_HEADER, norms_row, norms_text, norms_values, table_header, table_row, table_text, table_values,
)
from catch_subsampling.pointsets import (
    LevelSetDomain, get_preset, preset_points, read_points, write_points, write_rule,
)

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat KEY=value file read before the environment")
    common.add_argument("--input", help="point file, one point per row with an optional weight column")
    common.add_argument("--preset", help="built-in point set: four_disks or quartic")
    common.add_argument("--dim", type=int,
                        help="dimension of the points in --input, 2 unless the file has a '# dim=' comment")
    common.add_argument("--degree", type=int, help="polynomial degree n")
    common.add_argument("--degrees", help="degrees as '3,6,9' or '1..15'")
    common.add_argument("--solver", help="nnls or lp")
    common.add_argument("--exactness-factor", type=int, help="compress at exactness factor * n")
    common.add_argument("--skip", type=int, help="Halton points skipped after the origin")
    common.add_argument("--halton-count", type=int, help="Halton points drawn in the preset bounding box")
    common.add_argument("--out", help="output file, standard output when missing")
    common.add_argument("--rtol", type=float, help="relative tolerance of the numerical rank")
    common.add_argument("--ktol", type=float, help="dual feasibility tolerance of NNLS")
    common.add_argument("--format", help="text or csv")
    common.add_argument("--mesh-constant", type=float, help="assumed mesh constant C_n of the norms mesh")
    common.add_argument("--workers", type=int, help="processes for independent degrees, 0 for one per core")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="run_catch", description="Caratheodory-Tchakaloff subsampling")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("generate", parents=[common], help="write a preset point set to a point file")
    commands.add_parser("compress", parents=[common], help="compress a point set into a sparse positive rule")
    commands.add_parser("table", parents=[common], help="compare LS and CATCHLS over several degrees")
    commands.add_parser("norms", parents=[common], help="LS and CATCHLS operator norms on a level set mesh")
    return parser


def _options(config: RunConfig) -> CompressionOptions:
    return CompressionOptions(rtol=config.rtol, ktol=config.ktol)


def _load_measure(config: RunConfig) -> DiscreteMeasure:
    if config.input:
        return read_points(config.input, config.dim)
    return preset_points(config.preset, config.halton_count, config.skip)


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        yield f


def _write_csv(stream: TextIO, header: Sequence[str], rows: List[List[object]]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


async def _run_rows(function: Callable, argument_lists: List[tuple], workers: int) -> List:
    """Runs independent rows, in a process pool unless workers is 1; results keep submission order."""
    if workers == 1 or len(argument_lists) == 1:
        return [function(*arguments) for arguments in argument_lists]
    with ProcessPoolExecutor(max_workers=workers or None) as executor:
        futures = [asyncio.wrap_future(executor.submit(function, *arguments)) for arguments in argument_lists]
        return list(await asyncio.gather(*futures))


async def cmd_generate(config: RunConfig) -> int:
    if config.input:
        raise InvalidInputError("generate writes a preset, it does not take --input")
    measure = preset_points(config.preset, config.halton_count, config.skip)
    if config.out is None:
        raise InvalidInputError("generate needs --out")
    header = (f"preset={config.preset}", f"halton_count={config.halton_count}", f"skip={config.skip}")
    write_points(config.out, measure, header)
    logger.info(f"Wrote {measure.size} points of {config.preset} to {config.out}")
    return 0


async def cmd_compress(config: RunConfig) -> int:
    measure = _load_measure(config)
    factor = config.exactness_factor
    if factor is None:
        factor = 2 if measure.has_unit_masses else 1
    solver = config.solvers[0]
    rule = compress(measure, factor * config.degree, solver, _options(config))
    if config.out:
        write_rule(config.out, rule)
        logger.info(f"Wrote {rule.size} nodes to {config.out}")

    print(f"M={measure.size} N={rule.rank_n} m={rule.size} "
          f"C_ratio={compression_ratio(rule, measure.size):.2f} epsilon={rule.residual:.3e}")
    try:
        factors = stability_factors(rule.residual, measure.size)
    except StabilityViolatedError as e:
        logger.error(f"No stability factors: {e}")
        return 1
    print(f"alpha={factors.alpha:.12f} beta={factors.beta:.12f} eps_sqrt_M={factors.epsilon_sqrt_m:.3e}")
    return 0


async def cmd_table(config: RunConfig) -> int:
    measure = _load_measure(config)
    logger.info(f"Comparing LS and CATCHLS on {measure.size} points for degrees {config.degrees}")
    rows = await _run_rows(
        table_row, [(measure, n, config.solvers, _options(config)) for n in config.degrees], config.workers)
    with _output(config.out) as stream:
        if config.format == "csv":
            _write_csv(stream, table_header(config.solvers), [table_values(row, config.solvers) for row in rows])
        else:
            stream.write(table_text(rows, config.solvers) + "\n")
    return 0


async def cmd_norms(config: RunConfig) -> int:
    domain = get_preset(config.preset)
    if not isinstance(domain, LevelSetDomain):
        raise GeometryError(f"Operator norms need a preset with boundary sampling, {config.preset} has none")
    solver = config.solvers[0]
    rows = await _run_rows(
        norms_row,
        [(domain, n, solver, config.mesh_constant, config.skip, _options(config)) for n in config.degrees],
        config.workers)
    with _output(config.out) as stream:
        if config.format == "csv":
            _write_csv(stream, NORMS_HEADER, [norms_values(row) for row in rows])
        else:
            stream.write(norms_text(rows) + "\n")

    unstable = [row.degree for row in rows if not row.is_stable]
    if unstable:
        logger.error(f"eps*sqrt(M) >= 1 for degrees {unstable}")
        return 1
    return 0


COMMANDS: Dict[str, Callable[[RunConfig], Awaitable[int]]] = {
    "generate": cmd_generate,
    "compress": cmd_compress,
    "table": cmd_table,
    "norms": cmd_norms,
}


async def start(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    try:
        config = load_run_config(args)
        logging.getLogger('catch_subsampling').setLevel(config.log_level)
        return await COMMANDS[config.command](config)
    except CatchError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except Exception:
        logging.exception("Unexpected error")
        return 1
