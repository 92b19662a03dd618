import argparse
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import environ

from catch_subsampling.catch_types import InvalidInputError, SolverKind

env = environ.Env(
    DEGREE=(int, 9),
    SKIP=(int, 0),
    HALTON_COUNT=(int, 10_000),
    FORMAT=(str, "text"),
    MESH_CONSTANT=(float, 2.0),
    WORKERS=(int, 0),
    LOG_LEVEL=(str, "INFO"),
    USE_CLOUD_LOGGING=(bool, False),
)

TABLE_DEGREES = (3, 6, 9, 12, 15, 18)

NORMS_DEGREES = tuple(range(1, 16))

_FORMATS = ("text", "csv")


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: Optional[str]
    preset: str
    dim: Optional[int]
    degree: int
    degrees: Tuple[int, ...]
    solvers: Tuple[SolverKind, ...]
    exactness_factor: Optional[int]
    skip: int
    halton_count: int
    out: Optional[str]
    rtol: Optional[float]
    ktol: Optional[float]
    format: str
    mesh_constant: float
    workers: int
    log_level: str

    def __post_init__(self) -> None:
        if self.degree < 0 or any(n < 0 for n in self.degrees):
            raise InvalidInputError(f"Degrees must be nonnegative, got {self.degree} and {self.degrees}")
        if self.exactness_factor is not None and self.exactness_factor < 1:
            raise InvalidInputError(f"Exactness factor must be at least 1, got {self.exactness_factor}")
        if self.format not in _FORMATS:
            raise InvalidInputError(f"Format must be one of {_FORMATS}, got {self.format!r}")
        if self.out:
            directory = os.path.dirname(os.path.abspath(self.out))
            if not os.access(directory, os.W_OK):
                raise InvalidInputError(f"Cannot write to {self.out}")


def _parse_degrees(text: str) -> Tuple[int, ...]:
    """Parses '3,6,9' or a range '1..15'."""
    text = text.strip()
    try:
        if ".." in text:
            first, last = text.split("..")
            return tuple(range(int(first), int(last) + 1))
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise InvalidInputError(f"Cannot parse degrees {text!r}, expected '3,6,9' or '1..15'")


def _pick(flag_value, env_key: str, getter):
    if flag_value is not None:
        return flag_value
    return getter(env_key)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Resolves every setting as flag, then config file, then environment, then default."""
    if args.config:
        if not os.path.isfile(args.config):
            raise InvalidInputError(f"Config file {args.config} does not exist")
        environ.Env.read_env(args.config, overwrite=True)

    degrees_text = _pick(args.degrees, "DEGREES", lambda key: env.str(key, default=None))
    if degrees_text:
        degrees = _parse_degrees(degrees_text)
    else:
        degrees = NORMS_DEGREES if args.command == "norms" else TABLE_DEGREES

    solver_text = _pick(args.solver, "SOLVER", lambda key: env.str(key, default=None))
    if solver_text:
        try:
            solvers = (SolverKind(solver_text.lower()),)
        except ValueError:
            raise InvalidInputError(f"Solver must be nnls or lp, got {solver_text!r}")
    elif args.command == "table":
        solvers = (SolverKind.NNLS, SolverKind.LP)
    else:
        solvers = (SolverKind.NNLS,)

    default_preset = "quartic" if args.command == "norms" else "four_disks"
    preset = _pick(args.preset, "PRESET", lambda key: env.str(key, default=None)) or default_preset

    return RunConfig(
        command=args.command,
        input=_pick(args.input, "INPUT", lambda key: env.str(key, default=None)),
        preset=preset,
        dim=_pick(args.dim, "DIM", lambda key: env.int(key, default=None)),
        degree=_pick(args.degree, "DEGREE", env.int),
        degrees=degrees,
        solvers=solvers,
        exactness_factor=_pick(args.exactness_factor, "EXACTNESS_FACTOR", lambda key: env.int(key, default=None)),
        skip=_pick(args.skip, "SKIP", env.int),
        halton_count=_pick(args.halton_count, "HALTON_COUNT", env.int),
        out=_pick(args.out, "OUT", lambda key: env.str(key, default=None)),
        rtol=_pick(args.rtol, "RTOL", lambda key: env.float(key, default=None)),
        ktol=_pick(args.ktol, "KTOL", lambda key: env.float(key, default=None)),
        format=_pick(args.format, "FORMAT", env.str),
        mesh_constant=_pick(args.mesh_constant, "MESH_CONSTANT", env.float),
        workers=_pick(args.workers, "WORKERS", env.int),
        log_level="DEBUG" if args.verbose else env.str("LOG_LEVEL").upper(),
    )
