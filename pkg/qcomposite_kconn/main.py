"""Command-line front end.

    qcomposite-kconn prob     -n 100 -K 3 -P 10 -q 2 -p 0.3 -k 2
    qcomposite-kconn critical -n 10 -P 2 -q 1 -p 1 -k 1
    qcomposite-kconn simulate -n 10 -K 3 -P 3 -q 1 -p 1 -k 1 -T 5 --seed 7
    qcomposite-kconn sweep    --alpha-list -6,0,6 -n 2000 -K 40 -P 5000 -q 2 -k 2 -T 300

Exit codes: 0 success (infeasible answers included), 1 validation error,
2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable, Sequence
from fractions import Fraction
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field
from rich.console import Console

from .config import Settings, configure_logging, get_settings
from .errors import QCompositeError, ResultsWriteError
from .experiment import (
    SWEEP_AXES,
    ExperimentManager,
    format_csv,
    format_trials_csv,
    trial_seed,
    write_csv,
)
from .model.graph_model import Seed, generate_network, write_edge_list
from .model.probability import (
    Mode,
    ModelParams,
    Probability,
    alpha_of,
    approx_key_share_prob,
    bloznelis_bound,
    critical_channel_prob,
    critical_edge_prob,
    critical_key_ring_size,
    critical_pool_size,
    edge_prob,
    key_share_prob,
    limiting_kconn_prob,
    regime_diagnostics,
)
from .printer import Printer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_POOL_CEILING = 10**6

Command = Literal["prob", "critical", "simulate", "sweep"]


class UsageError(Exception):
    """A flag combination that maps to no operation."""


class CliConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    command: Command
    n: int | None = None
    K: int | None = None
    P: int | None = None
    q: int | None = None
    p: float | None = None
    k: int = Field(default=1, ge=1)
    trials: int = Field(ge=1)
    seed: Seed = Seed()
    mode: Mode = Mode.EXACT
    out: str | None = None
    workers: int = Field(default=1, ge=1)
    pool_ceiling: int = DEFAULT_POOL_CEILING
    axis: str | None = None
    values: list[float] | None = None
    alphas: list[float] | None = None
    shared_seeds: bool = False
    dump_trials: str | None = None
    dump_graph: str | None = None
    progress: bool = False
    log_level: str = "WARNING"

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace, settings: Settings) -> CliConfig:
        return cls(
            command=ns.command,
            n=ns.n,
            K=ns.K,
            P=ns.P,
            q=ns.q,
            p=ns.p,
            k=ns.k,
            trials=ns.trials if ns.trials is not None else settings.trials,
            seed=Seed(master=ns.seed),
            mode=ns.mode,
            out=ns.out,
            workers=ns.workers if ns.workers is not None else settings.workers,
            pool_ceiling=getattr(ns, "pool_ceiling", DEFAULT_POOL_CEILING),
            axis=getattr(ns, "axis", None),
            values=getattr(ns, "values", None),
            alphas=getattr(ns, "alpha_list", None),
            shared_seeds=getattr(ns, "shared_seeds", False),
            dump_trials=getattr(ns, "dump_trials", None),
            dump_graph=getattr(ns, "dump_graph", None),
            progress=ns.progress or settings.progress,
            log_level=ns.log_level or settings.log_level,
        )

    def require(self, *names: str) -> None:
        missing = [f"-{name}" for name in names if getattr(self, name) is None]
        if missing:
            raise UsageError(f"{self.command} needs {', '.join(missing)}")

    def model_params(self, **overrides: object) -> ModelParams:
        fields = {"n": self.n, "K": self.K, "P": self.P, "q": self.q, "p": self.p} | overrides
        return ModelParams.model_validate(fields)


def _float_list(text: str) -> list[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _join_list_values(argv: Sequence[str]) -> list[str]:
    # "--alpha-list -6,0,6" would otherwise be read as an unknown option.
    joined: list[str] = []
    items = iter(argv)
    for item in items:
        if item in ("--alpha-list", "--values"):
            following = next(items, None)
            joined.append(item if following is None else f"{item}={following}")
        else:
            joined.append(item)
    return joined


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    model = common.add_argument_group("model parameters")
    model.add_argument("-n", "--nodes", dest="n", type=int, help="number of sensors")
    model.add_argument("-K", "--ring-size", dest="K", type=int, help="keys per sensor")
    model.add_argument("-P", "--pool-size", dest="P", type=int, help="key pool size")
    model.add_argument("-q", "--overlap", dest="q", type=int, help="shared keys needed for a secure link")
    model.add_argument("-p", "--channel-prob", dest="p", type=float, help="probability a channel is on")
    model.add_argument("-k", "--order", dest="k", type=int, default=1, help="connectivity order (default 1)")
    run = common.add_argument_group("run options")
    run.add_argument("-T", "--trials", type=int, default=None, help="trials per point (default $QCOMP_TRIALS or 500)")
    run.add_argument("--seed", type=int, default=0, help="64-bit master seed (default 0)")
    run.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXACT.value, help="arithmetic mode")
    run.add_argument("--out", default=None, help="output path (default stdout)")
    run.add_argument("--workers", type=int, default=None, help="worker processes (default $QCOMP_WORKERS or 1)")
    run.add_argument("--progress", action="store_true", help="live progress on stderr")
    run.add_argument("--log-level", default=None, help="log level (default $QCOMP_LOG_LEVEL or WARNING)")

    parser = argparse.ArgumentParser(
        prog="qcomposite-kconn",
        description="k-connectivity of q-composite key predistribution networks under on/off channels",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("prob", parents=[common], help="link probabilities, bounds and alpha")

    critical = subparsers.add_parser("critical", parents=[common], help="solve for the one omitted of K, P, p")
    critical.add_argument(
        "--pool-ceiling", type=int, default=DEFAULT_POOL_CEILING, help="largest pool size searched for P*"
    )

    simulate = subparsers.add_parser("simulate", parents=[common], help="Monte Carlo estimate at one point")
    simulate.add_argument(
        "--dump-trials",
        nargs="?",
        const="-",
        default=None,
        metavar="PATH",
        help="also write the per-trial table (to PATH, or after the summary)",
    )
    simulate.add_argument("--dump-graph", metavar="FILE", default=None, help="write the first trial's edge list")

    sweep = subparsers.add_parser("sweep", parents=[common], help="Monte Carlo estimates along one axis")
    sweep.add_argument("--axis", choices=SWEEP_AXES, default=None, help="parameter to vary")
    sweep.add_argument("--values", type=_float_list, default=None, help="comma-separated axis values")
    sweep.add_argument("--alpha-list", type=_float_list, default=None, help="comma-separated target alphas")
    sweep.add_argument("--shared-seeds", action="store_true", help="reuse the same trial seeds on every row")
    return parser


def _console() -> Console:
    return Console(highlight=False, markup=False, soft_wrap=True, emoji=False)


def _fmt(value: Probability) -> str:
    if isinstance(value, Fraction):
        return f"{value} (~ {float(value)!r})"
    return repr(float(value))


def cmd_prob(config: CliConfig) -> None:
    config.require("n", "K", "P", "q", "p")
    params = config.model_params()
    mode = config.mode
    s = key_share_prob(params.K, params.P, params.q, mode)
    t = edge_prob(params, mode)
    bound = bloznelis_bound(params.K, params.P, params.q, mode)
    approx = approx_key_share_prob(params.K, params.P, params.q, mode)
    regime = regime_diagnostics(params)

    console = _console()
    console.print(f"s = {_fmt(s)}")
    console.print(f"t = {_fmt(t)}")
    console.print(f"bloznelis bound = {_fmt(bound.value)}{' (vacuous)' if bound.vacuous else ''}")
    console.print(f"approximation (1/q!)(K^2/P)^q = {_fmt(approx)}")
    if params.n >= 3:
        point = alpha_of(params, config.k, mode)
        console.print(f"threshold (k={config.k}) = {critical_edge_prob(params.n, config.k)!r}")
        console.print(f"alpha = {point.alpha!r}")
        console.print(f"limiting P[k-connected] = {limiting_kconn_prob(point.alpha, config.k)!r}")
    else:
        console.print("alpha = undefined (needs n >= 3)")
    console.print(
        f"K^2/P = {regime.ring_density!r}, P/n = {regime.pool_per_node!r}, "
        f"within regime = {'yes' if regime.within_regime else 'no'}"
    )


def cmd_critical(config: CliConfig) -> None:
    config.require("n", "q")
    unknown = [name for name in ("K", "P", "p") if getattr(config, name) is None]
    if len(unknown) != 1:
        raise UsageError(f"critical needs exactly one of -K, -P, -p omitted, got {len(unknown)} omitted")
    n, q, k, mode = config.n, config.q, config.k, config.mode
    match unknown[0]:
        case "K":
            result = critical_key_ring_size(n, config.P, q, config.p, k, mode=mode)
        case "P":
            result = critical_pool_size(n, config.K, q, config.p, k, ceiling=config.pool_ceiling, mode=mode)
        case _:
            result = critical_channel_prob(n, config.K, config.P, q, k, mode=mode)
    console = _console()
    console.print(f"{result.name}* = {result.describe()}")
    console.print(f"threshold (k={k}) = {result.threshold!r}")


def _write_output(text: str, config: CliConfig) -> None:
    if config.out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        write_csv_text(text, config.out)


def write_csv_text(text: str, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    except OSError as e:
        raise ResultsWriteError(path, e) from e


def _manager(config: CliConfig) -> ExperimentManager:
    printer = Printer() if config.progress else None
    return ExperimentManager(workers=config.workers, printer=printer, mode=config.mode)


def cmd_simulate(config: CliConfig) -> None:
    config.require("n", "K", "P", "q", "p")
    params = config.model_params()
    keep_trials = config.dump_trials is not None
    with _manager(config) as manager:
        result = manager.run_point(params, config.k, config.trials, config.seed, keep_trials=keep_trials)

    text = format_csv([result.row])
    if config.dump_trials == "-":
        text += "\n" + format_trials_csv(result.records)
    elif config.dump_trials is not None:
        write_csv_text(format_trials_csv(result.records), config.dump_trials)
    _write_output(text, config)

    if config.dump_graph is not None:
        write_edge_list(generate_network(params, trial_seed(config.seed, 0, 0)), config.dump_graph)


def cmd_sweep(config: CliConfig) -> None:
    if config.alphas is not None:
        config.require("n", "K", "P", "q")
        if config.axis is not None or config.values is not None:
            raise UsageError("use either --alpha-list or --axis with --values, not both")
        # p is solved per row; the base only needs a valid placeholder.
        base = config.model_params(p=config.p if config.p is not None else 1.0)
        with _manager(config) as manager:
            rows = manager.sweep_alpha(
                config.alphas, base, config.k, config.trials, config.seed, shared_seeds=config.shared_seeds
            )
    else:
        if config.axis is None or config.values is None:
            raise UsageError("sweep needs --axis with --values, or --alpha-list")
        config.require(*(name for name in ("n", "K", "P", "q") if name != config.axis))
        placeholders: dict[str, object] = {"K": config.q, "P": config.K, "p": 1.0, "n": 2}
        overrides = {}
        if getattr(config, config.axis) is None:
            overrides[config.axis] = placeholders[config.axis]
        if config.p is None and config.axis != "p":
            raise UsageError("sweep needs -p unless p is the swept axis")
        base = config.model_params(**overrides)
        with _manager(config) as manager:
            rows = manager.sweep(
                config.axis,
                config.values,
                base,
                config.k,
                config.trials,
                config.seed,
                shared_seeds=config.shared_seeds,
            )
    if config.out is None:
        write_csv(rows, sys.stdout)
    else:
        write_csv(rows, config.out)


COMMANDS: dict[str, Callable[[CliConfig], None]] = {
    "prob": cmd_prob,
    "critical": cmd_critical,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(_join_list_values(sys.argv[1:] if argv is None else argv))
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    try:
        settings = get_settings()
        config = CliConfig.from_namespace(ns, settings)
        configure_logging(config.log_level, settings.log_file)
        COMMANDS[config.command](config)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.debug("I/O failure", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        logger.debug("validation failure", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except QCompositeError as e:
        logger.error(f"internal check failed: {e}", exc_info=True)
        return EXIT_VALIDATION
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
