"""Monte Carlo harness: seeded trials at a parameter point, parameter sweeps and CSV output.

Trial ``i`` of sweep row ``r`` uses ``seed.spawn(r, i)``, so every result is a
deterministic function of (params, k, trials, seed) no matter how many worker
processes run the trials or in which order they finish.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Literal, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, computed_field, model_validator
from scipy.stats import norm

from .errors import InvalidArgumentError, ResultsWriteError
from .model.connectivity import ConnectivityReport, analyze
from .model.graph_model import Seed, generate_network
from .model.probability import (
    Mode,
    ModelParams,
    alpha_of,
    critical_channel_prob,
    edge_prob,
    regime_diagnostics,
)
from .printer import Printer

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 500
WILSON_Z = float(norm.ppf(0.975))

CSV_COLUMNS = [
    "axis",
    "value",
    "n",
    "K",
    "P",
    "q",
    "p",
    "k",
    "trials",
    "t",
    "alpha",
    "p_kconn",
    "p_mindeg",
    "f_rate",
    "wilson_hw",
    "status",
]
TRIAL_COLUMNS = ["trial", "min_degree", "kappa", "k_connected", "f_event", "edge_count"]

Axis = Literal["K", "P", "p", "n"]
SWEEP_AXES: tuple[str, ...] = ("K", "P", "p", "n")


class TrialRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    trial_index: int = Field(ge=0)
    report: ConnectivityReport
    edge_count: int = Field(ge=0)


class SweepRow(BaseModel):
    """Aggregate of one parameter point. Status is ``ok``, ``infeasible`` or ``error:<msg>``."""

    model_config = ConfigDict(frozen=True)

    axis: str
    value: float | None = None
    n: int
    K: int
    P: int
    q: int
    p: float | None
    k: int = Field(ge=1)
    trials: int = Field(ge=0)
    t: float | None = None
    alpha: float | None = None
    kconn_count: int = Field(default=0, ge=0)
    mindeg_count: int = Field(default=0, ge=0)
    f_count: int = Field(default=0, ge=0)
    status: str = "ok"

    @model_validator(mode="after")
    def _check_accounting(self) -> SweepRow:
        if self.mindeg_count != self.kconn_count + self.f_count:
            raise ValueError(
                f"min-degree count {self.mindeg_count} != k-connected {self.kconn_count} + f-events {self.f_count}"
            )
        if self.mindeg_count > self.trials:
            raise ValueError("more successes than trials")
        return self

    def _rate(self, count: int) -> float | None:
        if self.status != "ok" or self.trials == 0:
            return None
        return count / self.trials

    @computed_field  # type: ignore[prop-decorator]
    @property
    def p_kconn_hat(self) -> float | None:
        return self._rate(self.kconn_count)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def p_mindeg_hat(self) -> float | None:
        return self._rate(self.mindeg_count)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def f_rate(self) -> float | None:
        return self._rate(self.f_count)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def wilson_halfwidth(self) -> float | None:
        if self.status != "ok" or self.trials == 0:
            return None
        return wilson_halfwidth(self.kconn_count, self.trials)

    @property
    def params(self) -> ModelParams:
        return ModelParams(n=self.n, K=self.K, P=self.P, q=self.q, p=self.p)

    def csv_record(self) -> dict[str, object]:
        return {
            "axis": self.axis,
            "value": self.value,
            "n": self.n,
            "K": self.K,
            "P": self.P,
            "q": self.q,
            "p": self.p,
            "k": self.k,
            "trials": self.trials,
            "t": self.t,
            "alpha": self.alpha,
            "p_kconn": self.p_kconn_hat,
            "p_mindeg": self.p_mindeg_hat,
            "f_rate": self.f_rate,
            "wilson_hw": self.wilson_halfwidth,
            "status": self.status,
        }


class PointResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    row: SweepRow
    records: list[TrialRecord] = Field(default_factory=list)


def wilson_halfwidth(successes: int, trials: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval."""
    phat = successes / trials
    spread = math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials))
    return z * spread / (1.0 + z * z / trials)


def trial_seed(seed: Seed, row_index: int, trial_index: int) -> Seed:
    return seed.spawn(row_index, trial_index)


def run_trial(params: ModelParams, k: int, seed: Seed, trial_index: int) -> TrialRecord:
    g = generate_network(params, seed)
    report = analyze(g, k)
    return TrialRecord(trial_index=trial_index, report=report, edge_count=g.edge_count)


def _run_batch(
    params: ModelParams, k: int, seed: Seed, row_index: int, trial_indices: Sequence[int]
) -> list[TrialRecord]:
    return [run_trial(params, k, trial_seed(seed, row_index, i), i) for i in trial_indices]


def _error_message(error: Exception) -> str:
    if isinstance(error, ValidationError):
        message = error.errors()[0]["msg"]
    else:
        message = str(error)
    return " ".join(message.split())


def _point_params(base: ModelParams, axis: str, value: float) -> ModelParams:
    if axis not in SWEEP_AXES:
        raise InvalidArgumentError(f"unknown sweep axis {axis!r}; use one of {', '.join(SWEEP_AXES)}")
    if axis != "p":
        if not float(value).is_integer():
            raise InvalidArgumentError(f"{axis} must be an integer, got {value}")
        value = int(value)
    return ModelParams.model_validate(base.model_dump() | {axis: value})


class ExperimentManager:
    """
    Runs the trials of parameter points and sweeps, inline or across worker
    processes, and folds them in trial-index order.
    """

    def __init__(
        self,
        workers: int = 1,
        printer: Printer | None = None,
        mode: Mode = Mode.FLOAT,
        batch_size: int = 16,
    ) -> None:
        if workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {workers}")
        self.workers = workers
        self.printer = printer
        self.mode = mode
        self.batch_size = batch_size
        self._executor: ProcessPoolExecutor | None = None

    def __enter__(self) -> ExperimentManager:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None
        if self.printer is not None:
            self.printer.end()

    def run_point(
        self,
        params: ModelParams,
        k: int,
        trials: int,
        seed: Seed,
        *,
        row_index: int = 0,
        keep_trials: bool = False,
        axis: str = "point",
        value: float | None = None,
    ) -> PointResult:
        if trials < 1:
            raise InvalidArgumentError(f"need at least one trial, got {trials}")
        if k < 1:
            raise InvalidArgumentError(f"connectivity order k must be >= 1, got k={k}")
        regime = regime_diagnostics(params)
        if not regime.within_regime:
            logger.warning(
                f"parameters outside the zero-one regime: K^2/P={regime.ring_density:.3g}, "
                f"P/n={regime.pool_per_node:.3g}"
            )
        item_id = f"row-{row_index}-{axis}-{value}"
        label = f"{axis}={value}" if value is not None else f"n={params.n} K={params.K} P={params.P}"
        logger.info(f"Running {trials} trials at {params.model_dump()} with k={k}")

        records = self._collect(params, k, trials, seed, row_index, item_id, label)

        kconn = sum(r.report.k_connected for r in records)
        mindeg = sum(r.report.min_degree >= k for r in records)
        f_events = sum(r.report.f_event for r in records)
        row = SweepRow(
            axis=axis,
            value=value,
            n=params.n,
            K=params.K,
            P=params.P,
            q=params.q,
            p=params.p,
            k=k,
            trials=trials,
            t=float(edge_prob(params, self.mode)),
            alpha=alpha_of(params, k, self.mode).alpha if params.n >= 3 else None,
            kconn_count=kconn,
            mindeg_count=mindeg,
            f_count=f_events,
        )
        logger.info(f"{label}: p_kconn={row.p_kconn_hat:.4f} p_mindeg={row.p_mindeg_hat:.4f} f_rate={row.f_rate:.4f}")
        return PointResult(row=row, records=records if keep_trials else [])

    def sweep(
        self,
        axis: Axis,
        values: Sequence[float],
        base: ModelParams,
        k: int,
        trials: int,
        seed: Seed,
        *,
        shared_seeds: bool = False,
    ) -> list[SweepRow]:
        """One row per value, in input order; invalid points become ``error:`` rows."""
        rows: list[SweepRow] = []
        for row_index, value in enumerate(values):
            try:
                params = _point_params(base, axis, value)
            except ValueError as e:
                logger.warning(f"skipping {axis}={value}: {_error_message(e)}")
                rows.append(self._status_row(axis, value, base, k, trials, f"error:{_error_message(e)}"))
                continue
            result = self.run_point(
                params,
                k,
                trials,
                seed,
                row_index=0 if shared_seeds else row_index,
                axis=axis,
                value=float(value),
            )
            rows.append(result.row)
        return rows

    def sweep_alpha(
        self,
        alphas: Sequence[float],
        base: ModelParams,
        k: int,
        trials: int,
        seed: Seed,
        *,
        shared_seeds: bool = False,
    ) -> list[SweepRow]:
        """Place each row at a target alpha by solving for the channel probability."""
        rows: list[SweepRow] = []
        for row_index, alpha in enumerate(alphas):
            try:
                solved = critical_channel_prob(base.n, base.K, base.P, base.q, k, offset=alpha, mode=self.mode)
            except ValueError as e:
                logger.warning(f"skipping alpha={alpha}: {_error_message(e)}")
                rows.append(self._status_row("alpha", alpha, base, k, trials, f"error:{_error_message(e)}"))
                continue
            if not solved.feasible:
                logger.warning(f"alpha={alpha} needs a channel probability above 1; row marked infeasible")
                rows.append(self._status_row("alpha", alpha, base, k, trials, "infeasible"))
                continue
            params = ModelParams.model_validate(base.model_dump() | {"p": solved.value})
            result = self.run_point(
                params,
                k,
                trials,
                seed,
                row_index=0 if shared_seeds else row_index,
                axis="alpha",
                value=float(alpha),
            )
            rows.append(result.row)
        return rows

    @staticmethod
    def _status_row(axis: str, value: float, base: ModelParams, k: int, trials: int, status: str) -> SweepRow:
        fields = base.model_dump()
        if axis == "alpha":
            fields["p"] = None
        elif axis == "p":
            fields["p"] = float(value)
        elif axis in SWEEP_AXES and float(value).is_integer():
            fields[axis] = int(value)
        return SweepRow(axis=axis, value=float(value), k=k, trials=trials, status=status, **fields)

    def _collect(
        self,
        params: ModelParams,
        k: int,
        trials: int,
        seed: Seed,
        row_index: int,
        item_id: str,
        label: str,
    ) -> list[TrialRecord]:
        if self.workers == 1:
            records: list[TrialRecord] = []
            for i in range(trials):
                records.append(run_trial(params, k, trial_seed(seed, row_index, i), i))
                if (i + 1) % self.batch_size == 0:
                    self._update(item_id, label, i + 1, trials)
        else:
            records = asyncio.run(self._collect_parallel(params, k, trials, seed, row_index, item_id, label))
        self._update(item_id, label, trials, trials)
        return records

    async def _collect_parallel(
        self,
        params: ModelParams,
        k: int,
        trials: int,
        seed: Seed,
        row_index: int,
        item_id: str,
        label: str,
    ) -> list[TrialRecord]:
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        loop = asyncio.get_running_loop()
        batches = [range(start, min(start + self.batch_size, trials)) for start in range(0, trials, self.batch_size)]
        tasks = [
            loop.run_in_executor(self._executor, _run_batch, params, k, seed, row_index, list(batch))
            for batch in batches
        ]
        records: list[TrialRecord] = []
        for task in asyncio.as_completed(tasks):
            records.extend(await task)
            self._update(item_id, label, len(records), trials)
        records.sort(key=lambda record: record.trial_index)
        return records

    def _update(self, item_id: str, label: str, done: int, total: int) -> None:
        if self.printer is not None:
            self.printer.update_point(item_id, label, done, total)


def run_point(
    params: ModelParams,
    k: int,
    trials: int,
    seed: Seed,
    *,
    workers: int = 1,
    keep_trials: bool = False,
) -> PointResult:
    with ExperimentManager(workers=workers) as manager:
        return manager.run_point(params, k, trials, seed, keep_trials=keep_trials)


def sweep(
    axis: Axis,
    values: Sequence[float],
    base: ModelParams,
    k: int,
    trials: int,
    seed: Seed,
    *,
    workers: int = 1,
    shared_seeds: bool = False,
) -> list[SweepRow]:
    with ExperimentManager(workers=workers) as manager:
        return manager.sweep(axis, values, base, k, trials, seed, shared_seeds=shared_seeds)


def sweep_alpha(
    alphas: Sequence[float],
    base: ModelParams,
    k: int,
    trials: int,
    seed: Seed,
    *,
    workers: int = 1,
    shared_seeds: bool = False,
) -> list[SweepRow]:
    with ExperimentManager(workers=workers) as manager:
        return manager.sweep_alpha(alphas, base, k, trials, seed, shared_seeds=shared_seeds)


def _emit(text: str, destination: str | Path | TextIO) -> None:
    if isinstance(destination, (str, Path)):
        try:
            Path(destination).write_text(text, encoding="utf-8", newline="\n")
        except OSError as e:
            raise ResultsWriteError(str(destination), e) from e
        return
    try:
        destination.write(text)
    except OSError as e:
        raise ResultsWriteError(getattr(destination, "name", "<stream>"), e) from e


def format_csv(rows: Sequence[SweepRow]) -> str:
    frame = pd.DataFrame([row.csv_record() for row in rows], columns=CSV_COLUMNS)
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def write_csv(rows: Sequence[SweepRow], destination: str | Path | TextIO) -> None:
    """Write rows with the header in ``CSV_COLUMNS``; floats carry 17 significant digits."""
    _emit(format_csv(rows), destination)


def _optional(value: object) -> object | None:
    if isinstance(value, np.generic):
        value = value.item()
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def read_csv(source: str | Path | TextIO) -> list[SweepRow]:
    frame = pd.read_csv(source, float_precision="round_trip", dtype={"axis": str, "status": str})
    rows: list[SweepRow] = []
    for record in frame.to_dict(orient="records"):
        trials = int(record["trials"])

        def count(column: str) -> int:
            rate = _optional(record[column])
            return 0 if rate is None else round(float(rate) * trials)

        p_kconn, p_mindeg = count("p_kconn"), count("p_mindeg")
        rows.append(
            SweepRow(
                axis=record["axis"],
                value=_optional(record["value"]),
                n=int(record["n"]),
                K=int(record["K"]),
                P=int(record["P"]),
                q=int(record["q"]),
                p=_optional(record["p"]),
                k=int(record["k"]),
                trials=trials,
                t=_optional(record["t"]),
                alpha=_optional(record["alpha"]),
                kconn_count=p_kconn,
                mindeg_count=p_mindeg,
                f_count=p_mindeg - p_kconn,
                status=record["status"],
            )
        )
    return rows


def format_trials_csv(records: Sequence[TrialRecord]) -> str:
    frame = pd.DataFrame(
        [
            {
                "trial": r.trial_index,
                "min_degree": r.report.min_degree,
                "kappa": r.report.kappa,
                "k_connected": r.report.k_connected,
                "f_event": r.report.f_event,
                "edge_count": r.edge_count,
            }
            for r in records
        ],
        columns=TRIAL_COLUMNS,
    )
    return frame.to_csv(index=False, lineterminator="\n")


def write_trials_csv(records: Sequence[TrialRecord], destination: str | Path | TextIO) -> None:
    _emit(format_trials_csv(records), destination)
