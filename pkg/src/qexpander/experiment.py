"""Seeded Monte Carlo campaigns and bound tables.

Trials are split into fixed-size chunks by trial index.  Each chunk returns
integer counters and float sums that are merged in chunk order, so results
do not depend on how many workers ran them or in which order they finished.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from qexpander import bits
from qexpander.errors import DomainError, QExpanderError
from qexpander.graphs import ExpansionParams
from qexpander.hgp import CssCode, build_code, load_bundle
from qexpander.noise import NoiseSpec, stream_rng
from qexpander.percolation import bound_iid, bound_ls, p_iid, p_ls
from qexpander.ssf import DecoderParams, build_flip_catalog, decode_ssf
from qexpander.stats import wilson_interval

CONFIG_SCHEMA = 1
RESULT_SCHEMA = 1
CHUNK = 250
CHANNELS = ("independent", "depolarizing")


@dataclass(frozen=True)
class CodeSource:
    n_a: int = 8
    n_b: int = 6
    d_a: int = 3
    d_b: int = 4
    seed: int = 0
    bundle: Optional[str] = None
    no_4cycles: bool = False

    def build(self) -> CssCode:
        if self.bundle:
            return load_bundle(self.bundle)
        return build_code(self.n_a, self.n_b, self.d_a, self.d_b, self.seed, no_4cycles=self.no_4cycles)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    code: CodeSource = field(default_factory=CodeSource)
    beta: str = "1/4"
    mode: str = "alg2"
    channel: str = "independent"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    p_grid: tuple[float, ...] = (0.01,)
    trials: int = 1000
    threads: int = 1
    out: Optional[str] = None
    schema_version: int = CONFIG_SCHEMA

    def __post_init__(self):
        if self.schema_version != CONFIG_SCHEMA:
            raise DomainError(f"config schema {self.schema_version} not supported")
        if self.seed is None or int(self.seed) < 0:
            raise DomainError("a nonnegative base seed is required")
        if self.channel not in CHANNELS:
            raise DomainError(f"channel must be one of {CHANNELS}")
        if self.noise.kind != "iid":
            raise DomainError("decoding campaigns support iid noise only")
        if self.trials < 0 or self.threads < 1:
            raise DomainError("trials must be >= 0 and threads >= 1")
        if not self.p_grid:
            raise DomainError("p_grid must be nonempty")
        for p in self.p_grid:
            if not 0 <= p < 1:
                raise DomainError("grid probabilities must lie in [0, 1)")
        self.decoder_params()

    def decoder_params(self) -> DecoderParams:
        return DecoderParams(beta=Fraction(self.beta), mode=self.mode)

    def to_json(self) -> dict:
        d = asdict(self)
        d["p_grid"] = list(self.p_grid)
        return d

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        if "code" in data:
            data["code"] = CodeSource(**data["code"])
        if "noise" in data:
            data["noise"] = NoiseSpec.from_json(data["noise"])
        if "p_grid" in data:
            data["p_grid"] = tuple(float(p) for p in data["p_grid"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass
class ResultRow:
    code_id: str
    n: int
    k: int
    p: float
    trials: int
    x_failures: int
    z_failures: int
    either_failures: int
    rate: float
    ci_low: float
    ci_high: float
    mean_flips: float
    mean_support_ratio: float
    seed: int

    def __post_init__(self):
        if self.either_failures > self.x_failures + self.z_failures:
            raise QExpanderError("either_failures exceeds x_failures + z_failures")


COLUMNS = [f.name for f in fields(ResultRow)]


# --------------------------------------------------------------------------
# trial chunks

_STATE: dict = {}


def _prepare(config_json: dict) -> None:
    cfg = ExperimentConfig.from_json(config_json)
    code = cfg.code.build()
    _STATE.clear()
    _STATE.update(
        cfg=cfg,
        code=code,
        cats={s: build_flip_catalog(code, s) for s in "XZ"},
        params=cfg.decoder_params(),
    )


def _sample_pair(rng: np.random.Generator, n: int, p: float, channel: str) -> tuple[int, int]:
    if channel == "independent":
        ex = rng.random(n) < p
        ez = rng.random(n) < p
    else:
        # Pauli per qubit: X, Y, Z each with probability p/3
        u = rng.random(n)
        ex = u < 2 * p / 3  # X or Y
        ez = (u >= p / 3) & (u < p)  # Y or Z
    return bits.from_bool_array(ex), bits.from_bool_array(ez)


def _run_chunk(task: tuple[int, int, int]) -> tuple:
    p_index, start, stop = task
    cfg: ExperimentConfig = _STATE["cfg"]
    code: CssCode = _STATE["code"]
    cats = _STATE["cats"]
    params = _STATE["params"]
    p = cfg.p_grid[p_index]
    xf = zf = ef = flips = 0
    ratio_sum = 0.0
    ratio_n = 0
    for trial in range(start, stop):
        rng = stream_rng(cfg.seed, trial, f"pauli:{p_index}")
        ex, ez = _sample_pair(rng, code.n, p, cfg.channel)
        bad = []
        for side, e in (("X", ex), ("Z", ez)):
            cat = cats[side]
            run = decode_ssf(cat, cat.side.syndrome(e), params)
            ok = run.converged and cat.side.equivalent(e, run.e_hat)
            bad.append(not ok)
            flips += run.n_flips
            if e:
                ratio_sum += run.support(e).bit_count() / e.bit_count()
                ratio_n += 1
        xf += bad[0]
        zf += bad[1]
        ef += bad[0] or bad[1]
    return p_index, start, xf, zf, ef, flips, ratio_sum, ratio_n


def _tasks(cfg: ExperimentConfig, p_index: int) -> list[tuple[int, int, int]]:
    return [(p_index, s, min(s + CHUNK, cfg.trials)) for s in range(0, cfg.trials, CHUNK)]


def _merge(cfg: ExperimentConfig, code: CssCode, p_index: int, parts: list[tuple]) -> ResultRow:
    parts = sorted(parts, key=lambda r: r[1])
    xf = sum(r[2] for r in parts)
    zf = sum(r[3] for r in parts)
    ef = sum(r[4] for r in parts)
    flips = sum(r[5] for r in parts)
    ratio_sum = 0.0
    for r in parts:
        ratio_sum += r[6]
    ratio_n = sum(r[7] for r in parts)
    n = cfg.trials
    lo, hi = wilson_interval(ef, n, 0.95)
    return ResultRow(
        code_id=code.code_id, n=code.n, k=code.k, p=cfg.p_grid[p_index], trials=n,
        x_failures=xf, z_failures=zf, either_failures=ef,
        rate=ef / n if n else 0.0, ci_low=lo, ci_high=hi,
        mean_flips=flips / n if n else 0.0,
        mean_support_ratio=ratio_sum / ratio_n if ratio_n else 0.0,
        seed=cfg.seed,
    )


def run_experiment(cfg: ExperimentConfig) -> Iterator[tuple[ResultRow, float]]:
    """Yield one ``(row, wall_seconds)`` per grid point, in grid order."""
    _prepare(cfg.to_json())
    code = _STATE["code"]
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.threads, initializer=_prepare, initargs=(cfg.to_json(),))
    try:
        for i in range(len(cfg.p_grid)):
            t0 = time.perf_counter()
            tasks = _tasks(cfg, i)
            parts = list(pool.map(_run_chunk, tasks)) if pool else [_run_chunk(t) for t in tasks]
            yield _merge(cfg, code, i, parts), time.perf_counter() - t0
    finally:
        if pool is not None:
            pool.shutdown()


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


class ResultWriter:
    """Append-only CSV with a schema header comment and a completion footer."""

    def __init__(self, path, columns: Sequence[str] = COLUMNS, schema: int = RESULT_SCHEMA):
        self.path = Path(path)
        self.columns = list(columns)
        self.rows = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._fh.write(f"# qexpander schema={schema} columns={','.join(self.columns)}\n")
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(self.columns)
        self._fh.flush()

    def write(self, row) -> None:
        values = asdict(row) if hasattr(row, "__dataclass_fields__") else row
        self._csv.writerow([_fmt(values.get(c, "")) for c in self.columns])
        self.rows += 1
        self._fh.flush()

    def close(self) -> None:
        self._fh.write(f"# complete rows={self.rows}\n")
        self._fh.close()


def read_results(path) -> tuple[list[dict], bool]:
    """Rows of a results CSV and whether its completion footer is present."""
    lines = Path(path).read_text().splitlines()
    complete = bool(lines) and lines[-1].startswith("# complete rows=")
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    if complete and int(lines[-1].split("=")[1]) != len(rows):
        complete = False
    return rows, complete


def csv_body(path) -> str:
    """The CSV without comment lines, for byte comparisons."""
    return "".join(ln for ln in Path(path).read_text().splitlines(True) if not ln.startswith("#"))


def simulate_to_dir(cfg: ExperimentConfig, out) -> tuple[Path, list[ResultRow]]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    writer = ResultWriter(out / "results.csv")
    rows, walls = [], []
    try:
        for row, wall in run_experiment(cfg):
            writer.write(row)
            rows.append(row)
            walls.append(wall)
    finally:
        writer.close() if len(rows) == len(cfg.p_grid) else writer._fh.close()
    sidecar = {"schema_version": RESULT_SCHEMA, "config": cfg.to_json(), "wall_time_s": walls}
    (out / "results.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return out / "results.csv", rows


# --------------------------------------------------------------------------
# bounds


BOUND_COLUMNS = ["d", "alpha", "t", "p", "p_ls", "p_iid", "bound_ls", "bound_iid",
                 "empirical", "ci_low", "ci_high", "trials", "seed", "error"]


def bounds_table(d_grid: Iterable[int], alpha_grid: Iterable[float], p_grid: Iterable[float],
                 t_grid: Iterable[int], n_vertices: int = 1) -> list[dict]:
    """Threshold and tail-bound values for every grid tuple.

    Out-of-domain tuples (``p >= p_ls`` for the local stochastic bound,
    ``q >= 1`` for the independent one) keep the row with an ``error`` tag.
    """
    d_grid, alpha_grid, p_grid, t_grid = list(d_grid), list(alpha_grid), list(p_grid), list(t_grid)
    if not (d_grid and alpha_grid and p_grid and t_grid):
        raise DomainError("all grids must be nonempty")
    rows = []
    for d in d_grid:
        for a in alpha_grid:
            try:
                pl, pi = p_ls(d, a), p_iid(d, a)
            except QExpanderError as exc:
                rows.append({"d": d, "alpha": a, "error": type(exc).__name__})
                continue
            for t in t_grid:
                for p in p_grid:
                    row = {"d": d, "alpha": a, "t": t, "p": p, "p_ls": pl, "p_iid": pi}
                    errs = []
                    try:
                        row["bound_ls"] = bound_ls(n_vertices, p, d, a, t)[0]
                    except QExpanderError as exc:
                        errs.append(f"ls:{type(exc).__name__}")
                    try:
                        row["bound_iid"] = bound_iid(n_vertices, p, d, a, t)
                    except QExpanderError as exc:
                        errs.append(f"iid:{type(exc).__name__}")
                    row["error"] = ";".join(errs)
                    rows.append(row)
    return rows
