"""Monte Carlo runner for modulation-estimation systems.

For every block length ``n`` and probe point ``u`` the runner simulates
``trials_per_probe`` transmissions, marks outages, and reports

* the weak-noise cost: the largest, over probes, of the mean cost over
  non-outage trials;
* the empirical outage level ``delta_n``: the largest outage fraction over
  probes (plus a Wilson 95% upper bound, used wherever a valid bound is
  needed);
* for 2-D coded systems, the finite-n converse bound at the measured
  outage level.

Noise for trial ``t`` of probe ``p`` at block length ``n`` is keyed by
``(master_seed, n)`` with stream ``p`` and draw ``t``, so results do not
depend on the number of workers or on execution order. Trials are processed
in fixed blocks of :data:`TRIAL_BLOCK` so that every floating-point
operation sees the same operand shapes regardless of scheduling.
"""
from __future__ import annotations

import dataclasses
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from . import rng
from .channel import NoiseModel, transmit_many
from .errors import AllOutage, CodebookTooLarge, DimensionMismatch, NonpositiveCost
from .estimate import (
    dequantize_many,
    linear_correlator_estimate_many,
    ml_grid_estimate_many,
    nearest_codeword,
)
from .modulate import ModulatorSpec, codebook_for, linear_direction, modulate_many, quantize
from .scan import diagonal_scan
from .theory import (
    ChannelSpec,
    ErrorCostSpec,
    check_assumption_a1,
    finite_n_converse_bound,
    optimal_rates,
    weak_noise_exponent,
)

MAX_CODEBOOK = 2**20
TRIAL_BLOCK = 256
WILSON_LEVEL = 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    ecf: ErrorCostSpec
    channel: ChannelSpec
    kind: str = "quantize_and_code"
    block_lengths: tuple[int, ...] = (8,)
    trials_per_probe: int = 100
    levels: tuple[int, ...] | None = None  # None: derive from the optimal rates
    rate_fraction: float = 1.0
    probes: tuple[tuple[float, ...], ...] = ()
    random_probes: int = 32
    corner: int = 2
    master_seed: int = 0
    codebook_seed: int | None = None
    workers: int = 1
    outage_radius: float = 0.1
    turns: float = 1.0
    estimator_grid: int = 2049
    scan_levels: tuple[int, int] | None = None
    converse_delta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "block_lengths", tuple(int(n) for n in self.block_lengths))
        object.__setattr__(self, "probes", tuple(tuple(float(c) for c in p) for p in self.probes))
        if self.levels is not None:
            object.__setattr__(self, "levels", tuple(int(m) for m in self.levels))
        if self.scan_levels is not None:
            object.__setattr__(self, "scan_levels", tuple(int(m) for m in self.scan_levels))
        ns = self.block_lengths
        if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
            raise ValueError("block_lengths must be a nonempty strictly increasing list of positive integers")
        if self.trials_per_probe < 1:
            raise ValueError("trials_per_probe must be >= 1")
        if not 0 < self.rate_fraction <= 1:
            raise ValueError("rate_fraction must be in (0, 1]")
        if self.random_probes < 0 or self.corner < 0:
            raise ValueError("probe counts must be nonnegative")
        if not self.probes and self.random_probes == 0 and self.corner == 0:
            raise ValueError("probe set is empty")
        if any(len(p) != self.d for p in self.probes):
            raise DimensionMismatch(f"probe points must have {self.d} components")
        if self.converse_delta is not None and not 0 <= self.converse_delta <= 1:
            raise ValueError("converse_delta must be in [0, 1]")

    @property
    def d(self) -> int:
        return self.ecf.d

    def with_(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def levels_at(self, n: int) -> tuple[int, ...]:
        """Quantizer levels at block length n: ``max(1, round(exp(n R_i* rate_fraction)))``."""
        if self.levels is not None:
            return self.levels
        rates = optimal_rates(self.ecf, self.channel).rates
        return tuple(max(1, round(math.exp(n * r * self.rate_fraction))) for r in rates)

    def modulator_at(self, n: int) -> ModulatorSpec:
        seed = self.codebook_seed if self.codebook_seed is not None else self.master_seed
        levels = self.levels_at(n) if self.kind == "quantize_and_code" else None
        if levels is not None and math.prod(levels) > MAX_CODEBOOK:
            raise CodebookTooLarge(f"{math.prod(levels)} codewords at n={n} exceeds {MAX_CODEBOOK}")
        return ModulatorSpec(self.kind, n, self.d, self.channel.P, levels,
                             rng.derive_key(seed, n), self.turns)

    def probe_points(self, n: int) -> np.ndarray:
        """Explicit probes, then corner boundary points, then seeded random interior points."""
        pts = [np.asarray(self.probes, dtype=float).reshape(-1, self.d)]
        if self.corner:
            if self.kind == "quantize_and_code":
                axes = [np.arange(min(self.corner, m - 1) + 1) / m for m in self.levels_at(n)]
            else:
                axes = [np.array([0.0, 1.0])] * self.d
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
            pts.append(grid)
        if self.random_probes:
            g = np.random.default_rng(rng.derive_key(self.master_seed, 0x9E37))
            pts.append(g.uniform(0.0, 1.0, size=(self.random_probes, self.d)))
        return np.concatenate(pts, axis=0)


@dataclass(frozen=True)
class TrialRecord:
    n: int
    probe: int
    trial: int
    u: tuple[float, ...]
    u_hat: tuple[float, ...]
    outage: bool
    cost: float


@dataclass
class TrialTable:
    """Columnar trial log, canonically sorted by (n, probe, trial)."""

    n: np.ndarray
    probe: np.ndarray
    trial: np.ndarray
    u: np.ndarray
    u_hat: np.ndarray
    outage: np.ndarray
    cost: np.ndarray

    def __len__(self):
        return len(self.n)

    @classmethod
    def concat(cls, parts: Sequence["TrialTable"]) -> "TrialTable":
        cols = {f.name: np.concatenate([getattr(p, f.name) for p in parts]) for f in dataclasses.fields(cls)}
        table = cls(**cols)
        order = np.lexsort((table.trial, table.probe, table.n))
        return cls(**{k: v[order] for k, v in cols.items()})

    def records(self) -> Iterator[TrialRecord]:
        for k in range(len(self)):
            yield TrialRecord(int(self.n[k]), int(self.probe[k]), int(self.trial[k]),
                              tuple(self.u[k].tolist()), tuple(self.u_hat[k].tolist()),
                              bool(self.outage[k]), float(self.cost[k]))

    def select(self, mask) -> "TrialTable":
        return TrialTable(**{f.name: getattr(self, f.name)[mask] for f in dataclasses.fields(self)})


@dataclass
class BlockSummary:
    n: int
    levels: tuple[int, ...] | None
    sup_cost: float
    worst_probe: int
    delta_n: float
    delta_n_upper: float
    trials: int
    probe_costs: np.ndarray  # conditional mean cost per probe (nan if all outage)
    probe_outage: np.ndarray  # outage fraction per probe
    nonoutage_counts: np.ndarray
    converse_bound: float | None = None
    locus_length: float | None = None
    flagged_probes: list[int] = field(default_factory=list)
    pooled_cost: float = math.nan  # mean cost over all non-outage trials of all probes
    pooled_outage: float = math.nan  # outage fraction over all trials


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float


@dataclass
class ExperimentSummary:
    blocks: list[BlockSummary]
    exponent_theory: float
    exponent_fit: ExponentFit | None

    def block(self, n: int) -> BlockSummary:
        return next(b for b in self.blocks if b.n == n)


def _simulate_block(config: ExperimentConfig, spec: ModulatorSpec, ecf: ErrorCostSpec,
                    probe: int, u: np.ndarray, lo: int, hi: int) -> TrialTable:
    n = spec.n
    noise = NoiseModel(config.channel.sigma2, rng.derive_key(config.master_seed, n), probe)
    draws = np.arange(lo, hi)
    x = modulate_many(spec, u[None, :])[0]
    Y = transmit_many(x, noise, draws)
    if spec.kind == "quantize_and_code":
        cb = codebook_for(spec)
        truth = cb.message([int(quantize(u[i], m)[0]) for i, m in enumerate(spec.levels)])
        decoded = nearest_codeword(Y, cb)
        u_hat = dequantize_many(decoded, cb)
        outage = decoded != truth
    else:
        if spec.kind == "linear":
            u_hat = linear_correlator_estimate_many(Y, spec.P, linear_direction(n))
        else:
            grid = np.linspace(0.0, 1.0, config.estimator_grid)
            u_hat = ml_grid_estimate_many(Y, spec, grid)
        outage = np.max(np.abs(u_hat - u[None, :]), axis=1) > config.outage_radius
    k = len(draws)
    return TrialTable(
        n=np.full(k, n, dtype=np.int64),
        probe=np.full(k, probe, dtype=np.int64),
        trial=draws.astype(np.int64),
        u=np.broadcast_to(u, (k, len(u))).copy(),
        u_hat=np.asarray(u_hat, dtype=float).reshape(k, -1),
        outage=np.asarray(outage, dtype=bool),
        cost=ecf.cost(u_hat - u[None, :]),
    )


def _wilson_upper(k: int, total: int) -> float:
    return float(stats.binomtest(int(k), int(total)).proportion_ci(WILSON_LEVEL, method="wilson").high)


def scan_locus_length(spec: ModulatorSpec, M_u: int, M_v: int) -> float:
    """Summed locus length along the diagonals of the ``M_u x M_v`` scan grid.

    Roll-over steps are excluded; each diagonal contributes the polyline
    through the signals of its consecutive grid points.
    """
    scan = diagonal_scan(M_u, M_v)
    x = modulate_many(spec, scan.order)
    steps = np.linalg.norm(np.diff(x, axis=0), axis=1)
    return math.fsum(steps[k] for k in scan.kept_steps)


def summarize_block(config: ExperimentConfig, spec: ModulatorSpec, table: TrialTable,
                    num_probes: int) -> BlockSummary:
    """Per-n summary from raw trials.

    Means are correctly rounded (exact rational arithmetic), so they do not
    depend on trial order and a probe whose costs are all equal reports that
    value exactly.
    """
    n = spec.n
    costs = np.full(num_probes, np.nan)
    frac = np.zeros(num_probes)
    upper = np.zeros(num_probes)
    counts = np.zeros(num_probes, dtype=np.int64)
    for p in range(num_probes):
        mask = table.probe == p
        out = table.outage[mask]
        good = table.cost[mask][~out]
        counts[p] = good.size
        frac[p] = out.sum() / out.size
        upper[p] = _wilson_upper(out.sum(), out.size)
        if good.size:
            costs[p] = statistics.mean(good.tolist())
    flagged = [int(p) for p in np.flatnonzero(counts == 0)]
    finite = np.where(np.isnan(costs), -np.inf, costs)
    worst = int(np.argmax(finite))
    summary = BlockSummary(
        n=n, levels=spec.levels, sup_cost=float(finite[worst]) if not flagged else math.nan,
        worst_probe=worst, delta_n=float(frac.max()), delta_n_upper=float(upper.max()),
        trials=len(table), probe_costs=costs, probe_outage=frac, nonoutage_counts=counts,
        flagged_probes=flagged,
        pooled_cost=statistics.mean(table.cost[~table.outage].tolist()) if counts.sum() else math.nan,
        pooled_outage=float(table.outage.sum() / len(table)),
    )
    if config.d == 2 and spec.kind == "quantize_and_code":
        M_u, M_v = config.scan_levels or spec.levels
        delta = config.converse_delta if config.converse_delta is not None else summary.delta_n_upper
        length = scan_locus_length(spec, M_u, M_v)
        summary.locus_length = length
        summary.converse_bound = finite_n_converse_bound(
            config.ecf.with_n(n), M_u, M_v, config.channel.sigma, length, delta)
    return summary


def estimate_exponent(points) -> ExponentFit:
    """Least-squares slope of ``-ln(cost)`` against ``n``."""
    pts = [(float(n), float(c)) for n, c in points]
    if len(pts) < 2:
        raise ValueError("need at least two (n, cost) points")
    if any(not c > 0 for _, c in pts):
        raise NonpositiveCost("costs must be positive to take logs")
    ns = np.array([n for n, _ in pts])
    y = -np.log([c for _, c in pts])
    if len(pts) == 2:
        slope = (y[1] - y[0]) / (ns[1] - ns[0])
        return ExponentFit(float(slope), float(y[0] - slope * ns[0]), 0.0)
    fit = stats.linregress(ns, y)
    return ExponentFit(float(fit.slope), float(fit.intercept), float(fit.stderr))


def theory_exponent(config: ExperimentConfig) -> float:
    if not check_assumption_a1(config.ecf, config.channel):
        return math.nan
    return weak_noise_exponent(config.ecf, config.channel)


def run_experiment(config: ExperimentConfig) -> tuple[ExperimentSummary, TrialTable]:
    """Simulate every (n, probe, trial) and summarize per block length.

    Raises :class:`AllOutage` (with the summary attached) when some probe had
    no non-outage trial.
    """
    specs = {n: config.modulator_at(n) for n in config.block_lengths}
    probes = {n: config.probe_points(n) for n in config.block_lengths}
    for spec in specs.values():
        if spec.kind == "quantize_and_code":
            codebook_for(spec)  # build once, before any worker touches it
    T = config.trials_per_probe
    tasks = [
        (n, p, lo, min(lo + TRIAL_BLOCK, T))
        for n in config.block_lengths
        for p in range(len(probes[n]))
        for lo in range(0, T, TRIAL_BLOCK)
    ]

    def run(task):
        n, p, lo, hi = task
        return _simulate_block(config, specs[n], config.ecf.with_n(n), p, probes[n][p], lo, hi)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    table = TrialTable.concat(parts)

    blocks = [summarize_block(config, specs[n], table.select(table.n == n), len(probes[n]))
              for n in config.block_lengths]
    fit_points = [(b.n, b.sup_cost) for b in blocks if b.sup_cost > 0]
    fit = estimate_exponent(fit_points) if len(fit_points) >= 2 else None
    summary = ExperimentSummary(blocks, theory_exponent(config), fit)
    flagged = {b.n: b.flagged_probes for b in blocks if b.flagged_probes}
    if flagged:
        raise AllOutage(f"probes with no non-outage trial: {flagged}", summary, table)
    return summary, table


@dataclass
class SweepRow:
    gamma: float
    sup_cost: float
    delta_n: float
    exponent_theory: float
    converse_bound: float | None
    pooled_cost: float = math.nan
    pooled_outage: float = math.nan


@dataclass
class SweepResult:
    n: int
    rows: list[SweepRow]
    cost_inversions: int  # steps where the weak-noise cost rose with gamma
    outage_inversions: int  # steps where the outage level rose with gamma


def count_rises(values) -> int:
    v = [x for x in values if not math.isnan(x)]
    return sum(1 for a, b in zip(v, v[1:]) if b > a)


def snr_sweep(config: ExperimentConfig, gammas: Sequence[float]) -> SweepResult:
    """Rerun ``config`` at its largest block length for each SNR.

    Noise power changes with SNR while signal power stays fixed, and the
    underlying standard-normal draws are shared across SNRs.
    """
    if not len(gammas):
        raise ValueError("gamma list is empty")
    n = config.block_lengths[-1]
    rows = []
    for gamma in gammas:
        if gamma == 0:
            ecf = config.ecf
            theory = math.fsum(ecf.a) / ecf.d if check_assumption_a1(ecf, 0.0) else math.nan
            rows.append(SweepRow(0.0, math.nan, math.nan, theory, None))
            continue
        cfg = config.with_(channel=ChannelSpec.from_gamma(gamma, config.channel.P), block_lengths=(n,))
        summary, _ = run_experiment(cfg)
        b = summary.blocks[0]
        rows.append(SweepRow(float(gamma), b.sup_cost, b.delta_n, summary.exponent_theory, b.converse_bound,
                             b.pooled_cost, b.pooled_outage))
    order = np.argsort([r.gamma for r in rows], kind="stable")
    ordered = [rows[i] for i in order]
    return SweepResult(
        n, rows,
        cost_inversions=count_rises([r.sup_cost for r in ordered]),
        outage_inversions=count_rises([r.delta_n for r in ordered]),
    )


@dataclass(frozen=True)
class ConverseCheck:
    n: int
    bound: float
    measured_sup_cost: float
    delta_n: float
    locus_length: float

    @property
    def satisfied(self) -> bool:
        return self.measured_sup_cost >= self.bound


def converse_check(config: ExperimentConfig) -> list[ConverseCheck]:
    """Compare measured weak-noise cost against the converse bound, per block length."""
    if config.d != 2 or config.kind != "quantize_and_code":
        raise DimensionMismatch("the converse check needs a 2-D quantize-and-code system")
    summary, _ = run_experiment(config)
    out = []
    for b in summary.blocks:
        delta = config.converse_delta if config.converse_delta is not None else b.delta_n_upper
        out.append(ConverseCheck(b.n, b.converse_bound, b.sup_cost, delta, b.locus_length))
    return out
