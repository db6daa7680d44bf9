"""Seeded Monte Carlo oracle for the two-stage validation pipeline.

Each trial synthesizes a patch population, pushes it through the screener and
validator as independent Bernoulli filters with constant per-item latencies,
and records true-patch and survivor counts.  The closed forms in
:mod:`pipegate.bounds` are expectations of exactly this process, so agreement
within sampling error is the acceptance oracle for the whole model.

Reproducibility contract: every trial draws from its own Philox counter-based
stream keyed by (seed, trial index, pipeline), so results are bit-identical
for a fixed (seed, config) no matter how many workers execute the trials or
in which order.  The generator identity (numpy Philox, 3 uniform variates per
item in label / screener / validator order) is part of the external contract;
changing it invalidates golden outputs.

Within a trial the two filters share nothing, but a single item's screener
draw is a common random number across configs: raising the screener TPR can
only turn rejections into passes, never the reverse (monotone coupling).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pipegate.bounds import (
    VERDICT_CONVENIENT,
    VERDICT_NOT_CONVENIENT,
)
from pipegate.metrics import MetricsError, RateTriple, _check_unit

__all__ = [
    "SimConfig",
    "Stat",
    "PipelineSamples",
    "SimOutcome",
    "run_baseline",
    "run_augmented",
    "compare",
    "survivor_precision_probe",
    "VERDICT_INCONCLUSIVE",
    "PRECISION_AS_PUBLISHED",
    "PRECISION_CONSISTENT",
]

VERDICT_INCONCLUSIVE = "inconclusive"

PRECISION_AS_PUBLISHED = "as-published"
PRECISION_CONSISTENT = "prevalence-consistent"

_BASELINE_STREAM = 0
_AUGMENTED_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    """Inputs for one simulated scenario.

    ``screener`` carries the screener-side rates (tpr = R_M, fpr = Far_M);
    the validator's FPR defaults to 0 because the analytic model never uses
    it, but a leaky test suite can be modelled by raising it.
    """

    pi: float
    n: int
    delta_n: int
    screener: RateTriple
    tau_m: float
    tau_v: float
    validator: RateTriple = field(default=RateTriple(tpr=1.0, fpr=0.0))
    trials: int = 100
    seed: int = 0
    precision_mode: str = PRECISION_AS_PUBLISHED

    def __post_init__(self) -> None:
        _check_unit("pi", self.pi, lo_open=True, hi_open=True)
        if self.n <= 0:
            raise MetricsError(f"n must be > 0, got {self.n}")
        if self.delta_n < 0:
            raise MetricsError(f"delta_n must be >= 0, got {self.delta_n}")
        if self.tau_m < 0 or self.tau_v < 0:
            raise MetricsError("latencies must be >= 0")
        if self.trials < 1:
            raise MetricsError(f"trials must be >= 1, got {self.trials}")
        if not (0 <= self.seed < 2**64):
            raise MetricsError("seed must fit in 64 bits")
        if self.precision_mode not in (PRECISION_AS_PUBLISHED, PRECISION_CONSISTENT):
            raise MetricsError(f"unknown precision_mode: {self.precision_mode!r}")

    @property
    def n_total(self) -> int:
        return self.n + self.delta_n


@dataclass(frozen=True)
class Stat:
    """Sample mean and standard error over trials."""

    mean: float
    se: float


@dataclass(frozen=True)
class PipelineSamples:
    """Per-trial observations for one pipeline variant.

    ``survivors`` and ``good_survivors`` count the screener's output and are
    absent (None) for the baseline pipeline.
    """

    tp: np.ndarray
    time: np.ndarray
    survivors: np.ndarray | None = None
    good_survivors: np.ndarray | None = None

    def tp_stat(self) -> Stat:
        return _summarize(self.tp)

    def time_stat(self) -> Stat:
        return _summarize(self.time)

    def survivors_stat(self) -> Stat:
        if self.survivors is None:
            raise MetricsError("baseline pipeline has no screener survivors")
        return _summarize(self.survivors)


@dataclass(frozen=True)
class SimOutcome:
    baseline_tp: Stat
    augmented_tp: Stat
    baseline_time: Stat
    augmented_time: Stat
    survivors: Stat
    verdict: str
    trials: int


def _summarize(samples: np.ndarray) -> Stat:
    # np.mean/np.std use pairwise summation: order-insensitive aggregation.
    n = samples.size
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Stat(mean=mean, se=se)


def _trial_rng(seed: int, trial: int, stream: int) -> np.random.Generator:
    key = np.array([seed, (trial << 1) | stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _baseline_trial(cfg: SimConfig, trial: int) -> tuple[float, float]:
    rng = _trial_rng(cfg.seed, trial, _BASELINE_STREAM)
    good = rng.random(cfg.n) < cfg.pi
    u_v = rng.random(cfg.n)
    passes = np.where(good, u_v < cfg.validator.tpr, u_v < cfg.validator.fpr)
    tp = float(np.count_nonzero(passes & good))
    return tp, cfg.n * cfg.tau_v


def _augmented_trial(cfg: SimConfig, trial: int) -> tuple[float, float, float, float]:
    rng = _trial_rng(cfg.seed, trial, _AUGMENTED_STREAM)
    m = cfg.n_total
    good = rng.random(m) < cfg.pi
    u_m = rng.random(m)
    u_v = rng.random(m)
    pass_m = np.where(good, u_m < cfg.screener.tpr, u_m < cfg.screener.fpr)
    survivors = float(np.count_nonzero(pass_m))
    good_survivors = float(np.count_nonzero(pass_m & good))
    pass_v = np.where(good, u_v < cfg.validator.tpr, u_v < cfg.validator.fpr)
    tp = float(np.count_nonzero(pass_m & good & pass_v))
    time = cfg.tau_m * m + cfg.tau_v * survivors
    return tp, time, survivors, good_survivors


def _map_trials(cfg: SimConfig, fn, width: int, workers: int) -> np.ndarray:
    """Run one function per trial into a (width, trials) array.

    Results land at their trial index, so the output is identical for any
    worker count or completion order.
    """
    out = np.empty((width, cfg.trials), dtype=np.float64)

    def work(t: int) -> None:
        out[:, t] = fn(cfg, t)

    if workers <= 1:
        for t in range(cfg.trials):
            work(t)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(cfg.trials)))
    return out


def run_baseline(cfg: SimConfig, workers: int = 1) -> PipelineSamples:
    """Validator-only pipeline over n patches, one row per trial."""
    res = _map_trials(cfg, _baseline_trial, 2, workers)
    return PipelineSamples(tp=res[0], time=res[1])


def run_augmented(cfg: SimConfig, workers: int = 1) -> PipelineSamples:
    """Screener-then-validator pipeline over n + delta_n patches."""
    res = _map_trials(cfg, _augmented_trial, 4, workers)
    return PipelineSamples(tp=res[0], time=res[1], survivors=res[2], good_survivors=res[3])


def _margin_verdict(base: PipelineSamples, aug: PipelineSamples) -> str:
    """Empirical convenience verdict with a 3-standard-error guard band.

    Margins within 3 combined SEs of zero cannot be distinguished from the
    boundary, so the verdict is inconclusive rather than a coin flip.
    """
    b_tp, a_tp = base.tp_stat(), aug.tp_stat()
    b_t, a_t = base.time_stat(), aug.time_stat()
    tp_margin = a_tp.mean - b_tp.mean
    tp_band = 3.0 * float(np.hypot(a_tp.se, b_tp.se))
    time_margin = b_t.mean - a_t.mean  # positive = time saved
    time_band = 3.0 * float(np.hypot(a_t.se, b_t.se))
    if tp_margin < -tp_band or time_margin < -time_band:
        return VERDICT_NOT_CONVENIENT
    if tp_margin > tp_band and time_margin > time_band:
        return VERDICT_CONVENIENT
    return VERDICT_INCONCLUSIVE


def compare(cfg: SimConfig, workers: int = 1) -> SimOutcome:
    """Run both pipelines on independent streams and compare them."""
    base = run_baseline(cfg, workers=workers)
    aug = run_augmented(cfg, workers=workers)
    return SimOutcome(
        baseline_tp=base.tp_stat(),
        augmented_tp=aug.tp_stat(),
        baseline_time=base.time_stat(),
        augmented_time=aug.time_stat(),
        survivors=aug.survivors_stat(),
        verdict=_margin_verdict(base, aug),
        trials=cfg.trials,
    )


def survivor_precision_probe(cfg: SimConfig, workers: int = 1) -> Stat:
    """Empirical screener precision at the generator prevalence.

    Quantifies the gap between the as-published screener precision and the
    prevalence-consistent value pi*tpr / (pi*tpr + (1-pi)*fpr): the probe
    converges on the latter.
    """
    aug = run_augmented(cfg, workers=workers)
    assert aug.survivors is not None and aug.good_survivors is not None
    with np.errstate(invalid="ignore"):
        per_trial = np.divide(
            aug.good_survivors,
            aug.survivors,
            out=np.full_like(aug.survivors, np.nan),
            where=aug.survivors > 0,
        )
    valid = per_trial[~np.isnan(per_trial)]
    if valid.size == 0:
        raise MetricsError("screener passed nothing in every trial; precision undefined")
    return _summarize(valid)
