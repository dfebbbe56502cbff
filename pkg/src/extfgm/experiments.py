"""Monte Carlo studies of the moment estimators.

Every replication draws from its own substream keyed by
``(seed, size_index, replication)``, and results are gathered in
replication order, so outputs do not depend on the number of workers.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import hashlib
import logging
import os

import numpy as np

from .estimation import (
    confidence_intervals,
    estimate_params,
    plug_in_covariance,
    test_lambda2_zero,
)
from .io import param_label
from .model import CopulaModel
from .params import ParamVector, canonical_order
from .sampling import sample

logger = logging.getLogger(__name__)

CHECKPOINT_EVERY = 100
STUDIES = ("consistency", "coverage", "covariance", "chi2-calibration")


@dataclass(frozen=True, eq=False)
class StudySpec:
    """Configuration of one Monte Carlo study.

    `allow_invalid` permits a coefficient vector that fails the validity
    constraint; sampling then runs the bracketed inversion procedure on the
    (partly negative) density as is. `power` lifts the requirement that the
    chi-square calibration model has a zero second-order block.
    """

    model: ParamVector
    sizes: tuple = (100, 1000, 10000)
    replications: int = 1
    alpha: float = 0.05
    seed: int = 0
    which: str = "consistency"
    allow_invalid: bool = False
    variance: str = "surrogate"
    chi2_mode: str = "null-identity"
    power: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if self.which not in STUDIES:
            raise ValueError(f"unknown study {self.which!r}; choose from {STUDIES}")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.sizes or min(self.sizes) < 2:
            raise ValueError("sample sizes must be at least 2")

    def build_model(self):
        if self.allow_invalid:
            return CopulaModel.unchecked(self.model)
        return CopulaModel(self.model)

    def signature(self):
        text = "|".join(
            str(x)
            for x in (
                self.model.digest(), self.sizes, self.replications, self.alpha,
                self.seed, self.which, self.allow_invalid, self.variance,
                self.chi2_mode,
            )
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class _Task:
    kind: str
    d: int
    values: np.ndarray = field(repr=False)
    allow_invalid: bool
    n: int
    seed: int
    size_index: int
    alpha: float
    variance: str
    chi2_mode: str

    def model(self):
        p = ParamVector(self.d, self.values)
        # StudySpec.build_model has already warned
        return CopulaModel.unchecked(p, quiet=True) if self.allow_invalid else CopulaModel(p)


def _run_task(task, rep):
    m = task.model()
    batch = sample(m, task.n, task.seed, stream=(task.size_index, rep))
    res = estimate_params(batch.rows, variance=task.variance)
    if task.kind == "estimate":
        return res.params_hat.to_flat()
    if task.kind == "coverage":
        lo, hi = confidence_intervals(res, task.alpha)
        truth = m.params.to_flat()
        return ((lo <= truth) & (truth <= hi)).astype(float)
    if task.kind == "chi2":
        out = test_lambda2_zero(res, task.chi2_mode)
        return np.array([out.statistic, out.pvalue])
    raise ValueError(task.kind)


def _run_chunk(task, reps):
    return [_run_task(task, r) for r in reps]


def replicate(task, replications, workers=1, checkpoint=None, signature=""):
    """Run `replications` of `task`, returning a ``(R, width)`` array.

    With `checkpoint` set, completed rows are saved every 100 replications
    and a rerun with the same signature resumes after the last saved row.
    """
    rows = []
    if checkpoint and os.path.exists(checkpoint):
        saved = np.load(checkpoint, allow_pickle=False)
        if str(saved["signature"]) == signature:
            rows = list(saved["rows"])
            logger.info("resuming %s after %d replications", checkpoint, len(rows))
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for start in range(len(rows), replications, CHECKPOINT_EVERY):
            block = list(range(start, min(replications, start + CHECKPOINT_EVERY)))
            if pool is None:
                rows.extend(_run_chunk(task, block))
            else:
                chunks = [block[i::workers] for i in range(workers)]
                parts = list(pool.map(_run_chunk, [task] * workers, chunks))
                ordered = [None] * len(block)
                for i, part in enumerate(parts):
                    ordered[i::workers] = part
                rows.extend(ordered)
            if checkpoint:
                np.savez(checkpoint, rows=np.array(rows), signature=signature)
    finally:
        if pool is not None:
            pool.shutdown()
    return np.array(rows)


def _task(spec, kind, size_index):
    return _Task(
        kind, spec.model.d, spec.model.values, spec.allow_invalid,
        spec.sizes[size_index], spec.seed, size_index, spec.alpha,
        spec.variance, spec.chi2_mode,
    )


def _checkpoint_path(checkpoint, size_index):
    if checkpoint is None:
        return None
    return f"{checkpoint}.n{size_index}.npz"


@dataclass(frozen=True, eq=False)
class StudyTable:
    """Parameter-by-size table; ``values[i, j]`` belongs to parameter ``i`` at size ``j``."""

    title: str
    d: int
    sizes: tuple
    values: np.ndarray
    truth: np.ndarray

    def labels(self):
        return [param_label(k, m, self.d) for k, m in canonical_order(self.d)]


def run_consistency(spec, workers=1):
    """One estimate per sample size from a single seeded draw."""
    spec.build_model()
    cols = []
    for j in range(len(spec.sizes)):
        cols.append(replicate(_task(spec, "estimate", j), 1, workers)[0])
    return StudyTable(
        "estimates", spec.model.d, spec.sizes, np.column_stack(cols), spec.model.to_flat()
    )


def run_coverage(spec, workers=1, checkpoint=None):
    """Percentage of replications whose interval contains the true value."""
    spec.build_model()
    cols = []
    for j in range(len(spec.sizes)):
        hits = replicate(
            _task(spec, "coverage", j), spec.replications, workers,
            _checkpoint_path(checkpoint, j), spec.signature(),
        )
        cols.append(100.0 * hits.mean(axis=0))
    return StudyTable(
        "coverage %", spec.model.d, spec.sizes, np.column_stack(cols), spec.model.to_flat()
    )


@dataclass(frozen=True, eq=False)
class CovarianceCheck:
    n: int
    replications: int
    monte_carlo: np.ndarray
    plug_in: np.ndarray

    @property
    def max_abs_deviation(self):
        return float(np.max(np.abs(self.monte_carlo - self.plug_in)))


def run_covariance(spec, workers=1, checkpoint=None):
    """Monte Carlo covariance of ``sqrt(n) * estimate`` against the plug-in formula.

    Uses the first sample size in `spec`.
    """
    spec.build_model()
    n = spec.sizes[0]
    est = replicate(
        _task(spec, "estimate", 0), spec.replications, workers,
        _checkpoint_path(checkpoint, 0), spec.signature(),
    )
    mc = np.cov(np.sqrt(n) * est, rowvar=False)
    return CovarianceCheck(n, spec.replications, mc, plug_in_covariance(spec.model).matrix)


@dataclass(frozen=True, eq=False)
class Chi2Calibration:
    sizes: tuple
    alpha: float
    df: int
    rejection_rates: np.ndarray
    statistics: list


def run_chi2_calibration(spec, workers=1, checkpoint=None):
    """Empirical rejection rate of the second-order chi-square test.

    Raises
    ------
    ValueError
        If the model has a nonzero second-order coefficient and `spec.power`
        is not set.
    """
    if np.any(spec.model.values[1]) and not spec.power:
        raise ValueError("calibration requires a zero second-order block (set power=True)")
    spec.build_model()
    rates = []
    stats_ = []
    df = 2**spec.model.d - spec.model.d - 1
    for j in range(len(spec.sizes)):
        out = replicate(
            _task(spec, "chi2", j), spec.replications, workers,
            _checkpoint_path(checkpoint, j), spec.signature(),
        )
        stats_.append(out[:, 0])
        rates.append(float(np.mean(out[:, 1] <= spec.alpha)))
    return Chi2Calibration(spec.sizes, spec.alpha, df, np.array(rates), stats_)


def run_study(spec, workers=1, checkpoint=None):
    if spec.which == "consistency":
        return run_consistency(spec, workers)
    if spec.which == "coverage":
        return run_coverage(spec, workers, checkpoint)
    if spec.which == "covariance":
        return run_covariance(spec, workers, checkpoint)
    return run_chi2_calibration(spec, workers, checkpoint)
