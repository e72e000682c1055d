"""
Monte Carlo verification of the analytic routes.

This module contains:
- SimConfig and the per-worker random streams derived from its master seed
- Simulation workers for counts, subordinator increments and full shock histories
- estimate_pmf, estimate_failure_law and estimate_subordinator_laplace, which compare
  empirical estimates with the analytic values and collect the verdicts in a SimReport
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

try:
    import psutil
except ImportError:
    psutil = None

from . import config
from .errors import ParameterError
from .process import (
    BivariateCount,
    ProcessParams,
    as_model,
    btsfpp_pmf,
    btsfpp_pmf_recursion,
    simulate_counts,
    simulate_paths,
)
from .shock import (
    SEMANTICS,
    failure_cause_prob,
    failure_cause_prob_until,
    geometric_success,
    hitting_reliability,
    reliability,
    reliability_general_geometric,
)
from .subordinator import Deterministic, PathGrid, SubordinatorSpec

logger = logging.getLogger(__name__)

# Status codes of a simulated shock history
FAILED = 0
CENSORED = 1
OVERSHOOT = 2

# Burst law tabulation: clock jumps from _BURST_FLOOR / Lambda upwards, on _BURST_GRID_POINTS sizes
_BURST_FLOOR = 1e-10
_BURST_GRID_POINTS = 4000

# Bound on paths times grid columns held at once by the crossing route
_PATH_BLOCK_CELLS = 2_000_000


def physical_cores():
    """Number of physical cores (psutil), falling back to the logical count."""
    cores = psutil.cpu_count(logical=False) if psutil else None
    return cores or os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run configuration.

    Attributes:
        paths: Number of simulated paths
        seed: Master seed in [0, 2**64)
        workers: Worker processes; 0 means one per physical core
        horizon: Censoring time for failure simulations
        semantics: "crossing" or "hitting"
        grid_points: Number of reliability comparison times in (0, horizon]
        z_threshold: Largest |z| that still passes
    """

    paths: int = 100_000
    seed: int = config.DEFAULT_SEED
    workers: int = 1
    horizon: float = 5.0
    semantics: str = "crossing"
    grid_points: int = 10
    z_threshold: float = config.Z_THRESHOLD

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise ParameterError(f"paths must be a positive integer, got {self.paths}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an integer in [0, 2**64), got {self.seed}")
        if int(self.workers) != self.workers or self.workers < 0:
            raise ParameterError(f"workers must be a nonnegative integer, got {self.workers}")
        if not self.horizon > 0:
            raise ParameterError(f"horizon must be > 0, got {self.horizon}")
        if self.semantics not in SEMANTICS:
            raise ParameterError(f"semantics must be one of {', '.join(SEMANTICS)}, got {self.semantics!r}")
        if int(self.grid_points) != self.grid_points or self.grid_points < 1:
            raise ParameterError(f"grid_points must be a positive integer, got {self.grid_points}")
        if not self.z_threshold > 0:
            raise ParameterError(f"z_threshold must be > 0, got {self.z_threshold}")

    @property
    def worker_count(self):
        """Resolved number of workers (never more than paths)."""
        workers = self.workers or physical_cores()
        return max(1, min(workers, self.paths))

    def chunks(self):
        """Paths per worker; the first ``paths % workers`` workers take one extra."""
        workers = self.worker_count
        base, extra = divmod(self.paths, workers)
        return [base + (1 if i < extra else 0) for i in range(workers)]

    def seed_sequences(self):
        """One independent SeedSequence per worker, spawned from the master seed."""
        return np.random.SeedSequence(self.seed).spawn(self.worker_count)

    def grid(self):
        """Comparison times horizon/m, 2 horizon/m, ..., horizon."""
        return self.horizon * np.arange(1, self.grid_points + 1) / self.grid_points

    def to_dict(self):
        """Config echo for reports (the resolved worker count included)."""
        return {**asdict(self), "workers": self.worker_count}


@dataclass(frozen=True)
class ComparisonRecord:
    """One analytic-versus-empirical comparison."""

    name: str
    analytic: float
    estimate: float
    stderr: float
    z: float
    passed: bool

    @classmethod
    def compare(cls, name, analytic, estimate, stderr, threshold):
        """Build a record; agreement to rounding gives z = 0, otherwise a zero standard error fails."""
        analytic, estimate, stderr = float(analytic), float(estimate), float(stderr)
        if math.isclose(estimate, analytic, rel_tol=1e-12, abs_tol=1e-15):
            z = 0.0
        elif stderr > 0:
            z = (estimate - analytic) / stderr
        else:
            z = math.inf
        return cls(name, analytic, estimate, stderr, z, abs(z) <= threshold)


@dataclass
class SimReport:
    """Result of a Monte Carlo comparison run.

    ``runtime`` (seconds) and ``peak_memory`` (resident set size in bytes after the
    run, from psutil) are left out of the JSON form unless asked for, so equal
    configurations give byte-identical JSON.
    """

    quantity: str
    config: dict
    records: list
    diagnostics: dict = field(default_factory=dict)
    runtime: float = math.nan
    peak_memory: int = None
    samples: dict = field(default=None, repr=False)

    @property
    def passed(self):
        """True when every record passes."""
        return all(record.passed for record in self.records)

    @property
    def failures(self):
        """Records with |z| above the threshold."""
        return [record for record in self.records if not record.passed]

    def to_dict(self, include_runtime=False):
        """Plain-Python form; non-finite floats become strings so the JSON stays standard."""
        data = {
            "quantity": self.quantity,
            "config": self.config,
            "passed": self.passed,
            "records": [_finite(asdict(record)) for record in self.records],
            "diagnostics": _finite(self.diagnostics),
        }
        if include_runtime:
            data["runtime"] = self.runtime
            data["peak_memory"] = self.peak_memory
        return data

    def to_json(self, include_runtime=False):
        """JSON text of ``to_dict``."""
        return json.dumps(self.to_dict(include_runtime), indent=2) + "\n"


def _finite(mapping):
    return {
        key: (repr(value) if isinstance(value, float) and not math.isfinite(value) else value)
        for key, value in mapping.items()
    }


def _run(worker, cfg, *args):
    """Run ``worker(*args, count, seed_sequence)`` per chunk and return results in worker order."""
    chunks = cfg.chunks()
    seeds = cfg.seed_sequences()
    if len(chunks) == 1:
        return [worker(*args, chunks[0], seeds[0])]
    with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [pool.submit(worker, *args, count, seed) for count, seed in zip(chunks, seeds)]
        return [future.result() for future in futures]


def _timed(quantity, cfg, body):
    """Run ``body()`` returning (records, diagnostics, samples) and wrap it in a SimReport."""
    process = psutil.Process() if psutil else None
    start_time = time.perf_counter()
    records, diagnostics, samples = body()
    elapsed_time = time.perf_counter() - start_time
    peak = process.memory_info().rss if process else None

    report = SimReport(quantity, cfg.to_dict(), records, diagnostics, elapsed_time, peak, samples)
    logger.info("%s run: %d paths, %d workers, %.2f s", quantity, cfg.paths, cfg.worker_count, elapsed_time)
    for record in report.failures:
        logger.warning("%s: |z| = %.2f exceeds %.1f", record.name, abs(record.z), cfg.z_threshold)
    return report


# ---------------------------------------------------------------------------
# Workers (module level so they pickle)
# ---------------------------------------------------------------------------


def _count_worker(process, t, count, seed):
    return simulate_counts(process, t, np.random.default_rng(seed), size=count)


def _increment_worker(spec, t, count, seed):
    return spec.sample_increment(t, np.random.default_rng(seed), size=count)


def _failure_worker(process, d, horizon, semantics, grid_points, count, seed):
    rng = np.random.default_rng(seed)
    return simulate_failures(process, d, horizon, semantics, rng, count, grid_points=grid_points)


class BurstSampler:
    """Shock bursts carried by single jumps of the clock.

    A clock jump of size s carries Poisson(Lambda s) shocks. Jumps with at least one
    shock arrive at rate psi(Lambda), and their sizes follow (1 - exp(-Lambda s)) nu(ds)
    normalized by that rate. Sizes are drawn by inverting this law, tabulated from the
    Lévy density on a logarithmic grid. Below the grid the burst is a single shock, and
    above it the burst exceeds ``cap``.

    Attributes:
        rate: psi(Lambda), the arrival rate of bursts
        cap: Bursts larger than this are reported as cap + 1
    """

    def __init__(self, model, cap):
        self.rate = model.jump_rate()
        self.cap = int(cap)
        self._lambda = model.total_rate
        self._unit = isinstance(model.subordinator, Deterministic)
        if self._unit:
            return

        spec = model.subordinator
        lower = _BURST_FLOOR / self._lambda
        upper = (self.cap + 10.0 * math.sqrt(self.cap) + 50.0) / self._lambda

        def weight(s):
            return -math.expm1(-self._lambda * s) * float(spec.levy_density(s))

        sizes = np.geomspace(lower, upper, _BURST_GRID_POINTS)
        in_log = -np.expm1(-self._lambda * sizes) * spec.levy_density(sizes) * sizes
        below, _ = integrate.quad(weight, 0.0, lower, limit=config.QUAD_LIMIT)
        above, _ = integrate.quad(weight, upper, math.inf, limit=config.QUAD_LIMIT)
        self._sizes = sizes
        self._cdf = below + integrate.cumulative_trapezoid(in_log, np.log(sizes), initial=0.0)
        self._total = self._cdf[-1] + above
        logger.debug(
            "burst law: mass %.6g on the grid against psi(Lambda) = %.6g", self._total, self.rate
        )

    def sample(self, rng, size):
        """Draw ``size`` burst sizes (>= 1) as an int64 array."""
        if self._unit:
            return np.ones(size, dtype=np.int64)
        level = rng.random(size) * self._total
        bursts = np.ones(size, dtype=np.int64)
        bursts[level >= self._cdf[-1]] = self.cap + 1
        inner = np.flatnonzero((level >= self._cdf[0]) & (level < self._cdf[-1]))
        mean = self._lambda * np.interp(level[inner], self._cdf, self._sizes)
        # first shock at tau, conditioned to fall inside the jump, then the rest after it
        tau = -np.log1p(rng.random(inner.size) * np.expm1(-mean)) / mean
        bursts[inner] += rng.poisson(mean * (1.0 - tau))
        return np.minimum(bursts, self.cap + 1)


def _crossings_on_grid(model, thresholds, times, rng):
    """First grid index with Z >= L (0 if never) and the type of the L-th shock, per path."""
    count = thresholds.size
    first = np.zeros(count, dtype=np.int64)
    causes = np.zeros(count, dtype=np.int64)
    grid = PathGrid(times)
    block = max(1, _PATH_BLOCK_CELLS // times.size)
    for start in range(0, count, block):
        rows = slice(start, min(start + block, count))
        _, counts = simulate_paths(model, grid, rng, thresholds[rows].size)
        total = counts.sum(axis=2)
        reached = total >= thresholds[rows, None]
        index = np.argmax(reached, axis=1)
        hit = np.flatnonzero(reached.any(axis=1))
        step = counts[hit, index[hit]] - counts[hit, index[hit] - 1]
        share = step[:, 0] / step.sum(axis=1)
        first[start + hit] = index[hit]
        causes[start + hit] = np.where(rng.random(hit.size) < share, 1, 2)
        logger.debug("grid block of %d paths: %d crossed", counts.shape[0], hit.size)
    return first, causes


def simulate_failures(process, d, horizon, semantics, rng, count, grid_points=1):
    """Simulate ``count`` independent shock histories up to ``horizon``.

    Each history gets its own threshold L. Under crossing semantics the clock is sampled
    on ``grid_points`` equal steps with ``simulate_paths``, so Z = N1 + N2 is exact at the
    grid times and a failure is recorded at the first grid time with Z >= L. Its cause is
    the type of the L-th shock, which is type 1 with probability k1/(k1 + k2) among the
    k1 + k2 shocks of that step.

    Under hitting semantics the system fails only when a single shock completes the
    threshold, which grid values cannot tell apart from a burst. The history is then
    built jump by jump: bursts arrive at rate psi(Lambda) with sizes from
    ``BurstSampler``, and a burst of more than one shock reaching L is an overshoot.

    Args:
        process: ProcessParams or SubordinatedPoisson
        d: ThresholdDist
        horizon: Censoring time
        semantics: "crossing" or "hitting"
        rng: numpy Generator
        count: Number of histories
        grid_points: Steps of the crossing grid on (0, horizon]

    Returns:
        (times, causes, status): failure times (inf unless failed), causes (0 unless
        failed) and status codes FAILED, CENSORED or OVERSHOOT
    """
    model = as_model(process)
    thresholds = d.sample(rng, count)
    times = np.full(count, np.inf)
    status = np.full(count, CENSORED, dtype=np.int64)

    if semantics == "crossing":
        grid = horizon * np.arange(grid_points + 1) / grid_points
        first, causes = _crossings_on_grid(model, thresholds, grid, rng)
        failed = first > 0
        times[failed] = grid[first[failed]]
        status[failed] = FAILED
        return times, causes, status

    bursts = BurstSampler(model, thresholds.max())
    share = model.lambda1 / model.total_rate
    causes = np.zeros(count, dtype=np.int64)
    level = np.zeros(count, dtype=np.int64)
    clock = np.zeros(count)
    active = np.arange(count)
    while active.size:
        clock[active] += rng.exponential(1.0 / bursts.rate, active.size)
        active = active[clock[active] <= horizon]
        if not active.size:
            break
        jumps = bursts.sample(rng, active.size)
        level[active] += jumps
        done = level[active] >= thresholds[active]
        status[active[done & (jumps > 1)]] = OVERSHOOT
        finished = active[done & (jumps == 1)]
        status[finished] = FAILED
        times[finished] = clock[finished]
        causes[finished] = np.where(rng.random(finished.size) < share, 1, 2)
        active = active[status[active] == CENSORED]
    return times, causes, status


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _binomial_record(name, analytic, hits, total, threshold):
    stderr = math.sqrt(max(analytic * (1.0 - analytic), 0.0) / total)
    return ComparisonRecord.compare(name, analytic, hits / total, stderr, threshold)


def estimate_pmf(process, t, cfg, max_h=6):
    """Compare empirical cell frequencies of (N1(t), N2(t)) with the pmf for k1 + k2 <= max_h.

    Args:
        process: ProcessParams or SubordinatedPoisson
        t: Time > 0
        cfg: SimConfig
        max_h: Largest total count tabulated

    Returns:
        SimReport
    """

    def body():
        draws = np.concatenate(_run(_count_worker, cfg, process, t))
        records = []
        for h in range(max_h + 1):
            for k in BivariateCount.diagonal(h):
                if isinstance(process, ProcessParams):
                    analytic = btsfpp_pmf(process, k, t)
                else:
                    analytic = btsfpp_pmf_recursion(process, k, t)
                hits = int(np.count_nonzero((draws[:, 0] == k.k1) & (draws[:, 1] == k.k2)))
                name = f"pmf({k.k1},{k.k2})"
                records.append(_binomial_record(name, analytic, hits, cfg.paths, cfg.z_threshold))
        return records, {"t": t, "max_h": max_h}, None

    return _timed("pmf", cfg, body)


def estimate_subordinator_laplace(spec, t, u_grid, cfg):
    """Compare the sample mean of exp(-u S(t)) with exp(-t psi(u)) for each u."""
    if not isinstance(spec, SubordinatorSpec):
        raise ParameterError(f"expected a SubordinatorSpec, got {type(spec).__name__}")

    def body():
        draws = np.concatenate(_run(_increment_worker, cfg, spec, t))
        records = []
        for u in u_grid:
            values = np.exp(-u * draws)
            stderr = values.std(ddof=1) / math.sqrt(values.size) if values.size > 1 else 0.0
            analytic = math.exp(-t * float(spec.laplace_exponent(u)))
            name = f"laplace(u={u:g})"
            records.append(ComparisonRecord.compare(name, analytic, values.mean(), stderr, cfg.z_threshold))
        return records, {"t": t, "subordinator": spec.to_dict()}, None

    return _timed("laplace", cfg, body)


def _analytic_survival(process, d, t, semantics):
    if semantics == "hitting":
        return hitting_reliability(process, d, t)
    model = as_model(process)
    success = geometric_success(d)
    if success is not None:
        return reliability_general_geometric(model.subordinator, model.lambda1, model.lambda2, success, t)
    return reliability(model, d, t)


def estimate_failure_law(process, d, cfg):
    """Simulate shock histories with random thresholds and compare the failure law.

    Compares P(T > t) on ``cfg.grid()`` and P(zeta = n, T <= horizon) for both causes.
    Under hitting semantics the overshoot fraction and the analytic defect
    1 - P(zeta = 1) - P(zeta = 2) are reported as diagnostics.

    Returns:
        SimReport whose ``samples`` hold the per-path times, causes and status codes
    """
    model = as_model(process)

    def body():
        parts = _run(_failure_worker, cfg, process, d, cfg.horizon, cfg.semantics, cfg.grid_points)
        times, causes, status = (np.concatenate(column) for column in zip(*parts))
        total = cfg.paths

        records = []
        for t in cfg.grid():
            analytic = _analytic_survival(process, d, float(t), cfg.semantics)
            survived = int(np.count_nonzero(times > t))
            records.append(_binomial_record(f"survival(t={t:g})", analytic, survived, total, cfg.z_threshold))

        if cfg.semantics == "crossing":
            failed_by = 1.0 - _analytic_survival(process, d, cfg.horizon, "crossing")
            cause_values = [model.rate(n) / model.total_rate * failed_by for n in (1, 2)]
        else:
            cause_values = [failure_cause_prob_until(process, d, n, cfg.horizon) for n in (1, 2)]
        for n, analytic in zip((1, 2), cause_values):
            hits = int(np.count_nonzero(causes == n))
            name = f"cause{n}(T<={cfg.horizon:g})"
            records.append(_binomial_record(name, analytic, hits, total, cfg.z_threshold))

        diagnostics = {
            "semantics": cfg.semantics,
            "threshold": d.to_dict(),
            "failed_fraction": float(np.count_nonzero(status == FAILED)) / total,
            "censored_fraction": float(np.count_nonzero(status == CENSORED)) / total,
            "overshoot_fraction": float(np.count_nonzero(status == OVERSHOOT)) / total,
        }
        if cfg.semantics == "hitting":
            diagnostics["analytic_defect"] = 1.0 - sum(failure_cause_prob(process, d, n) for n in (1, 2))
        if diagnostics["censored_fraction"] > 0:
            share = 100 * diagnostics["censored_fraction"]
            logger.warning("%.2f%% of paths censored at horizon %g", share, cfg.horizon)
        return records, diagnostics, {"time": times, "cause": causes, "status": status}

    return _timed("failure", cfg, body)
