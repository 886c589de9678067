"""Batch-means statistics and the common Monte Carlo report record."""

import numpy as np
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field


def batch_means(values, batches=20):
    """Mean, sample variance, and batch-means standard error of the mean.

    The values are split into `batches` equal consecutive batches; the
    standard error is the standard deviation of the batch means divided by
    sqrt(batches).  Requires batches >= 2 and a sample count divisible by
    the batch count.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    b = int(batches)
    if b < 2:
        raise ValueError("batch-means needs at least 2 batches")
    if n == 0 or n % b != 0:
        raise ValueError("sample count %d is not divisible into %d batches" % (n, b))
    means = values.reshape(b, n // b).mean(axis=1)
    mean = float(values.mean())
    variance = float(values.var(ddof=1)) if n > 1 else 0.0
    stderr = float(means.std(ddof=1) / np.sqrt(b))
    return {"mean": mean, "variance": variance, "stderr": stderr, "batches": b}


def pick_batches(n, target=20):
    """Largest batch count <= target dividing n (>= 2 when possible)."""
    for b in range(min(target, n), 1, -1):
        if n % b == 0:
            return b
    return 1


@dataclass
class VarianceReport:
    """Outcome of one Monte Carlo variance estimate against a prediction."""

    estimate: float
    stderr: float
    prediction: float
    samples: int
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def ratio(self):
        if self.prediction == 0.0:
            return float("nan")
        return self.estimate / self.prediction

    def within_stderr(self, k=4.0):
        return abs(self.estimate - self.prediction) <= k * self.stderr

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "prediction": self.prediction,
            "ratio": self.ratio,
            "samples": self.samples,
            "params": dict(self.params),
            "extras": {k: v for k, v in self.extras.items() if np.isscalar(v)},
        }


def run_chunked(worker, common, samples, workers, align=1):
    """Run `worker(common + (start, count))` over contiguous sample ranges.

    With workers <= 1 everything runs in one call; otherwise ranges are
    dispatched to a process pool.  Per-sample seeding makes the values
    independent of the split; `align` keeps whole batches inside one chunk
    so per-batch accumulators also add up in the same order for every
    worker count.
    """
    if workers is None or int(workers) <= 1:
        return [worker(common + (0, samples))]
    workers = int(workers)
    chunk = max(1, -(-samples // (workers * 4)))
    chunk = align * -(-chunk // align)
    jobs = []
    start = 0
    while start < samples:
        count = min(chunk, samples - start)
        jobs.append(common + (start, count))
        start += count
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


def report_from_values(values, prediction, params=None, extras=None):
    """Build a VarianceReport from per-sample values via batch means."""
    values = np.asarray(values, dtype=float)
    b = pick_batches(values.size)
    if b >= 2:
        stats = batch_means(values, b)
        stderr = stats["stderr"]
    else:
        stderr = 0.0
    return VarianceReport(
        estimate=float(values.mean()),
        stderr=stderr,
        prediction=float(prediction),
        samples=int(values.size),
        params=dict(params or {}),
        extras=dict(extras or {}),
    )
