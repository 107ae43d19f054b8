"""Benchmark task generators and evaluation protocols.

Two tasks: the tenth-order NARMA recurrence (regression) and sine/square
waveform discrimination (classification).  Evaluation generates one
continuous sequence, splits it contiguously into train and test, discards a
washout prefix from each split, trains the ridge readout on the train
states, and scores on the test states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .readout import classification_accuracy, nmse, predict, ridge_train
from .reservoir import Reservoir, TdrConfig, derive_seed
from .streams import quantize

NARMA_ORDER = 10
NARMA_DIVERGENCE_BOUND = 10.0
DEFAULT_WASHOUT = 50
DEFAULT_LAMBDA = 1e-6
SINE_SQUARE_PERIOD = 10

_TAG_NARMA = 0x6E61726D61313030
_TAG_SINESQ = 0x73696E6573717561
_TAG_BENCH_RUN = 0xB3C8D1E2F4A59607


class NarmaDivergence(RuntimeError):
    """The NARMA recurrence left the stable region for this input draw."""


def narma10_recurrence(u: np.ndarray,
                       bound: float = NARMA_DIVERGENCE_BOUND) -> np.ndarray:
    """Tenth-order NARMA targets for a given input vector.

    y[p] = 0.3 y[p-1] + 0.05 y[p-1] * sum(y[p-10..p-1]) + 1.5 u[p-1] u[p-10]
           + 0.1, with the first 10 targets fixed at zero.  Raises
    :class:`NarmaDivergence` once |y| exceeds ``bound`` (the recurrence is
    unstable for some input draws).
    """
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    m = u.size
    y = np.zeros(m)
    for p in range(NARMA_ORDER, m):
        window = y[p - NARMA_ORDER:p].sum()
        y[p] = (0.3 * y[p - 1] + 0.05 * y[p - 1] * window
                + 1.5 * u[p - 1] * u[p - NARMA_ORDER] + 0.1)
        if abs(y[p]) > bound:
            raise NarmaDivergence(f"|y[{p}]| = {abs(y[p]):.3g} > {bound}")
    return y


@dataclass
class NarmaSequence:
    """Inputs in [0, 0.5], bounded targets, and the rejected-draw count."""

    u: np.ndarray
    y: np.ndarray
    regenerations: int = 0

    def __len__(self) -> int:
        return self.u.size


def narma10_generate(m: int, seed: int = 0, max_attempts: int = 1000) -> NarmaSequence:
    """Draw u ~ U[0, 0.5]^m and its NARMA targets, regenerating divergent draws.

    Divergent draws are rejected and retried with the next sub-seed; the
    number of regenerations is recorded on the result.
    """
    if m < 2 * NARMA_ORDER:
        raise ValueError(f"sequence length must be >= {2 * NARMA_ORDER}")
    for attempt in range(max_attempts):
        rng = np.random.default_rng(derive_seed(seed, _TAG_NARMA, attempt))
        u = rng.uniform(0.0, 0.5, m)
        try:
            y = narma10_recurrence(u)
        except NarmaDivergence:
            continue
        return NarmaSequence(u=u, y=y, regenerations=attempt)
    raise RuntimeError(f"no stable NARMA draw in {max_attempts} attempts")


@dataclass
class SineSquareSequence:
    """Waveform samples in [-1, 1] with per-sample labels (0=sine, 1=square)."""

    signal: np.ndarray
    labels: np.ndarray
    boundaries: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.signal.size


def _sine_segment(period: int) -> np.ndarray:
    return np.sin(2.0 * np.pi * np.arange(period) / period)


def _square_segment(period: int) -> np.ndarray:
    # +1 on the first half-period, -1 on the second; avoids sign(sin)=0 samples
    t = np.arange(period)
    return np.where(t < period / 2, 1.0, -1.0)


def sine_square_generate(m: int, seed: int = 0,
                         period: int = SINE_SQUARE_PERIOD) -> SineSquareSequence:
    """One-period segments, each a fair coin flip between sine and square."""
    if m < 1:
        raise ValueError("sequence length must be >= 1")
    rng = np.random.default_rng(derive_seed(seed, _TAG_SINESQ))
    sine, square = _sine_segment(period), _square_segment(period)
    chunks, labels, bounds = [], [], []
    total = 0
    while total < m:
        bounds.append(total)
        is_square = bool(rng.integers(0, 2))
        seg = square if is_square else sine
        chunks.append(seg)
        labels.append(np.full(period, int(is_square)))
        total += period
    signal = np.concatenate(chunks)[:m]
    lab = np.concatenate(labels)[:m]
    return SineSquareSequence(signal=signal, labels=lab,
                              boundaries=np.array(bounds, dtype=np.int64))


def write_sequence_csv(path, u: np.ndarray, y: np.ndarray) -> None:
    """Task sequence as CSV with header ``step,u,y``."""
    u = np.asarray(u).reshape(-1)
    y = np.asarray(y).reshape(-1)
    with open(path, "w", newline="") as fh:
        fh.write("step,u,y\n")
        for p, (a, b) in enumerate(zip(u, y)):
            fh.write(f"{p},{float(a)!r},{float(b)!r}\n")


@dataclass
class EvalResult:
    """Score plus everything needed to reproduce the run."""

    metric: str
    value: float
    metadata: dict


def _split_and_fit(cfg: TdrConfig, drive: np.ndarray, targets: np.ndarray,
                   m_train: int, lam: float, washout: int):
    """Shared protocol: continuous run, contiguous split, washout discard."""
    if washout < 0:
        raise ValueError("washout must be >= 0")
    m_test = drive.size - m_train
    if m_train < washout + 2 or m_test < washout + 2:
        raise ValueError(
            f"splits of {m_train}/{m_test} too short for washout {washout}")
    X = Reservoir(cfg).run(drive)
    X_train, y_train = X[washout:m_train], targets[washout:m_train]
    X_test = X[m_train + washout:]
    y_test = targets[m_train + washout:]
    model = ridge_train(X_train, y_train, lam)
    return model, X_test, y_test, float(np.mean(y_train))


def evaluate_regression(cfg: TdrConfig, m_train: int = 1000, m_test: int = 1000,
                        lam: float = DEFAULT_LAMBDA, washout: int = DEFAULT_WASHOUT,
                        seed: int = 0) -> EvalResult:
    """NARMA regression NMSE for one train/test draw.

    The driving input is the task input affinely rescaled from [0, 0.5] to
    [-1, 1] and quantized at width q; test targets never reach the trainer.
    """
    data = narma10_generate(m_train + m_test, seed)
    drive = quantize(4.0 * data.u - 1.0, cfg.q)
    model, X_test, y_test, y_mean = _split_and_fit(
        cfg, drive, data.y, m_train, lam, washout)
    value = nmse(y_test, predict(model, X_test), y_mean)
    return EvalResult(metric="nmse", value=value, metadata={
        "task": "narma10", "m_train": m_train, "m_test": m_test,
        "lambda": lam, "washout": washout, "seed": seed,
        "input_scale": "u -> 4u - 1", "regenerations": data.regenerations,
    })


def evaluate_classification(cfg: TdrConfig, m_train: int = 1000, m_test: int = 1000,
                            lam: float = DEFAULT_LAMBDA,
                            washout: int = DEFAULT_WASHOUT,
                            seed: int = 0, threshold: float = 0.5) -> EvalResult:
    """Sine/square discrimination accuracy with a 0/1 target and 0.5 decision."""
    data = sine_square_generate(m_train + m_test, seed)
    drive = quantize(data.signal, cfg.q)
    model, X_test, y_test, _ = _split_and_fit(
        cfg, drive, data.labels.astype(np.float64), m_train, lam, washout)
    value = classification_accuracy(y_test, predict(model, X_test), threshold)
    return EvalResult(metric="accuracy", value=value, metadata={
        "task": "sinesquare", "m_train": m_train, "m_test": m_test,
        "lambda": lam, "washout": washout, "seed": seed,
        "period": SINE_SQUARE_PERIOD, "input_scale": "identity",
    })


def benchmark_run_seed(seed: int, run: int) -> int:
    """Per-run task seed for repeated benchmark evaluations."""
    return derive_seed(seed, _TAG_BENCH_RUN, run)
