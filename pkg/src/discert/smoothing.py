"""Sparsity-aware randomization, Monte-Carlo vote collection and toy base classifiers.

Random numbers come from numpy's Philox4x64 counter-based generator. Every
chunk of ``CHUNK`` samples draws from its own stream, keyed by
``SeedSequence(seed, spawn_key=(stream, stage, chunk))``, so vote counts depend
only on the seed and never on how many workers collected them.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Protocol, Tuple

import numpy as np

from .core import (
    BINARY_CLASS,
    NoiseSpec,
    RadiiSpec,
    RangeError,
    VoteRecord,
)

CHUNK = 4096
ABSTAIN = -1

SELECTION, ESTIMATION = 0, 1


class ClassifierError(RuntimeError):
    pass


class BaseClassifier(Protocol):
    def classify(self, v: np.ndarray) -> int: ...


def classify_batch(classifier, batch: np.ndarray, start: int = 0) -> np.ndarray:
    """Class ids for each row; uses ``classifier.classify_batch`` when available."""
    fast = getattr(classifier, "classify_batch", None)
    if fast is not None:
        try:
            return np.asarray(fast(batch), dtype=np.int64)
        except Exception as exc:
            raise ClassifierError(f"classifier failed on samples {start}..{start + len(batch) - 1}: {exc}") from exc
    out = np.empty(len(batch), dtype=np.int64)
    for i, row in enumerate(batch):
        try:
            out[i] = int(classifier.classify(row))
        except Exception as exc:
            raise ClassifierError(f"classifier failed on sample {start + i}: {exc}") from exc
    return out


# -- randomization -------------------------------------------------------------

@dataclass(frozen=True)
class Group:
    name: str
    indices: Tuple[int, ...]
    noise: NoiseSpec


@dataclass(frozen=True)
class SamplerConfig:
    """Sampling setup. With ``groups`` each index set is smoothed with its own noise."""

    noise: Optional[NoiseSpec]
    seed: int = 0
    num_selection: int = 1000
    num_estimation: int = 1_000_000
    groups: Tuple[Group, ...] = field(default=())
    jobs: int = 1

    def __post_init__(self):
        if self.num_selection <= 0 or self.num_estimation <= 0:
            raise RangeError("sample counts must be positive")
        if self.noise is None and not self.groups:
            raise RangeError("either noise or groups must be given")
        seen = set()
        for g in self.groups:
            if seen.intersection(g.indices):
                raise RangeError("group index sets overlap")
            seen.update(g.indices)
        ks = {g.noise.num_categories for g in self.groups}
        if len(ks) > 1:
            raise RangeError("all groups must share the number of categories")

    @property
    def num_categories(self) -> int:
        if self.groups:
            return self.groups[0].noise.num_categories
        return self.noise.num_categories

    def flip_probabilities(self, x: np.ndarray) -> np.ndarray:
        """Per-coordinate flip probability for ``x``."""
        x = np.asarray(x)
        if not self.groups:
            return np.where(x == 0, float(self.noise.p_plus), float(self.noise.p_minus))
        covered = sorted(i for g in self.groups for i in g.indices)
        if covered != list(range(len(x))):
            raise RangeError("groups must cover every coordinate exactly once")
        probs = np.empty(len(x))
        for g in self.groups:
            idx = np.asarray(g.indices, dtype=np.int64)
            probs[idx] = np.where(x[idx] == 0, float(g.noise.p_plus), float(g.noise.p_minus))
        return probs


def _perturb_rows(x: np.ndarray, flip_prob: np.ndarray, K: int, n: int, rng: np.random.Generator) -> np.ndarray:
    d = len(x)
    flips = rng.random((n, d)) < flip_prob
    if K == 2:
        return np.where(flips, 1 - x, x)
    # uniform over the K - 1 other values
    shift = rng.integers(1, K, size=(n, d))
    return np.where(flips, (x + shift) % K, x)


def perturb(x, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """One draw of the randomization: zeros flip with p_plus, nonzeros with p_minus."""
    x = np.asarray(x, dtype=np.int64)
    if np.any((x < 0) | (x >= noise.num_categories)):
        raise RangeError("vector values outside 0..K-1")
    probs = np.where(x == 0, float(noise.p_plus), float(noise.p_minus))
    return _perturb_rows(x, probs, noise.num_categories, 1, rng)[0]


def perturb_batch(x, cfg: SamplerConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return _perturb_rows(x, cfg.flip_probabilities(x), cfg.num_categories, n, rng)


def chunk_rng(seed: int, stream: int, stage: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, stage, chunk))
    return np.random.Generator(np.random.Philox(ss))


def _count_chunk(x, classifier, cfg: SamplerConfig, stream: int, stage: int, chunk: int,
                 n: int, num_classes: int) -> np.ndarray:
    rng = chunk_rng(cfg.seed, stream, stage, chunk)
    batch = perturb_batch(x, cfg, n, rng)
    labels = classify_batch(classifier, batch, start=chunk * CHUNK)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ClassifierError(f"classifier returned a class outside 0..{num_classes - 1}")
    return np.bincount(labels, minlength=num_classes)


def _collect(x, classifier, cfg: SamplerConfig, total: int, stage: int, stream: int,
             num_classes: int) -> List[int]:
    sizes = [min(CHUNK, total - start) for start in range(0, total, CHUNK)]
    args = [(x, classifier, cfg, stream, stage, c, n, num_classes) for c, n in enumerate(sizes)]
    if cfg.jobs > 1 and len(args) > 1 and not getattr(classifier, "serial_only", False):
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            parts = list(pool.map(lambda a: _count_chunk(*a), args))
    else:
        parts = [_count_chunk(*a) for a in args]
    counts = np.sum(parts, axis=0) if parts else np.zeros(num_classes, dtype=np.int64)
    return [int(c) for c in counts]


def collect_votes(x, classifier, cfg: SamplerConfig, num_classes: int = 2, stream: int = 0,
                  input_id: str = "x") -> Tuple[VoteRecord, VoteRecord]:
    """Selection and estimation votes from disjoint sample streams."""
    sel = _collect(x, classifier, cfg, cfg.num_selection, SELECTION, stream, num_classes)
    est = _collect(x, classifier, cfg, cfg.num_estimation, ESTIMATION, stream, num_classes)
    return VoteRecord(input_id, tuple(sel)), VoteRecord(input_id, tuple(est))


def smoothed_predict(x, classifier, cfg: SamplerConfig, alpha="0.01", mode: str = BINARY_CLASS,
                     num_classes: int = 2, stream: int = 0) -> int:
    """Smoothed prediction, or ``ABSTAIN`` when the vote is not conclusive at radius zero."""
    from .certify import certify_point
    from .confidence import two_stage_estimate

    sel, est = collect_votes(x, classifier, cfg, num_classes, stream)
    bounds = two_stage_estimate(sel, est, alpha, mode, num_classes)
    noise = cfg.noise if cfg.noise is not None else cfg.groups[0].noise
    res = certify_point(noise, RadiiSpec(), bounds)
    return ABSTAIN if res.abstained else bounds.top_class


# -- toy classifiers -----------------------------------------------------------

@dataclass
class ConstantClassifier:
    label: int = 0

    def classify(self, v) -> int:
        return self.label

    def classify_batch(self, batch):
        return np.full(len(batch), self.label, dtype=np.int64)


@dataclass
class ThresholdClassifier:
    """Class 1 iff coordinate ``index`` is at least ``threshold``."""

    index: int = 0
    threshold: int = 1

    def classify(self, v) -> int:
        return int(v[self.index] >= self.threshold)

    def classify_batch(self, batch):
        return (np.asarray(batch)[:, self.index] >= self.threshold).astype(np.int64)


@dataclass
class MajorityClassifier:
    """Class 1 iff more than half of the first ``k`` coordinates are nonzero."""

    k: int = 5

    def classify(self, v) -> int:
        return int(2 * np.count_nonzero(np.asarray(v)[: self.k]) > self.k)

    def classify_batch(self, batch):
        nz = np.count_nonzero(np.asarray(batch)[:, : self.k], axis=1)
        return (2 * nz > self.k).astype(np.int64)


class LinearClassifier:
    """Linear scores ``W @ (v != 0) + b``; argmax over classes (sign for one row of weights)."""

    def __init__(self, weights, bias=0.0):
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        self.weights = w
        self.bias = np.atleast_1d(np.asarray(bias, dtype=float))

    def scores(self, batch) -> np.ndarray:
        feats = (np.atleast_2d(batch) != 0).astype(float)
        return feats @ self.weights.T + self.bias

    def classify_batch(self, batch):
        s = self.scores(batch)
        if s.shape[1] == 1:
            return (s[:, 0] > 0).astype(np.int64)
        return np.argmax(s, axis=1).astype(np.int64)

    def classify(self, v) -> int:
        return int(self.classify_batch(np.atleast_2d(v))[0])

    @classmethod
    def fit(cls, X, y, num_classes: int = 2, augment: Optional[NoiseSpec] = None,
            seed: int = 0, ridge: float = 1e-3) -> "LinearClassifier":
        """Least-squares one-vs-rest fit. With ``augment`` every training row is
        replaced by one noisy copy drawn from the randomization."""
        X = np.asarray(X, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if augment is not None:
            rng = np.random.Generator(np.random.Philox(seed))
            X = np.stack([perturb(row, augment, rng) for row in X])
        F = np.hstack([(X != 0).astype(float), np.ones((len(X), 1))])
        T = np.eye(num_classes)[y] * 2 - 1
        A = F.T @ F + ridge * np.eye(F.shape[1])
        W = np.linalg.solve(A, F.T @ T)
        if num_classes == 2:
            w = W[:-1, 1] - W[:-1, 0]
            return cls(w, W[-1, 1] - W[-1, 0])
        return cls(W[:-1].T, W[-1])


class LookupClassifier:
    """Arbitrary function given as a table from input tuples to classes."""

    def __init__(self, table: dict, default: int = 0):
        self.table = dict(table)
        self.default = default

    def classify(self, v) -> int:
        return self.table.get(tuple(int(a) for a in v), self.default)


class ExternalClassifier:
    """Base classifier running in another process.

    The engine writes one vector per line (space-separated integers) to the
    process's stdin and reads one class id per line from its stdout.
    """

    serial_only = True

    def __init__(self, command):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = None
        self._lock = threading.Lock()

    def _start(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                          text=True, bufsize=1)
        return self._proc

    def classify_batch(self, batch):
        with self._lock:
            proc = self._start()
            lines = ["".join([" ".join(str(int(a)) for a in row), "\n"]) for row in batch]

            def feed():
                try:
                    proc.stdin.writelines(lines)
                    proc.stdin.flush()
                except BrokenPipeError:
                    pass

            writer = threading.Thread(target=feed, daemon=True)
            writer.start()
            out = np.empty(len(lines), dtype=np.int64)
            for i in range(len(lines)):
                reply = proc.stdout.readline()
                if not reply:
                    raise ClassifierError(f"external classifier exited before answering sample {i}")
                out[i] = int(reply.strip())
            writer.join()
            return out

    def classify(self, v) -> int:
        return int(self.classify_batch(np.atleast_2d(v))[0])

    def close(self):
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
            self._proc = None


def parse_classifier(spec: str, num_categories: int = 2):
    """Build a classifier from a CLI spec.

    ``constant:C``, ``threshold:I[:T]``, ``majority:K``, ``linear:w0,w1,...[:bias]``
    or ``exec:COMMAND``.
    """
    name, _, rest = spec.partition(":")
    try:
        if name == "constant":
            return ConstantClassifier(int(rest or 0))
        if name == "threshold":
            parts = rest.split(":") if rest else ["0"]
            return ThresholdClassifier(int(parts[0]), int(parts[1]) if len(parts) > 1 else 1)
        if name == "majority":
            return MajorityClassifier(int(rest))
        if name == "linear":
            w, _, b = rest.partition(":")
            return LinearClassifier([float(t) for t in w.split(",")], float(b) if b else 0.0)
        if name == "exec":
            if not rest.strip():
                raise ValueError("empty command")
            return ExternalClassifier(rest)
    except ValueError as exc:
        raise ValueError(f"bad classifier spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown classifier {spec!r}")


def synthetic_sparse(n: int, d: int, density: float, seed: int = 0, K: int = 2) -> np.ndarray:
    """Random sparse vectors: each coordinate is nonzero with probability ``density``."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(2**32 - 1,))))
    mask = rng.random((n, d)) < density
    values = rng.integers(1, K, size=(n, d)) if K > 2 else np.ones((n, d), dtype=np.int64)
    return np.where(mask, values, 0).astype(np.int64)


__all__ = [
    "ABSTAIN", "BaseClassifier", "ClassifierError", "ConstantClassifier", "ExternalClassifier", "Group",
    "LinearClassifier", "LookupClassifier", "MajorityClassifier", "SamplerConfig", "ThresholdClassifier",
    "collect_votes", "parse_classifier", "perturb", "perturb_batch", "smoothed_predict", "synthetic_sparse",
]
