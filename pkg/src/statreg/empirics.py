"""Estimating regularities from observed streams.

A finite observer cannot see limit points directly.  Here a point counts
as a limit point when it is revisited, within ``epsilon``, in each of the
last ``windows`` stretches of the trajectory tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from statreg.errors import DataError, EstimationError, PreconditionError
from statreg.measures import (
    IDENT_TOL,
    Alphabet,
    Measure,
    Regularity,
    TestFunction,
    _check_same,
    hausdorff,
    make_measure,
    point_set_hausdorff,
)
from statreg.realization import SamplingNet, SymbolSequence

DEFAULT_EPSILON = 0.02
DEFAULT_WINDOWS = 5
DEFAULT_TAIL_FRACTION = 0.5
MIN_POINTS_PER_WINDOW = 10

_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Indexed points; ``kind`` is ``"measure"`` (compared in TV) or
    ``"vector"`` (compared in the sup norm)."""

    indices: np.ndarray
    points: np.ndarray
    kind: str = "measure"
    alphabet: Alphabet | None = None

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64)
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or len(points) != len(indices):
            raise DataError("trajectory points must be a 2-d array aligned with indices")
        if len(indices) > 1 and np.any(np.diff(indices) <= 0):
            raise DataError("trajectory indices must be strictly increasing")
        if self.kind not in ("measure", "vector"):
            raise DataError(f"unknown trajectory kind {self.kind!r}")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def metric(self) -> str:
        return "tv" if self.kind == "measure" else "sup"

    def distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Distance matrix between rows of ``a`` and rows of ``b``."""
        diff = np.abs(a[:, None, :] - b[None, :, :])
        return 0.5 * diff.sum(axis=2) if self.kind == "measure" else diff.max(axis=2)

    def steps(self) -> np.ndarray:
        """Distances between consecutive points."""
        diff = np.abs(np.diff(self.points, axis=0))
        return 0.5 * diff.sum(axis=1) if self.kind == "measure" else diff.max(axis=1)


@dataclass(frozen=True, eq=False)
class LimitSetEstimate:
    centers: np.ndarray
    epsilon: float
    windows: int
    visits: np.ndarray
    kind: str = "measure"
    alphabet: Alphabet | None = None
    tail_start: int = 0

    def __len__(self) -> int:
        return len(self.centers)

    def to_regularity(self) -> Regularity:
        if self.kind != "measure" or self.alphabet is None:
            raise DataError("only measure trajectories yield a regularity")
        return Regularity.from_weights(self.alphabet, self.centers, dedupe=True)


def empirical_measure(alphabet: Alphabet, items) -> Measure:
    """Frequencies of the symbols in a nonempty tuple (labels or codes)."""
    codes = np.asarray(items)
    if codes.size == 0:
        raise DataError("empirical measure of an empty tuple")
    if codes.dtype.kind not in "iu":
        codes = alphabet.encode(items)
    counts = np.bincount(codes, minlength=len(alphabet))
    return make_measure(alphabet, counts / len(codes))


def prefix_trajectory(seq: SymbolSequence, stride: int = 1) -> Trajectory:
    """Prefix frequencies at lengths ``stride, 2*stride, ...``."""
    if stride < 1:
        raise DataError("stride must be at least 1")
    n = len(seq)
    ends = np.arange(stride, n + 1, stride)
    if len(ends) == 0:
        raise DataError(f"sequence of length {n} shorter than stride {stride}")
    k = len(seq.alphabet)
    points = np.empty((len(ends), k))
    for i in range(k):
        points[:, i] = np.cumsum(seq.codes == i)[ends - 1]
    points /= ends[:, None]
    return Trajectory(ends, points, "measure", seq.alphabet)


def _net_counts(net: SamplingNet) -> np.ndarray:
    k = len(net.alphabet)
    return np.vstack([np.bincount(t, minlength=k) for t in net.items]).astype(float)


def net_trajectory(net: SamplingNet) -> Trajectory:
    """Empirical measure of each net item, indexed from 0."""
    points = _net_counts(net) / net.lengths[:, None]
    return Trajectory(np.arange(len(net)), points, "measure", net.alphabet)


def average_trajectory(net: SamplingNet, gamma: TestFunction) -> Trajectory:
    """Average of ``gamma`` over each net item."""
    _check_same(net.alphabet, gamma.alphabet)
    frequencies = net_trajectory(net).points
    return Trajectory(np.arange(len(net)), frequencies @ gamma.values.T, "vector")


def tail_windows(n_points: int, windows: int, tail_fraction: float) -> tuple[int, int]:
    """First tail index and common window size.

    The tail is the last ``ceil(tail_fraction * n)`` points, trimmed at
    its start so that it splits into ``windows`` equal windows.
    """
    if not 0 < tail_fraction <= 1:
        raise DataError("tail_fraction must lie in (0, 1]")
    if windows < 1:
        raise DataError("windows must be at least 1")
    tail = math.ceil(tail_fraction * n_points)
    size = tail // windows
    if size == 0:
        raise EstimationError(f"tail of {tail} points cannot fill {windows} windows")
    return n_points - size * windows, size


def _first_fit(traj: Trajectory, points: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Greedy clustering: each point joins the first founder within ``eps``
    or founds a new cluster.  Returns founder rows and per-point labels."""
    n, dim = points.shape
    labels = np.empty(n, dtype=np.int64)
    founders = np.empty((0, dim))
    i = 0
    while i < n:
        chunk = points[i:i + _CHUNK]
        if len(founders):
            close = traj.distances(chunk, founders) <= eps
            covered = close.any(axis=1)
            first = close.argmax(axis=1)
        else:
            covered = np.zeros(len(chunk), dtype=bool)
            first = np.zeros(len(chunk), dtype=np.int64)
        missing = np.flatnonzero(~covered)
        if len(missing) == 0:
            labels[i:i + len(chunk)] = first
            i += len(chunk)
            continue
        j = missing[0]
        labels[i:i + j] = first[:j]
        labels[i + j] = len(founders)
        founders = np.vstack([founders, chunk[j]])
        i += j + 1
    return founders, labels


def estimate_limit_set(traj: Trajectory, epsilon: float = DEFAULT_EPSILON,
                       windows: int = DEFAULT_WINDOWS,
                       tail_fraction: float = DEFAULT_TAIL_FRACTION) -> LimitSetEstimate:
    """Estimate the limit points of a trajectory.

    The tail is clustered greedily in visit order with radius
    ``epsilon``; clusters that are visited in every one of the
    ``windows`` tail windows are kept.  Each kept center is reported as
    the mean of its cluster members.
    """
    if epsilon <= 0:
        raise DataError("epsilon must be positive")
    if len(traj) < MIN_POINTS_PER_WINDOW * windows:
        raise EstimationError(
            f"need at least {MIN_POINTS_PER_WINDOW * windows} points for {windows} windows, "
            f"got {len(traj)}")
    start, size = tail_windows(len(traj), windows, tail_fraction)
    tail = traj.points[start:]
    _, labels = _first_fit(traj, tail, epsilon)
    n_clusters = labels.max() + 1
    window_of = np.arange(len(tail)) // size
    visits = np.zeros((n_clusters, windows), dtype=np.int64)
    np.add.at(visits, (labels, window_of), 1)
    keep = np.flatnonzero((visits > 0).all(axis=1))
    if len(keep) == 0:
        raise EstimationError("no cluster is revisited in every tail window")
    centers = np.vstack([tail[labels == c].mean(axis=0) for c in keep])
    return LimitSetEstimate(centers, float(epsilon), int(windows), visits[keep],
                            traj.kind, traj.alphabet, int(start))


def tail_path_connected(traj: Trajectory, estimate: LimitSetEstimate) -> bool:
    """True when the tail moves in steps no larger than the clustering
    radius, so any two retained centers are joined by an epsilon-chain
    of observed points."""
    steps = traj.steps()[estimate.tail_start:]
    return bool(len(steps) == 0 or steps.max() <= estimate.epsilon)


def step_bound_violations(traj: Trajectory) -> np.ndarray:
    """Positions where a prefix trajectory moves more than allowed.

    Between prefix lengths ``n`` and ``n + s`` the frequencies move by at
    most ``s / (n + s)`` in TV; with ``s = 1`` this is ``1 / (n + 1)``.
    """
    n = traj.indices
    bound = np.diff(n) / n[1:]
    return np.flatnonzero(traj.steps() > bound + IDENT_TOL)


@dataclass(frozen=True, eq=False)
class Witness:
    """A test function that tells two regularities apart.

    ``gamma`` holds one indicator row per symbol; ``best_row`` is the row
    whose one-dimensional image sets are farthest apart.
    """

    gamma: TestFunction
    best_row: int
    separation: float
    images1: np.ndarray
    images2: np.ndarray

    @property
    def best_symbol(self) -> str:
        return self.gamma.alphabet.symbols[self.best_row]


def _hausdorff_1d(a: np.ndarray, b: np.ndarray, convex_a: bool, convex_b: bool) -> float:
    if convex_a and convex_b:
        return float(max(abs(a.min() - b.min()), abs(a.max() - b.max())))

    def directed(x, y, y_convex):
        if y_convex:
            lo, hi = y.min(), y.max()
            return float(np.max(np.maximum(0.0, np.maximum(lo - x, x - hi))))
        return float(np.abs(x[:, None] - y[None, :]).min(axis=1).max())

    # the sup over an interval against a finite set is attained at an
    # endpoint or at a midpoint between neighbouring points of the set
    xa = a if not convex_a else _interval_probe(a, b)
    xb = b if not convex_b else _interval_probe(b, a)
    return max(directed(xa, b, convex_b), directed(xb, a, convex_a))


def _interval_probe(interval: np.ndarray, others: np.ndarray) -> np.ndarray:
    lo, hi = interval.min(), interval.max()
    s = np.sort(others)
    mids = (s[1:] + s[:-1]) / 2
    return np.concatenate([[lo, hi], mids[(mids > lo) & (mids < hi)]])


def separating_function(P1: Regularity, P2: Regularity) -> Witness:
    """Coordinate indicators, which separate any two distinct regularities
    on a finite alphabet, plus the single most separating row."""
    _check_same(P1.alphabet, P2.alphabet)
    if hausdorff(P1, P2) <= IDENT_TOL:
        raise PreconditionError("the regularities coincide; no separating function exists")
    gamma = TestFunction.coordinates(P1.alphabet)
    m1, m2 = P1.matrix, P2.matrix
    gaps = [_hausdorff_1d(m1[:, i], m2[:, i], P1.convex, P2.convex)
            for i in range(len(P1.alphabet))]
    gaps = np.array(gaps)
    # rows separating equally well (up to rounding) resolve to the earlier symbol
    best = int(np.flatnonzero(gaps >= gaps.max() - IDENT_TOL)[0])
    return Witness(gamma, best, float(gaps[best]), m1, m2)


@dataclass(frozen=True, eq=False)
class EquivalenceVerdict:
    equivalent: bool
    distance: float
    estimate1: Regularity
    estimate2: Regularity
    witness: Witness | None = None
    battery_max: float | None = None


def stream_trajectory(stream: SamplingNet | SymbolSequence, stride: int = 1) -> Trajectory:
    """Net trajectory of a net, prefix trajectory of a sequence."""
    if isinstance(stream, SymbolSequence):
        return prefix_trajectory(stream, stride)
    return net_trajectory(stream)


def s_equivalent(stream1: SamplingNet | SymbolSequence, stream2: SamplingNet | SymbolSequence,
                 epsilon: float = DEFAULT_EPSILON, windows: int = DEFAULT_WINDOWS,
                 tail_fraction: float = DEFAULT_TAIL_FRACTION, stride: int = 1,
                 battery: int = 0, seed: int = 0) -> EquivalenceVerdict:
    """Decide statistical equivalence through estimated regularities.

    Nets are compared through their item frequencies, sequences through
    their prefix frequencies.  Equivalent when the two estimates are
    within ``2 * epsilon`` in Hausdorff distance; otherwise the verdict
    carries a separating witness.  With ``battery > 0`` that many random
    test functions (entries in [-1, 1], seeded) are pushed through both
    streams as a cross-check and the largest gap between the averaged
    limit sets is recorded.
    """
    _check_same(stream1.alphabet, stream2.alphabet)
    traj1 = stream_trajectory(stream1, stride)
    traj2 = stream_trajectory(stream2, stride)
    est1 = estimate_limit_set(traj1, epsilon, windows, tail_fraction).to_regularity()
    est2 = estimate_limit_set(traj2, epsilon, windows, tail_fraction).to_regularity()
    distance = hausdorff(est1, est2)
    battery_max = None
    if battery:
        rng = np.random.default_rng(seed)
        k = len(stream1.alphabet)
        gaps = []
        for _ in range(battery):
            m = int(rng.integers(1, 4))
            values = rng.uniform(-1, 1, size=(m, k))
            a = Trajectory(traj1.indices, traj1.points @ values.T, "vector")
            b = Trajectory(traj2.indices, traj2.points @ values.T, "vector")
            a = estimate_limit_set(a, epsilon, windows, tail_fraction)
            b = estimate_limit_set(b, epsilon, windows, tail_fraction)
            gaps.append(point_set_hausdorff(a.centers, b.centers))
        battery_max = float(max(gaps))
    if distance <= 2 * epsilon:
        return EquivalenceVerdict(True, distance, est1, est2, None, battery_max)
    witness = separating_function(est1, est2)
    return EquivalenceVerdict(False, distance, est1, est2, witness, battery_max)
