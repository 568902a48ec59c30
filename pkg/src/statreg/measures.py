"""Probability measures and regularities on a finite alphabet.

A measure is a probability vector indexed by the symbols of an
:class:`Alphabet`.  A :class:`Regularity` is a nonempty finite set of
measures, optionally standing for the convex hull of its points.  On a
finite alphabet the weak-* topology of finitely additive probabilities
is the norm topology of the simplex, so everything here is measured with
the total variation distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from statreg.errors import AlphabetMismatch, DataError, PreconditionError

#: slack accepted on user supplied probability vectors
INPUT_TOL = 1e-6
#: tolerance for floating point comparisons of computed quantities
ARITH_TOL = 1e-9
#: two measures closer than this are the same measure
IDENT_TOL = 1e-12

MAX_SUBALGEBRA_SIZE = 20


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of symbol labels; the order fixes coordinates."""

    symbols: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        if not symbols:
            raise DataError("alphabet must contain at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise DataError(f"alphabet labels are not unique: {list(symbols)}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise DataError(f"symbol {symbol!r} not in alphabet {list(self.symbols)}") from None

    def encode(self, symbols: Iterable[str]) -> np.ndarray:
        """Map labels to integer codes."""
        index = self._index
        try:
            return np.fromiter((index[s] for s in symbols), dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"symbol {exc.args[0]!r} not in alphabet {list(self.symbols)}") from None

    def decode(self, codes: Iterable[int]) -> list[str]:
        symbols = self.symbols
        return [symbols[int(c)] for c in codes]


def _check_same(a: Alphabet, b: Alphabet) -> None:
    if a.symbols != b.symbols:
        raise AlphabetMismatch(f"alphabet mismatch: {list(a.symbols)} vs {list(b.symbols)}")


@dataclass(frozen=True, eq=False)
class Measure:
    """A probability vector over an alphabet.

    Build instances with :func:`make_measure`; the constructor assumes
    the weights are already a valid probability vector.
    """

    alphabet: Alphabet
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(self.weights))

    def __repr__(self):
        body = ", ".join(f"{s}={w:.6g}" for s, w in zip(self.alphabet, self.weights))
        return f"Measure({body})"

    def prob(self, subset: Iterable[str]) -> float:
        """Probability of a set of symbols."""
        idx = sorted({self.alphabet.index(s) for s in subset})
        return float(self.weights[idx].sum())

    @classmethod
    def dirac(cls, alphabet: Alphabet, symbol: str) -> "Measure":
        weights = np.zeros(len(alphabet))
        weights[alphabet.index(symbol)] = 1.0
        return cls(alphabet, weights)

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "Measure":
        return cls(alphabet, np.full(len(alphabet), 1.0 / len(alphabet)))


def make_measure(alphabet: Alphabet, weights: Sequence[float], normalize: bool = True) -> Measure:
    """Validate, clamp and renormalize a weight vector.

    Weights down to ``-1e-12`` are clamped to zero.  With ``normalize``
    any vector of positive total mass is rescaled to sum to one;
    without it the total must already be within ``1e-6`` of one.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] != len(alphabet):
        raise DataError(f"expected {len(alphabet)} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise DataError("weights must be finite")
    if np.any(w < -IDENT_TOL):
        raise DataError(f"negative weight {w.min()!r}")
    w = np.clip(w, 0.0, None)
    total = w.sum()
    if total <= 0.0:
        raise DataError("weights sum to zero")
    if not normalize and abs(total - 1.0) > INPUT_TOL:
        raise DataError(f"weights sum to {total!r}, not 1")
    return Measure(alphabet, w / total)


@dataclass(frozen=True)
class RationalMeasure:
    """Measure with weights ``numerators / denominator``."""

    alphabet: Alphabet
    numerators: tuple[int, ...]
    denominator: int

    def __post_init__(self):
        nums = tuple(int(n) for n in self.numerators)
        if len(nums) != len(self.alphabet):
            raise DataError("one numerator per symbol required")
        if self.denominator <= 0:
            raise DataError("denominator must be positive")
        if any(n < 0 for n in nums):
            raise DataError("numerators must be nonnegative")
        if sum(nums) != self.denominator:
            raise DataError(f"numerators sum to {sum(nums)}, not {self.denominator}")
        object.__setattr__(self, "numerators", nums)

    def to_measure(self) -> Measure:
        return Measure(self.alphabet, np.array(self.numerators, dtype=float) / self.denominator)


@dataclass(frozen=True, eq=False)
class Regularity:
    """Nonempty finite set of measures.

    With ``convex`` set the regularity is the closed convex hull of the
    points, otherwise it is exactly the point set.
    """

    alphabet: Alphabet
    points: tuple[Measure, ...]
    convex: bool = False

    def __post_init__(self):
        points = tuple(self.points)
        if not points:
            raise DataError("a regularity needs at least one measure")
        for p in points:
            _check_same(self.alphabet, p.alphabet)
        object.__setattr__(self, "points", points)
        if not self.convex and len(points) > 1:
            d = _pairwise_tv(self.matrix, self.matrix)
            iu = np.triu_indices(len(points), 1)
            if np.any(d[iu] <= IDENT_TOL):
                raise DataError("points of a non-convex regularity must be pairwise distinct")

    @property
    def matrix(self) -> np.ndarray:
        """Points stacked as rows, shape ``(len(points), len(alphabet))``."""
        return np.vstack([p.weights for p in self.points])

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self):
        kind = "hull" if self.convex else "points"
        return f"Regularity({kind}, {list(self.points)})"

    @classmethod
    def from_weights(cls, alphabet: Alphabet, rows, convex: bool = False,
                     dedupe: bool = False, normalize: bool = True) -> "Regularity":
        points = [make_measure(alphabet, row, normalize=normalize) for row in rows]
        if dedupe:
            points = _dedupe(points)
        return cls(alphabet, tuple(points), convex)

    @classmethod
    def simplex(cls, alphabet: Alphabet) -> "Regularity":
        """All of the probability simplex, as the hull of the Diracs."""
        return cls(alphabet, tuple(Measure.dirac(alphabet, s) for s in alphabet), convex=True)


def _dedupe(points: Sequence[Measure]) -> list[Measure]:
    kept: list[Measure] = []
    for p in points:
        if all(tv_distance(p, q) > IDENT_TOL for q in kept):
            kept.append(p)
    return kept


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Bounded map from the alphabet to R^m, stored as an m x |X| matrix."""

    __test__ = False  # keep pytest from collecting this class

    alphabet: Alphabet
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != len(self.alphabet) or v.shape[0] < 1:
            raise DataError(f"test function must be m x {len(self.alphabet)}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("test function entries must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def coordinates(cls, alphabet: Alphabet) -> "TestFunction":
        """Indicator of each symbol, one row per symbol."""
        return cls(alphabet, np.eye(len(alphabet)))


def expectation(p: Measure, gamma: TestFunction) -> np.ndarray:
    """``(p(gamma_1), ..., p(gamma_m))``."""
    _check_same(p.alphabet, gamma.alphabet)
    return gamma.values @ p.weights


def tv_distance(p: Measure, q: Measure) -> float:
    """Total variation distance, i.e. half the L1 distance."""
    _check_same(p.alphabet, q.alphabet)
    return 0.5 * float(np.abs(p.weights - q.weights).sum())


def _pairwise_tv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 0.5 * np.abs(a[:, None, :] - b[None, :, :]).sum(axis=2)


def tv_to_hull(x: np.ndarray, vertices: np.ndarray) -> float:
    """TV distance from a probability vector to the convex hull of rows.

    Solved exactly as a small linear program over mixture weights and
    coordinate slacks.
    """
    direct = 0.5 * np.abs(vertices - x).sum(axis=1)
    if len(vertices) == 1 or direct.min() <= IDENT_TOL:
        return float(direct.min())
    k, n = vertices.shape
    # variables: mixture weights (k), slacks (n); minimise half the slack sum
    c = np.concatenate([np.zeros(k), np.full(n, 0.5)])
    vt = vertices.T
    eye = np.eye(n)
    a_ub = np.block([[vt, -eye], [-vt, -eye]])
    b_ub = np.concatenate([x, -x])
    a_eq = np.concatenate([np.ones(k), np.zeros(n)])[None, :]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"hull distance LP failed: {res.message}")
    return float(min(res.fun, direct.min()))


def barycentric_mesh(k: int, steps: int) -> np.ndarray:
    """All mixture weight vectors over ``k`` vertices with entries in
    multiples of ``1/steps``, in a fixed lexicographic order."""
    if k == 1:
        return np.ones((1, 1))
    rows = []
    for bars in combinations(range(steps + k - 1), k - 1):
        edges = (-1,) + bars + (steps + k - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.array(rows, dtype=float) / steps


_HULL_SAMPLE_BUDGET = 200_000


def _hull_samples(vertices: np.ndarray) -> np.ndarray:
    k = len(vertices)
    steps = 64
    while steps > 1 and _n_compositions(steps, k) > _HULL_SAMPLE_BUDGET:
        steps //= 2
    return barycentric_mesh(k, steps) @ vertices


def _n_compositions(steps: int, k: int) -> int:
    from math import comb
    return comb(steps + k - 1, k - 1)


def _directed(a: Regularity, b: Regularity) -> float:
    """sup over a of the distance to b."""
    va, vb = a.matrix, b.matrix
    if b.convex:
        # distance to a convex set is convex, so the sup over a hull sits at a vertex
        return max(tv_to_hull(x, vb) for x in va)
    if a.convex:
        # nonconvex objective; approximate the hull by a barycentric mesh
        va = _hull_samples(va)
    return float(_pairwise_tv(va, vb).min(axis=1).max())


def hausdorff(p1: Regularity, p2: Regularity) -> float:
    """Hausdorff distance between two regularities under TV.

    Exact when the second argument of each directed distance is a
    finite set or both sides are hulls.  The directed distance from a
    hull to a finite point set is evaluated on a barycentric mesh of
    the hull and is therefore accurate to the mesh resolution.
    """
    _check_same(p1.alphabet, p2.alphabet)
    return max(_directed(p1, p2), _directed(p2, p1))


def point_set_hausdorff(a: np.ndarray, b: np.ndarray, metric: str = "sup") -> float:
    """Hausdorff distance between finite point sets in R^m.

    ``metric`` is ``"sup"`` (Chebyshev) or ``"tv"`` (half L1).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    diff = np.abs(a[:, None, :] - b[None, :, :])
    if metric == "sup":
        d = diff.max(axis=2)
    elif metric == "tv":
        d = 0.5 * diff.sum(axis=2)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def image(P: Regularity, gamma: TestFunction) -> np.ndarray:
    """Expectations of ``gamma`` under every point of ``P``.

    Returns an array of shape ``(len(P), m)``.  For a convex ``P`` the
    rows are the images of the vertices and the image set is their hull.
    """
    _check_same(P.alphabet, gamma.alphabet)
    return P.matrix @ gamma.values.T


def _in_hull(x: np.ndarray, vertices: np.ndarray) -> bool:
    # nonnegative least squares with a heavily weighted sum-to-one row
    k = len(vertices)
    weight = 1e3
    a = np.vstack([vertices.T, np.full((1, k), weight)])
    b = np.concatenate([x, [weight]])
    _, residual = nnls(a, b)
    return residual <= ARITH_TOL


def convexify(P: Regularity) -> Regularity:
    """Convex regularity spanned by ``P``, reduced to its extreme points."""
    points = _dedupe(P.points)
    i = 0
    while len(points) > 1 and i < len(points):
        others = np.vstack([q.weights for j, q in enumerate(points) if j != i])
        if _in_hull(points[i].weights, others):
            del points[i]
        else:
            i += 1
    return Regularity(P.alphabet, tuple(points), convex=True)


@dataclass(frozen=True)
class StochasticStructure:
    """Events on which every measure of a regularity agrees.

    ``agreed`` holds the agreed events as bit masks over the alphabet
    (bit ``i`` is symbol ``i``) and ``values`` their common probability.
    ``atoms`` partition the alphabet and generate the agreed algebra
    returned; when the agreed events do not form an algebra themselves
    (``is_algebra`` false) the atoms generate a maximal algebra found
    greedily inside them.
    """

    alphabet: Alphabet
    agreed: np.ndarray
    values: np.ndarray
    is_algebra: bool
    atoms: tuple[frozenset, ...]
    atom_values: tuple[float, ...]

    @property
    def stochastic(self) -> bool:
        return len(self.atoms) > 1

    def events(self) -> list[frozenset]:
        return [self._labels(int(m)) for m in self.agreed]

    def value(self, subset: Iterable[str]) -> float | None:
        """Agreed probability of ``subset``, or None if the measures disagree."""
        mask = 0
        for s in subset:
            mask |= 1 << self.alphabet.index(s)
        hit = np.nonzero(self.agreed == mask)[0]
        return float(self.values[hit[0]]) if len(hit) else None

    def _labels(self, mask: int) -> frozenset:
        return frozenset(s for i, s in enumerate(self.alphabet) if mask >> i & 1)


def _subset_sums(matrix: np.ndarray) -> np.ndarray:
    # row ``mask`` holds every point's probability of the event ``mask``
    sums = np.zeros((1, matrix.shape[0]))
    for column in matrix.T:
        sums = np.vstack([sums, sums + column])
    return sums


def _algebra_masks(blocks: Sequence[int]) -> np.ndarray:
    masks = np.zeros(1, dtype=np.int64)
    for b in blocks:
        masks = np.concatenate([masks, masks | b])
    return masks


def stochastic_subalgebra(P: Regularity, tol: float = ARITH_TOL) -> StochasticStructure:
    """Find the events on which all measures of ``P`` agree.

    The regularity is stochastic with respect to the common measure when
    a non-trivial algebra of such events exists.
    """
    n = len(P.alphabet)
    if n > MAX_SUBALGEBRA_SIZE:
        raise PreconditionError(
            f"subset enumeration limited to {MAX_SUBALGEBRA_SIZE} symbols, got {n}")
    sums = _subset_sums(P.matrix)
    spread = sums.max(axis=1) - sums.min(axis=1)
    agreed = np.nonzero(spread <= tol)[0].astype(np.int64)
    values = sums[agreed].mean(axis=1)
    full = (1 << n) - 1

    # atoms of the algebra generated by the agreed events
    membership = (agreed[None, :] >> np.arange(n)[:, None]) & 1
    classes: dict[bytes, int] = {}
    for i in range(n):
        key = membership[i].tobytes()
        classes[key] = classes.get(key, 0) | (1 << i)
    generated = sorted(classes.values())
    is_algebra = len(agreed) == 1 << len(generated)

    if is_algebra:
        blocks = generated
    else:
        agreed_set = set(agreed.tolist())
        blocks = [full]
        candidates = sorted((m for m in agreed_set if m not in (0, full)),
                            key=lambda m: (bin(m).count("1"), m))
        for a in candidates:
            if all(b & a in (0, b) for b in blocks):
                continue
            refined = [part for b in blocks for part in (b & a, b & ~a & full) if part]
            if all(int(m) in agreed_set for m in _algebra_masks(refined)):
                blocks = sorted(refined)

    lookup = dict(zip(agreed.tolist(), values.tolist()))
    result = StochasticStructure(P.alphabet, agreed, values, is_algebra, (), ())
    atoms = tuple(result._labels(b) for b in blocks)
    atom_values = tuple(lookup[b] for b in blocks)
    return StochasticStructure(P.alphabet, agreed, values, is_algebra, atoms, atom_values)
