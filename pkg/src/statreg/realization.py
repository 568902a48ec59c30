"""Streams with a prescribed statistical regularity.

Two generators are provided.  :func:`net_realize` builds a sampling net
whose items are drawn fresh for every index, so any regularity (also a
disconnected one) is reachable.  :func:`sequence_realize` builds a single
sequence; prefix frequencies move by at most ``1/(n+1)`` per symbol, so
only connected targets can be realized that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from statreg.errors import DataError, PreconditionError
from statreg.measures import (
    Alphabet,
    Measure,
    RationalMeasure,
    Regularity,
    barycentric_mesh,
)

SEED_MAX = 2**64 - 1
#: refuse to materialize nets larger than this many symbols in memory
MAX_NET_SYMBOLS = 50_000_000


@dataclass(frozen=True, eq=False)
class SymbolSequence:
    """A finite prefix of a sequence over an alphabet, stored as codes."""

    alphabet: Alphabet
    codes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 1 or len(codes) == 0:
            raise DataError("a symbol sequence must be a nonempty 1-d array")
        if codes.min() < 0 or codes.max() >= len(self.alphabet):
            raise DataError("sequence contains codes outside the alphabet")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def symbols(self) -> list[str]:
        return self.alphabet.decode(self.codes)


@dataclass(frozen=True, eq=False)
class SamplingNet:
    """Sampling net indexed by the naturals.

    ``items[n]`` is the observation tuple at index ``n`` as an array of
    symbol codes; ``rounds`` and ``targets`` record which schedule round
    and which target point produced it.
    """

    alphabet: Alphabet
    items: tuple
    rounds: tuple = ()
    targets: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        items = tuple(np.asarray(t, dtype=np.int64) for t in self.items)
        if not items:
            raise DataError("a sampling net needs at least one item")
        k = len(self.alphabet)
        for t in items:
            if t.ndim != 1 or len(t) == 0:
                raise DataError("net items must be nonempty tuples")
            if t.min() < 0 or t.max() >= k:
                raise DataError("net item contains codes outside the alphabet")
            t.setflags(write=False)
        lengths = np.array([len(t) for t in items])
        if np.any(np.diff(lengths) < 0):
            raise DataError("net item lengths must be nondecreasing")
        rounds = tuple(self.rounds) or (0,) * len(items)
        targets = tuple(self.targets) or tuple(range(len(items)))
        if len(rounds) != len(items) or len(targets) != len(items):
            raise DataError("rounds/targets must align with items")
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "rounds", rounds)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([len(t) for t in self.items])


@dataclass(frozen=True)
class RealizationSchedule:
    """Countable refinement schedule for :func:`net_realize`.

    Round ``r`` (counting from 0) uses target spacing ``eps0 * 2**-r``
    and tuple length ``d0 * 2**r``; the target set is swept ``sweeps``
    times per round.
    """

    rounds: int
    eps0: float = 1.0
    d0: int = 16
    sweeps: int = 1

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise DataError("schedule needs at least one round")
        if not self.eps0 > 0:
            raise DataError("eps0 must be positive")
        if int(self.d0) < 1:
            raise DataError("d0 must be a positive integer")
        if int(self.sweeps) < 1:
            raise DataError("sweeps must be a positive integer")

    def epsilon(self, r: int) -> float:
        return self.eps0 * 2.0 ** -r

    def denominator(self, r: int) -> int:
        return int(self.d0) * 2**r

    def as_dict(self) -> dict:
        return {"rounds": int(self.rounds), "eps0": float(self.eps0),
                "d0": int(self.d0), "sweeps": int(self.sweeps)}


def _largest_remainder(weights: np.ndarray, denominator: int) -> np.ndarray:
    scaled = weights * denominator
    counts = np.floor(scaled + 1e-9).astype(np.int64)
    remainders = np.round(scaled - counts, 12)
    deficit = denominator - int(counts.sum())
    # stable sorts keep the lower index first on equal remainders
    if deficit > 0:
        order = np.argsort(-remainders, kind="stable")
        counts[order[:deficit]] += 1
    elif deficit < 0:
        order = np.argsort(remainders, kind="stable")
        order = order[counts[order] > 0]
        counts[order[:-deficit]] -= 1
    return counts


def rationalize(p: Measure, denominator: int) -> RationalMeasure:
    """Closest measure with the given denominator.

    Largest-remainder rounding of ``denominator * p`` minimises the L1
    error over all compositions of ``denominator``; ties go to the
    earlier symbol.  The TV error is at most ``len(alphabet) / (2 * D)``.
    """
    if int(denominator) != denominator or denominator <= 0:
        raise DataError(f"denominator must be a positive integer, got {denominator!r}")
    counts = _largest_remainder(p.weights, int(denominator))
    return RationalMeasure(p.alphabet, tuple(counts.tolist()), int(denominator))


def _round_robin(numerators) -> np.ndarray:
    numerators = np.asarray(numerators, dtype=np.int64)
    symbols = np.repeat(np.arange(len(numerators)), numerators)
    passes = np.concatenate([np.arange(n) for n in numerators]) if len(symbols) else symbols
    return symbols[np.lexsort((symbols, passes))]


def _balanced(numerators) -> np.ndarray:
    # occurrence j of symbol i ideally sits at (j + 1/2) / n_i of the tuple
    numerators = np.asarray(numerators, dtype=np.int64)
    symbols = np.repeat(np.arange(len(numerators)), numerators)
    slot = np.concatenate([np.arange(n) for n in numerators]) + 0.5
    keys = slot / np.repeat(numerators, numerators)
    return symbols[np.lexsort((symbols, keys))]


_ARRANGEMENTS = {"round_robin": _round_robin, "balanced": _balanced}


def arrange(q: RationalMeasure, arrangement: str = "round_robin") -> np.ndarray:
    """Symbol codes of a tuple whose empirical measure is exactly ``q``."""
    try:
        return _ARRANGEMENTS[arrangement](q.numerators)
    except KeyError:
        raise ValueError(f"unknown arrangement {arrangement!r}") from None


def tuple_from_rational(q: RationalMeasure, arrangement: str = "round_robin") -> tuple[str, ...]:
    """Tuple of length ``q.denominator`` realizing ``q`` exactly.

    ``round_robin`` cycles through the symbols that still have copies
    left; ``balanced`` spreads each symbol evenly so that every prefix of
    length ``t`` is within ``O(len(alphabet) / t)`` of ``q``.
    """
    return tuple(q.alphabet.decode(arrange(q, arrangement)))


def target_net(P: Regularity, eps: float) -> np.ndarray:
    """Finite set of targets covering ``P`` at resolution ``eps``.

    Point sets are returned as is.  Hulls are meshed with mixture weights
    in steps of ``1/ceil(1/eps)``.
    """
    vertices = P.matrix
    if not P.convex or len(vertices) == 1:
        return vertices
    steps = max(1, math.ceil(1.0 / eps - 1e-9))
    return barycentric_mesh(len(vertices), steps) @ vertices


def net_realize(P: Regularity, schedule: RealizationSchedule, seed: int | None = None) -> SamplingNet:
    """Sampling net whose regularity is ``P``.

    Each round sweeps the target net of ``P`` and emits, per target, a
    fresh tuple realizing its rationalization at the round denominator.
    With a ``seed`` the visiting order inside every sweep is shuffled;
    the limit set does not depend on it.
    """
    rng = np.random.default_rng(seed) if seed is not None else None
    nets = [target_net(P, schedule.epsilon(r)) for r in range(int(schedule.rounds))]
    size = sum(len(net) * schedule.denominator(r) for r, net in enumerate(nets)) * schedule.sweeps
    if size > MAX_NET_SYMBOLS:
        raise PreconditionError(
            f"schedule would emit {size} symbols (limit {MAX_NET_SYMBOLS}); use fewer rounds or a smaller d0")
    items, rounds, targets = [], [], []
    for r, net in enumerate(nets):
        denominator = schedule.denominator(r)
        tuples = [_round_robin(_largest_remainder(w, denominator)) for w in net]
        for _ in range(int(schedule.sweeps)):
            order = rng.permutation(len(net)) if rng is not None else range(len(net))
            for j in order:
                items.append(tuples[j])
                rounds.append(r)
                targets.append(int(j))
    meta = {
        "generator": "net_realize",
        "schedule": schedule.as_dict(),
        "seed": seed,
        "convex": P.convex,
        "target": P.matrix.tolist(),
    }
    return SamplingNet(P.alphabet, tuple(items), tuple(rounds), tuple(targets), meta)


def steering_block_length(n: int, eps: float) -> int:
    """Symbols needed after a prefix of length ``n`` so that a block with
    empirical measure ``q`` pulls the prefix frequencies within ``eps`` of
    ``q`` (up to the block's own rounding error)."""
    if not 0 < eps < 1:
        raise DataError("eps must lie in (0, 1)")
    # exact rational arithmetic keeps e.g. 100 * 0.9 / 0.1 from rounding up
    e = Fraction(eps).limit_denominator(10**12)
    return max(1, math.ceil(n * (1 - e) / e))


def _is_connected(P: Regularity, path: bool) -> bool:
    return len(P) == 1 or P.convex or path


def _visit_order(k: int, path: bool) -> list[int]:
    if k == 1:
        return [0]
    if path:
        # back and forth along the declared path; jumping from the last
        # point to the first would leave the set
        return list(range(k)) + list(range(k - 2, 0, -1))
    return list(range(k))


def sequence_realize(P: Regularity, total_length: int, eps: float, path: bool = False) -> SymbolSequence:
    """Single sequence whose prefix frequencies cycle through ``P``.

    ``P`` must be connected as represented: a single measure, a hull, or
    a point set that the caller declares to be an ordered path
    (``path=True``).  The sequence is built from blocks; each block moves
    the prefix frequencies to within ``eps`` of the next target.
    """
    if not _is_connected(P, path):
        raise PreconditionError(
            "a single sequence has prefix frequencies moving by at most 1/(n+1) per "
            "symbol, so its limit set is connected; this finite point set is not. "
            "Use a sampling net, or declare the points an ordered path.")
    if total_length < 1:
        raise DataError("total_length must be positive")
    if not 0 < eps < 1:
        raise DataError("eps must lie in (0, 1)")
    targets = target_net(P, eps)
    order = _visit_order(len(targets), path)
    k = len(P.alphabet)

    blocks, block_targets = [], []
    n = 0
    step = 0
    while n < total_length:
        j = order[step % len(order)]
        m = math.ceil(k / eps) if n == 0 else steering_block_length(n, eps)
        m = min(m, total_length - n)
        blocks.append(_balanced(_largest_remainder(targets[j], m)))
        block_targets.append([n, int(j)])
        n += m
        step += 1
    meta = {
        "generator": "sequence_realize",
        "epsilon": float(eps),
        "path": bool(path),
        "convex": P.convex,
        "target": P.matrix.tolist(),
        "blocks": block_targets,
    }
    return SymbolSequence(P.alphabet, np.concatenate(blocks), meta)


def iid_generate(mu: Measure, n: int, seed: int) -> SymbolSequence:
    """``n`` independent draws from ``mu`` with a seeded PCG64 stream."""
    if n < 1:
        raise DataError("n must be at least 1")
    if not 0 <= int(seed) <= SEED_MAX:
        raise DataError("seed must be an unsigned 64-bit integer")
    rng = np.random.default_rng(int(seed))
    codes = rng.choice(len(mu.alphabet), size=int(n), p=mu.weights)
    meta = {"generator": "iid_generate", "seed": int(seed), "measure": mu.weights.tolist()}
    return SymbolSequence(mu.alphabet, codes, meta)
