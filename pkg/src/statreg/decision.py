"""Decision criteria against a statistical regularity of the parameter.

Three criteria rank decisions by a loss value, lower is better:

* minimax: the worst loss over all parameter values,
* Bayes: the expected loss under a single distribution,
* regularity: the worst expected loss over a set of distributions.

The regularity criterion contains the other two as the cases of the full
simplex and of a single measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from statreg.empirics import (
    DEFAULT_TAIL_FRACTION,
    DEFAULT_WINDOWS,
    Trajectory,
    average_trajectory,
    tail_windows,
)
from statreg.errors import AlphabetMismatch, DataError
from statreg.measures import IDENT_TOL, Alphabet, Measure, Regularity, TestFunction
from statreg.realization import SamplingNet


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """Bounded loss ``L(theta, u)``; rows are parameter values, columns decisions."""

    theta_labels: tuple[str, ...]
    decision_labels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        theta = tuple(str(t) for t in self.theta_labels)
        decisions = tuple(str(u) for u in self.decision_labels)
        if values.shape != (len(theta), len(decisions)) or values.size == 0:
            raise DataError(f"loss values of shape {values.shape} do not match "
                            f"{len(theta)} parameter and {len(decisions)} decision labels")
        if not np.all(np.isfinite(values)):
            raise DataError("loss values must be finite")
        if len(set(decisions)) != len(decisions):
            raise DataError("decision labels must be unique")
        values.setflags(write=False)
        object.__setattr__(self, "theta_labels", theta)
        object.__setattr__(self, "decision_labels", decisions)
        object.__setattr__(self, "values", values)
        Alphabet(theta)  # validates uniqueness

    @property
    def theta(self) -> Alphabet:
        return Alphabet(self.theta_labels)

    def column(self, u: str) -> np.ndarray:
        try:
            return self.values[:, self.decision_labels.index(u)]
        except ValueError:
            raise DataError(f"unknown decision {u!r}; known: {list(self.decision_labels)}") from None


@dataclass(frozen=True, eq=False)
class CriterionReport:
    kind: str
    decision_labels: tuple[str, ...]
    values: np.ndarray
    argmin: tuple[str, ...]
    worst_case: dict = field(default_factory=dict)

    def value(self, u: str) -> float:
        return float(self.values[self.decision_labels.index(u)])

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "values": {u: float(v) for u, v in zip(self.decision_labels, self.values)},
            "argmin": list(self.argmin),
        }
        if self.worst_case:
            out["worst_case"] = {u: list(ix) for u, ix in self.worst_case.items()}
        return out


def _report(kind: str, L: LossMatrix, values: np.ndarray, worst_case=None) -> CriterionReport:
    best = values.min()
    argmin = sorted(u for u, v in zip(L.decision_labels, values) if v - best <= IDENT_TOL)
    return CriterionReport(kind, L.decision_labels, values, tuple(argmin), worst_case or {})


def _check_theta(L: LossMatrix, alphabet: Alphabet) -> None:
    if alphabet.symbols != L.theta_labels:
        raise AlphabetMismatch(
            f"parameter labels {list(L.theta_labels)} do not match {list(alphabet.symbols)}")


def minimax(L: LossMatrix) -> CriterionReport:
    """Worst loss per decision."""
    return _report("minimax", L, L.values.max(axis=0))


def bayes(L: LossMatrix, mu: Measure) -> CriterionReport:
    """Expected loss per decision under ``mu``."""
    _check_theta(L, mu.alphabet)
    return _report("bayes", L, mu.weights @ L.values)


def regularity_criterion(L: LossMatrix, P: Regularity) -> CriterionReport:
    """Worst expected loss over the measures of ``P``.

    For a hull the supremum of the linear expected loss is attained at a
    vertex, so the maximum over the stored points is exact.  The report
    lists, per decision, the indices of the points attaining it.
    """
    _check_theta(L, P.alphabet)
    expected = P.matrix @ L.values  # points x decisions
    values = expected.max(axis=0)
    worst = {u: tuple(int(i) for i in np.flatnonzero(values[j] - expected[:, j] <= IDENT_TOL))
             for j, u in enumerate(L.decision_labels)}
    return _report("regularity", L, values, worst)


@dataclass(frozen=True, eq=False)
class ThresholdReport:
    """Finite-window check of how the running average loss straddles the
    regularity criterion value.

    ``r1_exceeded_cofinally``: every tail window has an average above r1.
    ``r2_respected_eventually``: every tail average is below r2.
    """

    decision: str
    r1: float
    r2: float
    r1_exceeded_cofinally: bool
    r2_respected_eventually: bool
    empirical_limsup: float
    trajectory: Trajectory
    tail_start: int

    def as_dict(self) -> dict:
        return {
            "decision": self.decision,
            "r1": self.r1,
            "r2": self.r2,
            "r1_exceeded_cofinally": self.r1_exceeded_cofinally,
            "r2_respected_eventually": self.r2_respected_eventually,
            "empirical_limsup": self.empirical_limsup,
        }


def verify_proposition3(net: SamplingNet, L: LossMatrix, u: str, r1: float, r2: float,
                        tail_fraction: float = DEFAULT_TAIL_FRACTION,
                        windows: int = DEFAULT_WINDOWS) -> ThresholdReport:
    """Average loss of decision ``u`` along a net over the parameter set.

    Does not require r1 and r2 to bracket the criterion value; violated
    configurations are worth exploring too.  The empirical limsup is the
    largest average in the final window.
    """
    _check_theta(L, net.alphabet)
    gamma = TestFunction(net.alphabet, L.column(u)[None, :])
    traj = average_trajectory(net, gamma)
    start, size = tail_windows(len(traj), windows, tail_fraction)
    tail = traj.points[start:, 0]
    per_window = tail.reshape(windows, size)
    exceeded = bool((per_window > r1).any(axis=1).all())
    eventually = traj.points[len(traj) - math.ceil(tail_fraction * len(traj)):, 0]
    respected = bool((eventually < r2).all())
    limsup = float(per_window[-1].max())
    return ThresholdReport(u, float(r1), float(r2), exceeded, respected, limsup, traj, start)
