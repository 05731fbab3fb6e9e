"""Equidistant partitions and the two trapezoidal quadrature rules.

The classical rule (CTQ) evaluates the integrand at both endpoints of every
cell.  The randomised rule (RTQ) instead evaluates at a uniformly drawn
interior offset ``tau`` and at its reflection ``1 - tau`` about the cell
midpoint; averaging the two keeps the rule exact on affine functions while
the randomness averages out the cell-level error of rough integrands.

Both rules are deliberately implemented as written, with 2N integrand
evaluations per full partition, so their cost accounting stays symmetric.
``ctq`` accepts ``shared_nodes=True`` to switch to the N+1-evaluation
weighted form for timing studies.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .summation import compensated_cumsum, compensated_sum

CTQ = "CTQ"
RTQ = "RTQ"


class EvaluationError(ArithmeticError):
    """An integrand returned a non-finite value; the message names the node."""


@dataclass(frozen=True, eq=False)
class Partition:
    """Equidistant grid over [0, T] with N cells of width h = T/N."""

    total_time: float
    intervals: int
    step: float
    nodes: np.ndarray


def make_partition(total_time: float, intervals: int) -> Partition:
    """Build the equidistant partition of [0, total_time] with ``intervals`` cells.

    Raises:
        ValueError: if ``total_time`` is not a positive finite number or
            ``intervals`` is not a positive integer.
    """
    T = float(total_time)
    if not np.isfinite(T) or T <= 0.0:
        raise ValueError(f"total_time must be positive and finite, got {total_time!r}")
    N = int(intervals)
    if N != intervals or N < 1:
        raise ValueError(f"intervals must be a positive integer, got {intervals!r}")
    nodes = np.linspace(0.0, T, N + 1)
    nodes.setflags(write=False)
    return Partition(total_time=T, intervals=N, step=T / N, nodes=nodes)


@dataclass(frozen=True, eq=False)
class TauSequence:
    """I.i.d. Uniform(0,1) offsets and their complements 1 - tau.

    Complements are stored rather than recomputed: ``complement()`` is then
    an exact swap of the two arrays, so the rule's invariance under
    complementing offsets holds bit for bit (float addition is commutative).
    """

    values: np.ndarray
    complements: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        c = np.asarray(self.complements, dtype=np.float64)
        if v.ndim != 1 or v.shape != c.shape:
            raise ValueError("values and complements must be 1-d arrays of equal length")
        if v.size == 0:
            raise ValueError("TauSequence must contain at least one offset")
        for name, arr in (("values", v), ("complements", c)):
            if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                raise ValueError(f"TauSequence {name} must lie strictly inside (0, 1)")
        v.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "complements", c)

    @classmethod
    def from_values(cls, values, seed: int | None = None) -> "TauSequence":
        v = np.asarray(values, dtype=np.float64)
        return cls(values=v, complements=1.0 - v, seed=seed)

    def complement(self) -> "TauSequence":
        """The sequence with every tau replaced by 1 - tau."""
        return TauSequence(values=self.complements, complements=self.values, seed=self.seed)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class Integrand:
    """An evaluable function on [0, total_time].

    ``evaluator`` must accept a 1-d float64 array of times and return the
    values as an array of the same length (shape ``(n, d)`` for vector
    integrands).  Evaluation must be pure: same times, same values.

    ``exact_prefix_integral`` maps t to the integral over [0, t]; when set,
    ``exact_integral`` should equal its value at ``total_time``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    total_time: float
    label: str = ""
    exact_integral: float | None = None
    exact_derivative: Callable[[np.ndarray], np.ndarray] | None = None
    exact_prefix_integral: Callable[[float], float] | None = None
    dimension: int = 1


@dataclass(frozen=True, eq=False)
class QuadratureValue:
    """Result of one quadrature rule application."""

    value: float
    rule: str
    evaluations: int


def _evaluate(g: Integrand, times: np.ndarray, what: str) -> np.ndarray:
    out = np.asarray(g.evaluator(times), dtype=np.float64)
    if out.shape[: times.ndim] != times.shape:
        raise ValueError(
            f"integrand {g.label!r} returned shape {out.shape} for {times.shape[0]} {what} points"
        )
    finite = np.isfinite(out)
    if not finite.all():
        bad = np.nonzero(~finite.reshape(finite.shape[0], -1).all(axis=1))[0][0]
        raise EvaluationError(
            f"integrand {g.label!r} returned a non-finite value at node t={times[bad]!r}"
        )
    return out


def _cell_terms_ctq(g: Integrand, part: Partition) -> np.ndarray:
    left = _evaluate(g, part.nodes[:-1], "left")
    right = _evaluate(g, part.nodes[1:], "right")
    return left + right


def _cell_terms_rtq(g: Integrand, part: Partition, tau: TauSequence) -> np.ndarray:
    n = part.intervals
    if len(tau) < n:
        raise ValueError(f"TauSequence has {len(tau)} offsets but the partition has {n} cells")
    lefts = part.nodes[:-1]
    a = _evaluate(g, lefts + tau.values[:n] * part.step, "offset")
    b = _evaluate(g, lefts + tau.complements[:n] * part.step, "complement-offset")
    return a + b


def _scaled_sum(cells: np.ndarray, half_step: float) -> float:
    if cells.ndim == 1:
        return half_step * compensated_sum(cells.tolist())
    # Vector-valued integrand: compensate each component independently.
    return half_step * np.array([compensated_sum(col.tolist()) for col in cells.T])


def ctq(g: Integrand, part: Partition, shared_nodes: bool = False) -> QuadratureValue:
    """Classical trapezoidal quadrature of ``g`` over ``part``.

    With ``shared_nodes=False`` (default) every cell evaluates both of its
    endpoints, 2N evaluations in total.  ``shared_nodes=True`` evaluates the
    N+1 distinct nodes once and applies trapezoidal weights; the value is
    the same up to rounding, only the cost accounting changes.
    """
    half_step = 0.5 * part.step
    if shared_nodes:
        vals = _evaluate(g, part.nodes, "grid")
        weighted = 2.0 * vals
        weighted[0] = vals[0]
        weighted[-1] = vals[-1]
        value = _scaled_sum(weighted, half_step)
        return QuadratureValue(value=value, rule=CTQ, evaluations=part.intervals + 1)
    cells = _cell_terms_ctq(g, part)
    return QuadratureValue(value=_scaled_sum(cells, half_step), rule=CTQ, evaluations=2 * part.intervals)


def rtq(g: Integrand, part: Partition, tau: TauSequence) -> QuadratureValue:
    """Randomised trapezoidal quadrature: per-cell evaluation at tau and 1 - tau.

    Deterministic given ``tau``; extra offsets beyond the partition's cell
    count are ignored.
    """
    cells = _cell_terms_rtq(g, part, tau)
    half_step = 0.5 * part.step
    return QuadratureValue(value=_scaled_sum(cells, half_step), rule=RTQ, evaluations=2 * part.intervals)


def rtq_prefix(g: Integrand, part: Partition, tau: TauSequence) -> list[QuadratureValue]:
    """Partial sums of the randomised rule over the first n cells, n = 1..N.

    Element n approximates the integral over [0, t_n]; the final element is
    bit-for-bit equal to ``rtq(g, part, tau)`` because both run the same
    compensated accumulation.
    """
    cells = _cell_terms_rtq(g, part, tau)
    if cells.ndim != 1:
        raise ValueError("rtq_prefix supports scalar integrands only")
    half_step = 0.5 * part.step
    partials = compensated_cumsum(cells.tolist())
    return [
        QuadratureValue(value=float(half_step * p), rule=RTQ, evaluations=2 * (n + 1))
        for n, p in enumerate(partials)
    ]
