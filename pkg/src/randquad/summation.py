"""Compensated floating-point accumulation.

Quadrature error ladders in this package reach ~1e-9; naive left-to-right
summation noise at that scale would corrupt fitted convergence orders, so
every quadrature sum goes through the Neumaier (improved Kahan) accumulator
below.  ``compensated_sum`` and ``compensated_cumsum`` share the exact same
sequence of floating-point operations, which is what lets the randomised
rule and its prefix (partial-sum) variant agree bit for bit on the final
element.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np


class NeumaierSum:
    """Running compensated sum.

    Keeps a correction term alongside the running total so that the error
    of each addition is captured instead of lost.  ``value`` folds the
    correction back in.
    """

    __slots__ = ("_total", "_carry")

    def __init__(self) -> None:
        self._total = 0.0
        self._carry = 0.0

    def add(self, x: float) -> None:
        t = self._total + x
        if abs(self._total) >= abs(x):
            self._carry += (self._total - t) + x
        else:
            self._carry += (x - t) + self._total
        self._total = t

    @property
    def value(self) -> float:
        return self._total + self._carry


def compensated_sum(values: Iterable[float]) -> float:
    """Sum ``values`` with Neumaier compensation."""
    acc = NeumaierSum()
    for x in values:
        acc.add(x)
    return acc.value


def compensated_cumsum(values: Iterable[float]) -> np.ndarray:
    """All running compensated partial sums of ``values``.

    The k-th entry equals ``compensated_sum(values[:k+1])`` bit for bit:
    both functions perform the identical additions in the identical order.
    """
    acc = NeumaierSum()
    out = []
    for x in values:
        acc.add(x)
        out.append(acc.value)
    return np.asarray(out, dtype=np.float64)
