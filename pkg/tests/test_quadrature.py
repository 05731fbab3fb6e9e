import math

import numpy as np
import pytest

from randquad import (
    EvaluationError,
    Integrand,
    TauSequence,
    affine_integrand,
    constant_integrand,
    ctq,
    make_partition,
    power_integrand,
    rtq,
    rtq_prefix,
)
from randquad.random_sources import RngStream, sample_tau_sequence


def square_integrand(T=1.0):
    return Integrand(evaluator=lambda t: np.asarray(t, dtype=float) ** 2, total_time=T, label="t^2")


class TestMakePartition:
    def test_quarter_grid(self):
        part = make_partition(1.0, 4)
        assert part.step == 0.25
        np.testing.assert_array_equal(part.nodes, [0.0, 0.25, 0.5, 0.75, 1.0])

    def test_dyadic_step(self):
        assert make_partition(1.0, 2**5).step == 2.0**-5

    def test_single_interval(self):
        part = make_partition(2.0, 1)
        assert part.step == 2.0
        np.testing.assert_array_equal(part.nodes, [0.0, 2.0])

    @pytest.mark.parametrize("T,N", [(1.0, 3), (0.7, 11), (3.25, 97), (1e-3, 1000)])
    def test_invariants(self, T, N):
        part = make_partition(T, N)
        assert abs(part.step * N - T) <= 4 * np.spacing(T)
        assert part.nodes[0] == 0.0
        assert part.nodes[-1] == T
        assert np.all(np.diff(part.nodes) > 0)
        assert part.nodes.size == N + 1

    @pytest.mark.parametrize("T,N", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, -3), (float("nan"), 4)])
    def test_rejects_bad_arguments(self, T, N):
        with pytest.raises(ValueError):
            make_partition(T, N)


class TestTauSequence:
    def test_rejects_endpoints(self):
        with pytest.raises(ValueError):
            TauSequence.from_values([0.5, 0.0])
        with pytest.raises(ValueError):
            TauSequence.from_values([1.0])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            TauSequence.from_values([])

    def test_complement_swaps_arrays_exactly(self):
        tau = TauSequence.from_values([0.1, 0.5, 0.93])
        bar = tau.complement()
        np.testing.assert_array_equal(bar.values, tau.complements)
        np.testing.assert_array_equal(bar.complements, tau.values)


class TestCtq:
    def test_constant_exact(self):
        g = constant_integrand(3.5, total_time=2.0)
        for n in (1, 2, 7, 64):
            q = ctq(g, make_partition(2.0, n))
            assert q.value == 7.0

    def test_affine_exact(self):
        g = affine_integrand(0.0, 1.0)
        q = ctq(g, make_partition(1.0, 4))
        assert q.value == 0.5

    def test_square_hand_value(self):
        q = ctq(square_integrand(), make_partition(1.0, 2))
        assert q.value == 0.375
        assert q.rule == "CTQ"

    def test_evaluation_count_literal_and_shared(self):
        g = square_integrand()
        part = make_partition(1.0, 8)
        assert ctq(g, part).evaluations == 16
        shared = ctq(g, part, shared_nodes=True)
        assert shared.evaluations == 9
        assert shared.value == pytest.approx(ctq(g, part).value, rel=1e-14)

    def test_nonfinite_names_node(self):
        def evil(t):
            t = np.asarray(t, dtype=float)
            out = t.copy()
            out[t == 0.5] = np.inf
            return out

        g = Integrand(evaluator=evil, total_time=1.0, label="evil")
        with pytest.raises(EvaluationError, match="0.5"):
            ctq(g, make_partition(1.0, 2))


class TestRtq:
    def test_constant_exact_for_any_tau(self):
        g = constant_integrand(2.0)
        tau = TauSequence.from_values([0.123, 0.9, 0.5, 0.0001 + 0.3])
        assert rtq(g, make_partition(1.0, 4), tau).value == 2.0

    def test_affine_exact_because_offsets_reflect(self):
        g = affine_integrand(1.0, -2.0)
        exact = g.exact_integral
        rng = np.random.default_rng(11)
        for n in (1, 2, 32):
            tau = TauSequence.from_values(rng.uniform(0.01, 0.99, size=n))
            value = rtq(g, make_partition(1.0, n), tau).value
            # rounding unit: the accumulated magnitude |a|T + |b|T^2/2
            assert abs(value - exact) <= 8 * np.spacing(2.0)

    def test_square_single_cell_hand_value(self):
        tau = TauSequence.from_values([0.25])
        q = rtq(square_integrand(), make_partition(1.0, 1), tau)
        assert q.value == 0.3125
        assert q.rule == "RTQ"
        assert q.evaluations == 2

    def test_short_tau_rejected_extra_ignored(self):
        g = square_integrand()
        part = make_partition(1.0, 4)
        with pytest.raises(ValueError):
            rtq(g, part, TauSequence.from_values([0.5, 0.5]))
        long_tau = TauSequence.from_values([0.3] * 10)
        short_tau = TauSequence.from_values([0.3] * 4)
        assert rtq(g, part, long_tau).value == rtq(g, part, short_tau).value

    def test_complement_symmetry_is_bitwise(self):
        g = power_integrand(1.5)
        part = make_partition(1.0, 64)
        tau = sample_tau_sequence(RngStream(99), 64)
        assert rtq(g, part, tau).value == rtq(g, part, tau.complement()).value

    def test_determinism_across_regeneration(self):
        g = power_integrand(1.25)
        part = make_partition(1.0, 32)
        a = rtq(g, part, sample_tau_sequence(RngStream(5, 17), 32)).value
        b = rtq(g, part, sample_tau_sequence(RngStream(5, 17), 32)).value
        assert a == b


class TestRtqPrefix:
    def test_constant_prefix_values(self):
        g = constant_integrand(1.0)
        tau = TauSequence.from_values([0.2, 0.4, 0.6, 0.8])
        values = [q.value for q in rtq_prefix(g, make_partition(1.0, 4), tau)]
        assert values == [0.25, 0.5, 0.75, 1.0]

    def test_last_element_bitwise_equals_rtq(self):
        g = power_integrand(1.75)
        part = make_partition(1.0, 128)
        tau = sample_tau_sequence(RngStream(421), 128)
        assert rtq_prefix(g, part, tau)[-1].value == rtq(g, part, tau).value

    def test_linear_prefix_independent_of_tau(self):
        g = affine_integrand(0.0, 1.0)
        for seed in (1, 2, 3):
            tau = sample_tau_sequence(RngStream(seed), 2)
            values = [q.value for q in rtq_prefix(g, make_partition(1.0, 2), tau)]
            assert values == pytest.approx([0.125, 0.5], rel=1e-14)

    def test_prefix_increment_is_cell_contribution(self):
        g = power_integrand(1.5)
        part = make_partition(1.0, 50)
        tau = sample_tau_sequence(RngStream(8), 50)
        prefix = rtq_prefix(g, part, tau)
        half = 0.5 * part.step
        prev = 0.0
        for n, q in enumerate(prefix):
            t = part.nodes[n]
            cell = half * (
                g.evaluator(np.array([t + tau.values[n] * part.step]))[0]
                + g.evaluator(np.array([t + tau.complements[n] * part.step]))[0]
            )
            assert q.value - prev == pytest.approx(cell, rel=1e-12, abs=1e-15)
            prev = q.value

    def test_evaluation_counts(self):
        g = square_integrand()
        tau = TauSequence.from_values([0.5] * 3)
        prefix = rtq_prefix(g, make_partition(1.0, 3), tau)
        assert [q.evaluations for q in prefix] == [2, 4, 6]


class TestVectorIntegrands:
    """Vector dimension is carried through the rules componentwise."""

    @staticmethod
    def _pair():
        # components (t, 3 - 2t): exact integrals (1/2, 2) over [0, 1]
        return Integrand(
            evaluator=lambda t: np.stack([np.asarray(t), 3.0 - 2.0 * np.asarray(t)], axis=-1),
            total_time=1.0,
            label="pair",
            dimension=2,
        )

    def test_ctq_componentwise(self):
        value = ctq(self._pair(), make_partition(1.0, 8)).value
        np.testing.assert_allclose(value, [0.5, 2.0], rtol=1e-15)

    def test_rtq_componentwise(self):
        tau = TauSequence.from_values([0.2, 0.9, 0.4, 0.6])
        value = rtq(self._pair(), make_partition(1.0, 4), tau).value
        np.testing.assert_allclose(value, [0.5, 2.0], rtol=1e-14)

    def test_prefix_is_scalar_only(self):
        tau = TauSequence.from_values([0.5] * 4)
        with pytest.raises(ValueError, match="scalar"):
            rtq_prefix(self._pair(), make_partition(1.0, 4), tau)
