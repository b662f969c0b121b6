import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from abso.archive import Archive, ArchiveConfig, ArchivedSolution
from abso.benchmarks import registered_optima
from abso.metrics import (
    RunTrace,
    aggregate,
    convergence_generation,
    default_tolerance,
    peak_ratio,
)


def trace_of(values):
    tr = RunTrace()
    for g, v in enumerate(values):
        tr.append(g, v, 0.0, 0, 100 * (g + 1))
    return tr


def archive_at(points, fitness, rho=0.01):
    a = Archive(1, ArchiveConfig(rho))
    for p, f in zip(points, fitness):
        a.try_insert(ArchivedSolution(np.atleast_1d(np.asarray(p, float)), f, 0.0))
    return a


class TestConvergence:
    def test_at_start(self):
        assert convergence_generation(trace_of([1.0, 1.0]), 1.0) == 0

    def test_never(self):
        assert convergence_generation(trace_of([0.5, 0.9]), 1.0) is None

    def test_empty_trace(self):
        assert convergence_generation(RunTrace(), 1.0) is None

    def test_crossing_at_87(self):
        vals = np.minimum(1.0, np.linspace(0.5, 1.0, 88)).tolist() + [1.0] * 50
        assert convergence_generation(trace_of(vals), 1.0) == 87

    def test_default_tolerance_scales(self):
        assert default_tolerance(1.0) == 1e-4
        assert default_tolerance(200.0) == pytest.approx(0.02)
        assert default_tolerance(-2.0) == pytest.approx(2e-4)

    def test_rejects_nonpositive_tol(self):
        with pytest.raises(ValueError):
            convergence_generation(trace_of([1.0]), 1.0, tol=0.0)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=50),
           st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
    def test_antitone_in_tol(self, vals, t1, t2):
        tr = trace_of(np.maximum.accumulate(vals).tolist())
        lo, hi = sorted((t1, t2))
        g_lo = convergence_generation(tr, 1.0, lo)
        g_hi = convergence_generation(tr, 1.0, hi)
        if g_lo is not None:
            assert g_hi is not None and g_hi <= g_lo


class TestPeakRatio:
    def test_four_of_five(self):
        reg = registered_optima("F2")
        a = archive_at(reg.global_optima[:4, 0], reg.global_fitness[:4])
        assert peak_ratio(a, reg)["global"] == pytest.approx(0.8)

    def test_empty(self):
        pr = peak_ratio(archive_at([], []), registered_optima("F2"))
        assert pr["global"] == 0.0 and pr["all"] == 0.0

    def test_all_f1_optima(self):
        reg = registered_optima("F1")
        a = archive_at(reg.positions[:, 0], reg.fitness_at_optima)
        pr = peak_ratio(a, reg)
        assert pr["global"] == 1.0 and pr["all"] == 1.0

    def test_local_only_counts_in_all(self):
        reg = registered_optima("F1")
        a = archive_at(reg.local_optima[:, 0], reg.local_fitness)
        pr = peak_ratio(a, reg)
        assert pr["global"] == 0.0 and pr["all"] == pytest.approx(0.6)

    @given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=30),
           st.floats(1e-5, 1), st.floats(1e-5, 1))
    def test_monotone_in_epsilon(self, entries, e1, e2):
        reg = registered_optima("F2")
        a = archive_at([x for x, _ in entries], [f for _, f in entries])
        lo, hi = sorted((e1, e2))
        assert peak_ratio(a, reg, lo)["all"] <= peak_ratio(a, reg, hi)["all"]


class TestAggregate:
    def run(self, gen, gpr=1.0, pr=1.0):
        return {"convergence_generation": gen, "global_peak_ratio": gpr, "peak_ratio": pr}

    def test_identical_runs(self):
        agg = aggregate([self.run(42, 0.6, 0.4)] * 30)
        assert agg["mean_convergence_generation"] == 42
        assert agg["mean_global_peak_ratio"] == pytest.approx(0.6)
        assert agg["success_rate"] == 0.0

    def test_mean_of_two(self):
        assert aggregate([self.run(100), self.run(200)])["mean_convergence_generation"] == 150

    def test_unconverged_excluded_from_mean(self):
        agg = aggregate([self.run(10), self.run(None)])
        assert agg["mean_convergence_generation"] == 10
        assert agg["converged_fraction"] == 0.5

    def test_none_converged(self):
        assert aggregate([self.run(None)])["mean_convergence_generation"] is None

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])
