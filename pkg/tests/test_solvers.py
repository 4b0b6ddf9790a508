import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssopga import (
    CertificationError,
    IterationTrace,
    LinearInverseProblem,
    Method,
    SlidingSigmoid,
    SolverConfig,
    StopReason,
    TraceParseError,
    check_monotone,
    detect_oscillation,
    lee_seung_step,
    make_scalar_benchmark,
    pga_step,
    run,
    sso_pga_step,
)
from ssopga.presets import hazard_problem, random_descent_instance
from ssopga.solvers import TRACE_HEADER

DATA = Path(__file__).parent / "data"


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"max_iters": 0},
            {"tolerance": 0.0},
            {"learning_rate": -1.0},
            {"clip": 0.0},
            {"alpha": -1.0},
            {"method": "NEWTON"},
            {"epsilon": -1e-3},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_round_trip(self):
        cfg = SolverConfig(method=Method.PGA, learning_rate=0.1, clip=0.5)
        assert SolverConfig.from_dict(cfg.to_dict()) == cfg
        assert cfg.to_dict()["method"] == "PGA"

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="lr"):
            SolverConfig.from_dict({"lr": 1.0})


class TestSteps:
    def test_pga_problem1(self):
        assert pga_step(make_scalar_benchmark("I"), [1.0], 0.25)[0] == pytest.approx(0.75)

    @pytest.mark.parametrize("rho", [0.1, 0.3, 2.0])
    def test_pga_problem2_from_zero(self, rho):
        assert pga_step(make_scalar_benchmark("II"), [0.0], rho)[0] == pytest.approx(rho / 2)

    def test_pga_fixed_point(self, rng):
        p = LinearInverseProblem(rng.normal(size=(6, 3)), rng.normal(size=6))
        y, *_ = np.linalg.lstsq(p.H, p.x, rcond=None)
        np.testing.assert_allclose(pga_step(p, y, 0.1), y, atol=1e-12)

    def test_sso_problem1(self):
        v = sso_pga_step(make_scalar_benchmark("I"), [1.0], SlidingSigmoid(0.0))
        assert v[0] == pytest.approx(2 / (1 + math.e), rel=1e-14)
        assert v[0] == pytest.approx(0.53788284, abs=1e-8)

    def test_sso_zero_stays_zero(self, rng):
        p = LinearInverseProblem(rng.normal(size=(4, 3)), rng.normal(size=4))
        np.testing.assert_array_equal(sso_pga_step(p, np.zeros(3), 0.5), np.zeros(3))

    def test_sso_zero_gradient_fixed(self):
        assert sso_pga_step(make_scalar_benchmark("I"), [0.5], 1.0)[0] == 0.5

    def test_sso_rejects_negative(self):
        with pytest.raises(ValueError):
            sso_pga_step(make_scalar_benchmark("I"), [-1.0], 0.0)

    def test_sso_fixed_point_of_composite(self):
        # the minimizer of Problem II is a fixed point of the thresholded step
        v = sso_pga_step(make_scalar_benchmark("II"), [0.25], 0.0)
        assert v[0] == pytest.approx(0.25, abs=1e-15)

    def test_sso_clip(self):
        obj = make_scalar_benchmark("I", center=6.0)
        op = SlidingSigmoid(0.0)
        v = sso_pga_step(obj, [1.0], op, clip=0.1)
        assert v[0] == pytest.approx(op(-0.1))

    def test_gradient_scale(self):
        obj = make_scalar_benchmark("I")
        op = SlidingSigmoid(0.0)
        assert sso_pga_step(obj, [1.0], op, gradient_scale=0.01)[0] == pytest.approx(op(0.01))

    def test_lee_seung_identity_fixed_point(self):
        p = LinearInverseProblem(np.eye(3), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(lee_seung_step(p, [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_lee_seung_hazard(self):
        p = hazard_problem()
        y1 = lee_seung_step(p, [3.0])
        assert y1[0] == 0.0
        assert not np.isfinite(lee_seung_step(p, y1)).all()
        # a stabilised denominator gives a finite result (0 / 1e-12)
        assert lee_seung_step(p, y1, 1e-12)[0] == 0.0


class TestRun:
    def test_golden_trace(self):
        cfg = SolverConfig(method=Method.SSO_PGA, alpha=0.0, learning_rate=0.005, tolerance=1e-6)
        tr = run(cfg, make_scalar_benchmark("I"), [1.0])
        golden = IterationTrace.from_csv(DATA / "golden_sso_problem1.csv")
        assert tr.iters == golden.iters
        np.testing.assert_allclose(tr.energies, golden.energies, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(tr.iterate_array(), golden.iterate_array(), rtol=1e-12)
        assert abs(tr.final_iterate[0] - 0.5) <= 1e-3

    def test_pga_monotone_problem1(self):
        cfg = SolverConfig(method=Method.PGA, learning_rate=0.005, max_iters=10_000, tolerance=1e-14)
        tr = run(cfg, "I", [1.0])
        e = tr.energy_array()
        assert np.all(np.diff(e) < 0)
        assert tr.final_iterate[0] == pytest.approx(0.5, abs=1e-5)

    def test_hazard_nonfinite(self):
        cfg = SolverConfig(method=Method.LEE_SEUNG, max_iters=100)
        tr = run(cfg, hazard_problem(), [1.0])
        assert tr.stop_reason is StopReason.NONFINITE
        assert tr.n_iter <= 2

    def test_record_count_and_initial_row(self):
        cfg = SolverConfig(method=Method.PGA, learning_rate=1e-4, max_iters=5)
        tr = run(cfg, "I", [3.0])
        assert len(tr) == 6
        assert tr.iters[0] == 0 and tr.energies[0] == 6.25
        assert tr.stop_reason is StopReason.MAX_ITERS

    def test_multiplier_columns(self):
        tr = run(SolverConfig(max_iters=3), "I", [2.0])
        assert math.isnan(tr.mult_min[0])
        lo, hi = SlidingSigmoid(0.0).bounds()
        assert all(lo < m < hi for m in tr.mult_min[1:])
        tr = run(SolverConfig(method=Method.PGA, max_iters=3), "I", [2.0])
        assert all(math.isnan(m) for m in tr.mult_max)

    def test_deterministic(self, rng):
        p = LinearInverseProblem(rng.uniform(size=(9, 4)), rng.uniform(size=9))
        cfg = SolverConfig(alpha=0.3, max_iters=200)
        assert run(cfg, p, np.ones(4)).to_csv() == run(cfg, p, np.ones(4)).to_csv()

    def test_accepts_dict_config(self):
        tr = run({"method": "PGA", "learning_rate": 0.1, "max_iters": 3}, "I", [1.0])
        assert tr.method == "PGA"

    def test_preconditions(self, rng):
        p = LinearInverseProblem(rng.uniform(size=(3, 2)), rng.uniform(size=3))
        with pytest.raises(ValueError):
            run(SolverConfig(method=Method.LEE_SEUNG), "I", [1.0])
        with pytest.raises(ValueError):
            run(SolverConfig(certified=True), "I", [1.0])
        with pytest.raises(ValueError):
            run(SolverConfig(certified=True, clip=1.0), p, [0.1, 0.1])
        with pytest.raises(ValueError):
            run(SolverConfig(), p, [-1.0, 1.0])
        with pytest.raises(ValueError):
            run(SolverConfig(), p, [1.0])

    def test_certified_raises_with_partial_trace(self):
        p = LinearInverseProblem(np.eye(1), [0.0])
        cfg = SolverConfig(alpha=2.0, certified=True)
        with pytest.raises(CertificationError) as exc:
            run(cfg, p, [1.0])
        assert len(exc.value.trace) == 1

    def test_pga_diverges_at_large_step(self):
        tr = run(SolverConfig(method=Method.PGA, learning_rate=10.0, max_iters=1000), "I", [1.0])
        assert tr.stop_reason is StopReason.NONFINITE or max(tr.energies) > 1e6

    def test_path_step_equivalence(self, rng):
        p = LinearInverseProblem(rng.uniform(size=(6, 4)), rng.uniform(size=6))
        op = SlidingSigmoid(0.5)
        tr = run(SolverConfig(alpha=0.5, max_iters=50), p, rng.uniform(0.1, 1.0, 4))
        Y = tr.iterate_array()
        for t in range(1, len(Y)):
            y, g = Y[t - 1], p.gradient(Y[t - 1])
            rho = np.array([op.step_equivalence(yi, gi).rho for yi, gi in zip(y, g)])
            np.testing.assert_allclose(Y[t], y - rho * g, rtol=0, atol=1e-12)

    def test_vector_storage_cap(self, rng):
        p = LinearInverseProblem(rng.uniform(size=(5, 12)), rng.uniform(size=5))
        tr = run(SolverConfig(max_iters=3, store_dim_cap=8), p, np.ones(12))
        assert not tr.store_iterates and tr.final_iterate.shape == (12,)
        with pytest.raises(ValueError):
            tr.iterate_array()


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.0, 3.0), weight=st.floats(0.0, 1.0))
def test_nonnegativity_preserved(seed, alpha, weight):
    from ssopga import CompositeObjective, L1Prox

    rng = np.random.default_rng(seed)
    p = LinearInverseProblem(rng.normal(size=(5, 4)), rng.normal(size=5))
    obj = CompositeObjective(p, L1Prox(weight))
    tr = run(SolverConfig(alpha=alpha, max_iters=60), obj, rng.uniform(0, 2, 4))
    assert np.all(tr.iterate_array() >= 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_certified_descent_property(seed):
    p, y0 = random_descent_instance(np.random.default_rng(seed))
    tr = run(SolverConfig(certified=True, max_iters=200), p, y0)
    assert check_monotone(tr) == []


class TestTraceCsv:
    def test_header_and_round_trip(self, tmp_path):
        tr = run(SolverConfig(max_iters=20), "I", [4.0])
        path = tmp_path / "t.csv"
        tr.to_csv(path)
        lines = path.read_text().splitlines()
        assert tuple(lines[0].split(",")) == TRACE_HEADER
        assert lines[-1].endswith(tr.stop_reason.value)
        assert all(not ln.endswith(tr.stop_reason.value) for ln in lines[1:-1])
        back = IterationTrace.from_csv(path)
        assert back.energies == tr.energies
        np.testing.assert_array_equal(back.iterate_array(), tr.iterate_array())
        assert back.stop_reason is tr.stop_reason

    def test_full_vector_only_for_small_dimension(self, rng):
        small = LinearInverseProblem(rng.uniform(size=(3, 3)), rng.uniform(size=3))
        big = LinearInverseProblem(rng.uniform(size=(3, 9)), rng.uniform(size=3))
        row = run(SolverConfig(max_iters=2), small, np.ones(3)).to_csv().splitlines()[1]
        assert row.split(",")[3].count(";") == 2
        row = run(SolverConfig(max_iters=2), big, np.ones(9)).to_csv().splitlines()[1]
        assert ";" not in row

    def test_seventeen_digits(self):
        text = run(SolverConfig(max_iters=2), "I", [1.0]).to_csv()
        assert "0.53788284273999021" in text

    @pytest.mark.parametrize(
        "content, line",
        [
            ("", 1),
            ("iter,energy\n0,1\n", 1),
            (",".join(TRACE_HEADER) + "\n", 1),
            (",".join(TRACE_HEADER) + "\n0,1,1,1,,,\n1,abc,1,1,,,\n", 3),
            (",".join(TRACE_HEADER) + "\n0,1,1\n", 2),
        ],
    )
    def test_malformed(self, tmp_path, content, line):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(TraceParseError) as exc:
            IterationTrace.from_csv(path)
        assert exc.value.line == line
        assert "bad.csv" in str(exc.value)


class TestDiagnostics:
    def test_monotone_flags_increases(self):
        assert [v.index for v in check_monotone([1.0, 2.0, 3.0, 4.0])] == [1, 2, 3]
        assert check_monotone([3.0, 2.0, 2.0, 1.0]) == []

    def test_monotone_on_limitation_run(self):
        tr = run(SolverConfig(max_iters=300), make_scalar_benchmark("I", center=6.0), [1.0])
        assert check_monotone(tr)

    def test_converged_not_oscillating(self):
        tr = run(SolverConfig(max_iters=200, tolerance=1e-15), "I", [1.0])
        assert not detect_oscillation(tr, 10)
        assert not detect_oscillation(0.5 + 0.5 * (-0.9) ** np.arange(200))

    def test_period_two(self):
        assert detect_oscillation(np.tile([1.0, 2.0], 50))
        assert detect_oscillation(np.tile([1.0, 2.0], 50), window=41)

    def test_short_trace(self):
        assert not detect_oscillation(np.tile([1.0, 2.0], 5))
        with pytest.raises(ValueError):
            detect_oscillation(np.zeros(10), window=2)

    def test_unclipped_limitation_run(self):
        tr = run(SolverConfig(max_iters=2000), make_scalar_benchmark("I", center=6.0), [1.0])
        assert tr.stop_reason is StopReason.MAX_ITERS
        assert detect_oscillation(tr)

    def test_stops_on_oscillation_when_windowed(self):
        cfg = SolverConfig(max_iters=2000, oscillation_window=40)
        tr = run(cfg, make_scalar_benchmark("I", center=6.0), [1.0])
        assert tr.stop_reason is StopReason.OSCILLATION
