import csv
import json
from pathlib import Path

import numpy as np
import pytest

from ssopga import IterationTrace
from ssopga.presets import (
    APPENDIX_LEARNING_RATES,
    FIG_INITS,
    FIG_LEARNING_RATES,
    PRESETS,
    SUMMARY_HEADER,
    SUMMARY_TOL,
    UnknownPresetError,
    get_preset,
    random_descent_instance,
    run_preset,
)

DATA = Path(__file__).parent / "data"
REQUIRED = {
    "fig3-problem1",
    "fig4-problem2",
    "appendix-p1",
    "appendix-p1plus",
    "appendix-p2",
    "appendix-p2plus",
    "limitation-min6",
    "theorem2-random",
    "leeseung-hazard",
    "multimodal-toy",
}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fig3(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    run_preset("fig3-problem1", out)
    return out / "fig3-problem1"


def test_required_presets_listed():
    assert REQUIRED <= set(PRESETS)


def test_unknown_preset():
    with pytest.raises(UnknownPresetError):
        get_preset("nosuch")


@pytest.mark.parametrize("name", ["fig3-problem1", "fig4-problem2"])
def test_figure_grids(name):
    cells = get_preset(name).build(0)
    assert len(cells) == 16
    assert {c.config.learning_rate for c in cells} == set(FIG_LEARNING_RATES)
    assert {float(c.y0[0]) for c in cells} == set(FIG_INITS)
    assert {c.config.method.value for c in cells} == {"SSO_PGA", "PGA"}
    assert all(c.config.max_iters == 50_000 for c in cells)


@pytest.mark.parametrize("name", ["appendix-p1", "appendix-p1plus", "appendix-p2", "appendix-p2plus"])
def test_appendix_grids(name):
    cells = get_preset(name).build(0)
    assert {c.config.learning_rate for c in cells} == set(APPENDIX_LEARNING_RATES)
    assert len(cells) == 2 * len(APPENDIX_LEARNING_RATES) * len(FIG_INITS)


def test_summary_layout(fig3):
    rows = read_rows(fig3 / "summary.csv")
    assert tuple(rows[0]) == SUMMARY_HEADER
    assert len(rows) == 16
    keys = [(r["method"], float(r["learning_rate"]), float(r["y0"])) for r in rows]
    assert keys == sorted(keys, key=lambda k: ({"SSO_PGA": 0, "PGA": 1}[k[0]], k[1], k[2]))
    doc = json.loads((fig3 / "summary.json").read_text())
    assert doc["preset"] == "fig3-problem1" and len(doc["cells"]) == 16
    assert len(list((fig3 / "traces").glob("*.csv"))) == 16


def test_golden_summary(fig3):
    rows = read_rows(fig3 / "summary.csv")
    golden = read_rows(DATA / "fig3_summary.csv")
    for r, g in zip(rows, golden):
        for k in ("method", "alpha", "learning_rate", "clip", "y0", "iters_to_tol", "stop_reason"):
            assert r[k] == g[k]
        assert float(r["final_iterate"]) == pytest.approx(float(g["final_iterate"]), abs=1e-12)


def test_sso_beats_pga_at_small_rate(fig3):
    rows = read_rows(fig3 / "summary.csv")
    small = [r for r in rows if float(r["learning_rate"]) == 0.0005]
    sso = {r["y0"]: int(r["iters_to_tol"]) for r in small if r["method"] == "SSO_PGA"}
    pga = {r["y0"]: int(r["iters_to_tol"]) for r in small if r["method"] == "PGA"}
    assert all(sso[k] < pga[k] for k in sso)


def test_summary_matches_traces(fig3):
    doc = json.loads((fig3 / "summary.json").read_text())
    for cell in doc["cells"]:
        tr = IterationTrace.from_csv(fig3 / "traces" / cell["trace"])
        hit = next(
            (t for t, y in zip(tr.iters, tr.iterates) if abs(y[0] - 0.5) <= SUMMARY_TOL),
            None,
        )
        assert cell["iters_to_tol"] == ("DNF" if hit is None else str(hit))


def test_parallel_matches_serial(fig3, tmp_path):
    run_preset("fig3-problem1", tmp_path, jobs=3)
    par = tmp_path / "fig3-problem1"
    assert (par / "summary.csv").read_bytes() == (fig3 / "summary.csv").read_bytes()
    for f in (fig3 / "traces").iterdir():
        assert (par / "traces" / f.name).read_bytes() == f.read_bytes()


def test_hazard_preset(tmp_path):
    s = run_preset("leeseung-hazard", tmp_path)
    by = {(r["method"], d.get("epsilon")): (r, d) for r, d in zip(s.rows, s.details)}
    ls0, d0 = by[("LEE_SEUNG", 0.0)]
    assert ls0["stop_reason"] == "nonfinite" and d0["iterations"] <= 3
    sso, ds = by[("SSO_PGA", None)]
    assert ds["iterations"] == 1000 and sso["stop_reason"] == "max_iters"
    eps, _ = by[("LEE_SEUNG", 1e-12)]
    assert np.isfinite(float(eps["final_iterate"]))


def test_multimodal_preset(tmp_path):
    s = run_preset("multimodal-toy", tmp_path)
    (row,), (detail,) = s.rows, s.details
    assert float(row["final_energy"]) < 1e-6
    assert detail["monotone_violations"] == 0
    assert (tmp_path / "multimodal-toy" / "instance.json").exists()


def test_random_instances_are_certifiable():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p, y0 = random_descent_instance(rng)
        assert p.shape[0] <= 50 and p.shape[1] <= 30
        assert np.all(p.H >= 0) and np.all((y0 > 0) & (y0 <= 1))
        assert p.alpha_upper_bound(y0) >= 0.0


def test_limitation_preset(tmp_path):
    s = run_preset("limitation-min6", tmp_path)
    free = [(r, d) for r, d in zip(s.rows, s.details) if r["method"] == "SSO_PGA" and not r["clip"]]
    clipped = [r for r in s.rows if r["method"] == "SSO_PGA" and r["clip"]]
    pga = {(r["learning_rate"], r["y0"]): int(r["iters_to_tol"]) for r in s.rows if r["method"] == "PGA"}
    assert all(d["oscillating"] and r["stop_reason"] == "oscillation_detected" for r, d in free)
    assert all(abs(float(r["final_iterate"]) - 6.0) <= 1e-2 for r in clipped)
    assert all(int(r["iters_to_tol"]) < pga[(r["learning_rate"], r["y0"])] for r in clipped)
