import json

import pytest

from splyne.harness import (ConfigError, RunRecord, Scenario, boundary_study, build_space, crossover_level,
                            load_scenarios, make_spec, records_to_csv, run_many, run_scenario)


def test_tensor_product_single_level():
    (rec,) = run_scenario(Scenario("tp", "TP", max_level=1))
    assert rec.level == 1 and rec.dofs == 361
    assert rec.cond_mass == pytest.approx(708.0103, rel=1e-6)
    assert rec.overloaded == 0


def test_tensor_product_refines_uniformly():
    space = build_space("TP", make_spec("central", 3))
    assert len(space) == (64 + 3) ** 2


def test_central_lrb_and_thb_share_dofs_and_first_record():
    lrb = run_scenario(Scenario("a", "LRB", max_level=3))
    thb = run_scenario(Scenario("b", "THB", max_level=3))
    assert [r.dofs for r in lrb] == [r.dofs for r in thb]
    assert lrb[0].cond_mass == pytest.approx(thb[0].cond_mass, rel=1e-12)
    assert all(a.dofs <= b.dofs for a, b in zip(lrb, lrb[1:]))


def test_diagonal_lrbno_beats_lrb_and_thb():
    runs = {m: run_scenario(Scenario(m, m, "diagonal", max_level=3)) for m in ("LRB", "THB", "LRBNO-diag")}
    for n in (1, 2):
        best = min(runs["LRB"][n].cond_mass, runs["THB"][n].cond_mass)
        assert runs["LRBNO-diag"][n].cond_mass < best
        assert runs["LRBNO-diag"][n].overloaded == 0


@pytest.mark.parametrize("kwargs, message", [
    (dict(method="T-LRBNO", pattern="diagonal"), "incompatible"),
    (dict(method="LRBNO-diag", pattern="central"), "incompatible"),
    (dict(method="LRBNO", degree=(2, 2)), "bi-degree"),
    (dict(method="XYZ"), "unknown method"),
    (dict(method="LRB", pattern="spiral"), "unknown pattern"),
    (dict(method="LRB", max_level=0), "max_level"),
    (dict(method="LRB", max_level=9), "heavy"),
    (dict(method="LRB", initial_cells=6), "multiple of 4"),
    (dict(method="LRB", outputs=("pdf",)), "unknown output"),
])
def test_scenario_validation(kwargs, message):
    with pytest.raises(ConfigError, match=message):
        Scenario("bad", **kwargs).check()


def test_heavy_flag_allows_deep_runs():
    Scenario("deep", "LRB", max_level=9, heavy=True).check()


def test_config_errors_before_any_work(monkeypatch):
    import splyne.harness as h

    calls = []
    monkeypatch.setattr(h, "_run_level", lambda s, n: calls.append(n))
    good = Scenario("ok", "LRB", max_level=2)
    bad = Scenario("bad", "T-LRBNO", "diagonal")
    with pytest.raises(ConfigError):
        run_many([good, bad])
    assert calls == []


def test_load_scenarios_forms():
    one = load_scenarios('{"method": "THB", "max_level": 2}')
    assert one[0].name == "THB-central" and one[0].max_level == 2
    many = load_scenarios(json.dumps({"scenarios": [{"method": "LRB"}, {"method": "S-LRB", "degree": [2, 2]}]}))
    assert [s.method for s in many] == ["LRB", "S-LRB"]
    assert many[1].degree == (2, 2) and many[1].variant == "ghost"


@pytest.mark.parametrize("text, message", [
    ("{not json", "valid JSON"),
    ("[]", "at least one"),
    ('{"method": "LRB", "colour": 3}', "unknown keys"),
    ('{"pattern": "central"}', "missing"),
    ('[1]', "must be an object"),
    ('{"method": "LRB", "degree": "ab"}', "scenario #0"),
])
def test_load_scenarios_rejects(text, message):
    with pytest.raises(ConfigError, match=message):
        load_scenarios(text)


def test_csv_is_reproducible():
    s = Scenario("r", "S-LRB", max_level=2)
    a = records_to_csv(run_scenario(s))
    b = records_to_csv(run_scenario(s))
    assert a == b
    assert a.splitlines()[0] == "scenario,method,pattern,level,dofs,cond_mass,cond_stiffness,overloaded,min_eigvec_site"


def test_boundary_study_small():
    records = boundary_study(max_level=2, cells=8, methods=("LRB", "S-LRB"))
    assert [(r.method, r.level) for r in records] == [("LRB", 1), ("LRB", 2), ("S-LRB", 1), ("S-LRB", 2)]
    for n in (1, 2):
        o = next(r for r in records if r.method == "LRB" and r.level == n)
        s = next(r for r in records if r.method == "S-LRB" and r.level == n)
        assert s.cond_stiffness > 10 * o.cond_stiffness
        assert s.cond_mass > 100 * o.cond_mass


def test_crossover_level():
    def rec(n, site):
        return RunRecord("s", "S-LRB", "central", n, 1, 1.0, 1.0, 0, site)

    sites = ["corner", "corner", "refined", "corner", "refined", "refined"]
    assert crossover_level([rec(n + 1, s) for n, s in enumerate(sites)]) == 5
    assert crossover_level([rec(1, "corner")]) is None
    assert crossover_level([]) is None
