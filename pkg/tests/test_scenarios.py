import numpy as np
import pytest

from hopflab import analysis as an
from hopflab import scenarios as sc
from hopflab.errors import ConfigError
from hopflab.profile import CONVERGENT, DIVERGENT

CATALOG = sc.catalog()
FAST = ["T1.10-cone", "E1.6-half-plane", "E1.6-reflex-cone", "L1.4-barrier", "E1.12-drift"]


def test_catalog_size_and_ids():
    ids = [s.id for s in CATALOG]
    assert len(ids) >= 12 and len(set(ids)) == len(ids)
    assert set(sc.REGIME_IDS) <= set(ids)
    for a, b in sc.DICHOTOMY_PAIRS:
        assert a in ids and b in ids


@pytest.mark.parametrize("s", CATALOG, ids=lambda s: s.id)
def test_expectations_consistent_with_dini_status(s):
    assert s.consistency_problems() == []


def test_dichotomy_pairs_straddle_threshold():
    for a, b in sc.DICHOTOMY_PAIRS:
        assert sc.by_id(a).dini_status() == CONVERGENT
        assert sc.by_id(b).dini_status() == DIVERGENT


def test_inconsistent_expectation_flagged():
    bad = sc.by_id("T1.8-dini").with_(expect={"hopf": an.BLOWS_UP})
    assert bad.consistency_problems()
    b = sc.run(bad, 2.0**-6)
    assert not b.passed


@pytest.mark.parametrize("sid", FAST)
def test_fast_scenarios_pass(sid):
    b = sc.run(sc.by_id(sid))
    assert b.passed, b.summary_lines()


def test_unknown_ids_and_kinds():
    with pytest.raises(ConfigError):
        sc.by_id("nope")
    with pytest.raises(ConfigError):
        sc.Scenario("x", "bogus")
    with pytest.raises(ConfigError):
        sc.build_body({"shape": "blob"}, None)
    with pytest.raises(ConfigError):
        sc.build_data({"kind": "blob"})


def test_error_message_names_scenario():
    s = sc.by_id("L1.2-exterior-sphere")
    with pytest.raises(Exception, match=r"\[L1.2-exterior-sphere\]"):
        sc.run(s, 2.0**-5)


def test_run_many_respects_order(monkeypatch):
    monkeypatch.setenv("HOPFLAB_THREADS", "2")
    scs = [sc.by_id(i) for i in FAST[:3]]
    out = sc.run_many(scs)
    assert [b.scenario for b in out] == FAST[:3]


def test_bundle_metadata_for_solve():
    b = sc.run(sc.by_id("T1.8-dini"), 2.0**-6)
    assert b.metadata["dini"].startswith("Convergent")
    assert b.metadata["solves"][0]["unknowns"] > 0
    assert "dropped_thin" in b.metadata["solves"][0]


def test_data_functions():
    p = np.array([[0.5, -1.0], [0.0, 2.0]])
    assert list(sc.build_data({"kind": "xn_plus"})(p)) == [0.0, 2.0]
    assert list(sc.build_data({"kind": "affine", "alpha": 1.0, "beta": (2.0, 0.0)})(p)) == [2.0, 1.0]
    arc = sc.build_data({"kind": "arc", "angle": "-pi/2", "half_width": "pi/6", "mu": 2.0})
    assert list(arc(np.array([[0.0, -1.0], [0.0, 1.0]]))) == [2.0, 0.0]
