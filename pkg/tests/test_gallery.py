import json
import math

import numpy as np
import pytest

from perpetua import gallery
from perpetua.diagnostics import FAILS, HOLDS
from perpetua.errors import InvalidInput
from perpetua.simulate import RunConfig, run_ensemble, run_trajectory

from oracles import brute_force, log_close

LN2 = math.log(2.0)


def traj_of(entry, T=64, seed=0, stream=0):
    return run_trajectory(RunConfig(entry.law, T, 1, seed, entry.z0_law), stream)


# build


def test_ids_and_expected_verdicts():
    assert gallery.IDS == ("E31", "E32", "E33", "E34", "R34")
    exp = {gid: gallery.build(gid).expected for gid in gallery.IDS}
    assert exp["E31"] == {"ii": HOLDS, "C0": FAILS}
    assert exp["E32"] == {"ii": HOLDS, "i": FAILS, "C0": FAILS}
    assert exp["E33"] == {"i": HOLDS, "v": FAILS, "vi": FAILS, "C0": FAILS}
    assert exp["E34"] == {"v": HOLDS, "vi": FAILS, "C0": FAILS}
    assert exp["R34"] == {"C0": HOLDS}


@pytest.mark.parametrize(
    "gid, kw",
    [
        ("E31", {"alpha": 1.0}),
        ("E31", {"alpha": 0.0}),
        ("E32", {"beta": 1.0}),
        ("E32", {"alpha": 1.5}),
        ("E33", {"beta": 0.5}),
        ("E33", {"c": 0.0}),
        ("E34", {"alpha": -0.2}),
        ("E99", {}),
    ],
)
def test_build_rejects_out_of_range(gid, kw):
    with pytest.raises(InvalidInput):
        gallery.build(gid, **kw)


def test_entry_json():
    js = json.loads(json.dumps(gallery.build("E32").to_json()))
    assert js["id"] == "E32" and js["expected"]["i"] == "FAILS"


# closed forms


def test_e32_closed_forms():
    e = gallery.build("E32", alpha=0.5, beta=2.0)
    tr = traj_of(e, 80)
    assert np.array_equal(tr.prod_log, np.arange(1, 81) * LN2)
    assert abs(tr.v[-1, 0] - 2.0) < 1e-15


def test_e33_closed_forms():
    e = gallery.build("E33", beta=2.0, c=1.0)
    tr = traj_of(e, 40)
    assert np.all(tr.x == 1.0)
    assert np.array_equal(tr.w_log, np.arange(40) * LN2)


def test_e31_terms_bit_exact():
    tr = traj_of(gallery.build("E31", alpha=0.5), 64)
    assert np.array_equal(tr.w_log, np.arange(64) * math.log(0.5))


def test_e34_unit_terms():
    tr = traj_of(gallery.build("E34"), 64)
    assert np.all(tr.w_log == 0.0)
    assert np.all(tr.y_log[1:] == 0.0)
    assert np.all(tr.prod_log == 0.0)


def test_r34_path_oracle():
    e = gallery.build("R34")
    tr = traj_of(e, 64, seed=3)
    K = np.cumsum(np.isclose(tr.Ms[:, 0, 0], 1.0))
    t = np.arange(1, 65)
    assert np.array_equal(tr.prod_log, -np.minimum(K, t - K) * LN2)
    assert np.all(np.linalg.norm(tr.Ms, 2, axis=(1, 2)) == 1.0)


@pytest.mark.parametrize("gid", gallery.IDS)
@pytest.mark.parametrize("seed", [0, 1])
def test_oracles_bit_exact_on_default_parameters(gid, seed):
    e = gallery.build(gid)
    tr = traj_of(e, 64, seed)
    ref = e.oracles(tr)
    for key, want in ref.items():
        assert np.array_equal(getattr(tr, key), want), key


@pytest.mark.parametrize("gid", gallery.IDS)
def test_oracles_match_brute_force(gid):
    e = gallery.build(gid)
    tr = traj_of(e, 64, 5)
    direct = brute_force(tr.Ms, tr.Zs, tr.z0)
    for key, want in e.oracles(tr).items():
        assert log_close(want, direct[key], rtol=1e-9), key


NON_DYADIC = [
    ("E31", {"alpha": 0.3}),
    ("E32", {"alpha": 0.7, "beta": 1.3}),
    ("E33", {"beta": -1.7, "c": 0.4}),
    ("E34", {"alpha": 0.9}),
]


@pytest.mark.parametrize("gid, kw", NON_DYADIC)
def test_oracles_non_dyadic(gid, kw):
    e = gallery.build(gid, **kw)
    assert not e.exact
    tr = traj_of(e, 64, 2)
    for key, want in e.oracles(tr).items():
        assert log_close(getattr(tr, key), want, rtol=1e-9), key


@pytest.mark.parametrize("gid, kw", [g for g in NON_DYADIC if g[0] != "E33"])
def test_oracles_rotated_frame(gid, kw):
    # roundoff of order 1e-17 off the frame grows like 1 / alpha**t relative to |W_t|,
    # so the comparison stops while that stays far below the tolerance
    th = 0.37
    frame = [[math.cos(th), math.sin(th)], [-math.sin(th), math.cos(th)]]
    e = gallery.build(gid, frame=frame, **kw)
    tr = traj_of(e, 12, 2)
    for key, want in e.oracles(tr).items():
        assert log_close(getattr(tr, key), want, rtol=1e-9), key


# verify


@pytest.mark.parametrize("gid", gallery.IDS)
def test_verify_no_contradictions(gid):
    rep = gallery.verify(gallery.build(gid), T=128, R=16, seed=0)
    assert rep.contradictions == []
    assert rep.oracle_failures == []
    assert rep.ok
    js = json.loads(json.dumps(rep.to_json()))
    assert js["entry"]["id"] == gid and js["ok"]


def test_verify_norm_products():
    for gid in ("E31", "E34", "R34"):
        rep = gallery.verify(gallery.build(gid), T=64, R=4)
        assert rep.extra_checks["product_of_norms_is_one"]["pass"]


def test_verify_flags_contradiction():
    e = gallery.build("E31")
    wrong = gallery.GalleryEntry(e.id, e.params, e.law, e.z0_law, {"C0": HOLDS}, e.exact, e.description, e.frame)
    rep = gallery.verify(wrong, T=64, R=4)
    assert rep.contradictions == ["C0"] and not rep.ok


# search


def test_search_e34_only_is_empty():
    rep = gallery.search_open_problem(gallery.families()["e34-only"], budget=3, seed=0, T=128, R=8)
    assert rep.candidates == [] and rep.evaluated == 3
    assert rep.label == gallery.SEARCH_LABEL


def test_search_zero_budget():
    rep = gallery.search_open_problem(gallery.families()["mixed-frame-diagonal"], budget=0, seed=0)
    assert rep.candidates == [] and rep.evaluated == 0
    assert "does not resolve" in rep.to_json()["label"]


def test_search_rejects_contracting_fixed_family():
    fam = {"template": {"kind": "constant", "M": [[0.5, 0.0], [0.0, 0.5]], "z": [1.0, 0.0]}, "parameters": {}}
    with pytest.raises(InvalidInput):
        gallery.search_open_problem(fam, budget=1, seed=0, T=100, R=2)


def test_search_mixed_family_smoke():
    rep = gallery.search_open_problem(gallery.families()["mixed-frame-diagonal"], budget=6, seed=1, T=128, R=8)
    assert rep.evaluated == 6
    assert rep.rejected_c0 + len(rep.candidates) <= 6
    margins = [c["margin"] for c in rep.candidates]
    assert margins == sorted(margins, reverse=True)
    json.dumps(rep.to_json())


@pytest.mark.slow
def test_search_mixed_family_budget_hundred():
    rep = gallery.search_open_problem(gallery.families()["mixed-frame-diagonal"], budget=100, seed=0, T=128, R=8)
    assert rep.evaluated == 100


def test_family_templates():
    fams = {k: gallery.Family.from_json(v) for k, v in gallery.families().items()}
    for fam in fams.values():
        law = fam.law(fam.draw(np.random.default_rng(0)))
        assert law.dim == 2
    ens = run_ensemble(RunConfig(fams["e34-only"].law({}), 16, 2))
    assert np.all(ens.w_log == 0.0)
