import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perpetua import laws, linalg
from perpetua import simulate as S
from perpetua.errors import ConfigError, DimensionError, InvalidInput

from oracles import brute_force, lin_close, log_close, prod


def e32_law(alpha=0.5, beta=2.0):
    return laws.law_frame_diagonal(
        np.eye(2), [laws.scalar_finite([alpha]), laws.scalar_finite([beta])], laws.vector_constant([1.0, 0.0])
    )


def e31_law(alpha=0.5):
    return e32_law(alpha, 1.0)


def random_law(g, d):
    kind = g.integers(0, 3)
    if kind == 0:
        return laws.law_gaussian_entries(d, float(g.uniform(0.1, 1.2)), float(g.uniform(0, 2)))
    if kind == 1:
        Q, _ = np.linalg.qr(g.normal(size=(d, d)))
        sc = [laws.scalar_finite(g.uniform(-1.5, 1.5, size=2)) for _ in range(d)]
        return laws.law_frame_diagonal(Q.T, sc, laws.vector_gaussian(d, float(g.uniform(0.1, 2))))
    return laws.law_mixture(
        [laws.law_gaussian_entries(d, 0.5, 1.0), laws.law_constant(g.uniform(-1, 1, size=(d, d)), g.normal(size=d))],
        [0.5, 0.5],
    )


# config


def test_config_validation():
    law = e31_law()
    with pytest.raises(InvalidInput):
        S.RunConfig(law, 0)
    with pytest.raises(InvalidInput):
        S.RunConfig(law, 5, R=0)
    with pytest.raises(DimensionError):
        S.RunConfig(law, 5, z0_law=laws.vector_zero(3))
    with pytest.raises(ConfigError):
        S.RunConfig(law, 20, suffix_stats=True, t_max=10)
    assert S.RunConfig(law, 6000).suffix_stats is False
    assert S.RunConfig(law, 50).suffix_stats is True
    assert np.array_equal(S.RunConfig(law, 5).z0_law.value, [0.0, 0.0])


# closed-form trajectories


def test_affine_fixed_point():
    beta, c = 0.3, 2.5
    law = laws.law_constant([[beta]], [(1 - beta) * c])
    cfg = S.RunConfig(law, 40, z0_law=laws.vector_constant([c]))
    tr = S.run_trajectory(cfg)
    assert np.allclose(tr.x[:, 0], c, rtol=1e-15)


def test_geometric_partial_sums():
    alpha = 0.5
    tr = S.run_trajectory(S.RunConfig(e31_law(alpha), 60))
    t = np.arange(1, 61)
    assert np.allclose(tr.v[:, 0], (1 - alpha**t) / (1 - alpha), rtol=1e-15)
    assert np.all(tr.v[:, 1] == 0.0)


def test_zero_matrix_absorbs():
    z = np.array([1.5, -2.0])
    tr = S.run_trajectory(S.RunConfig(laws.law_constant(np.zeros((2, 2)), z), 10))
    assert np.all(tr.x == z)
    assert np.all(tr.v == z)
    assert tr.w_log[0] == math.log(np.linalg.norm(z))
    assert np.all(tr.w_log[1:] == -math.inf)
    assert np.all(tr.prod_log == -math.inf)


def test_boundary_records():
    tr = S.run_trajectory(S.RunConfig(laws.law_gaussian_entries(3, 0.5, 1.0), 8, seed=3))
    assert tr[0].t == 1 and tr[0].y_log == math.inf and tr[0].u_log == math.inf
    assert all(math.isfinite(r.y_log) and math.isfinite(r.u_log) for r in tr[1:])
    assert tr[-1].t == 8 and len(tr[2:5]) == 3


def test_growing_product_norm():
    tr = S.run_trajectory(S.RunConfig(e32_law(), 30))
    assert np.array_equal(tr.prod_log, np.arange(1, 31) * math.log(2.0))


def test_contracting_suffix_minimum():
    # M = 0.5 v1 v1^T + v2 v2^T, Z = v1: the longest suffix wins, Y_t = 0.5**(t-1)
    tr = S.run_trajectory(S.RunConfig(e31_law(0.5), 12))
    assert np.array_equal(tr.y_log[1:], np.arange(1, 12) * math.log(0.5))


def test_divergent_run_flags_overflow():
    law = laws.law_frame_diagonal(
        np.eye(2), [laws.scalar_finite([0.5]), laws.scalar_finite([40.0])], laws.vector_constant([1.0, 1.0])
    )
    tr = S.run_trajectory(S.RunConfig(law, 400, suffix_stats=False))
    assert tr.overflow[-1] and not tr.overflow[0]
    assert tr.prod_log[-1] == pytest.approx(400 * math.log(40.0))


# definitional recomputation


@given(st.integers(1, 4), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_records_match_brute_force(d, T, seed):
    g = np.random.default_rng(seed)
    law = random_law(g, d)
    cfg = S.RunConfig(law, T, seed=int(g.integers(2**63)), z0_law=laws.vector_gaussian(d))
    tr = S.run_trajectory(cfg, int(g.integers(100)))
    ref = brute_force(tr.Ms, tr.Zs, tr.z0)
    assert lin_close(tr.x, ref["x"], np.abs(ref["x"]).max())
    assert lin_close(tr.v, ref["v"], np.abs(ref["v"]).max())
    for key in ("w_log", "prod_log", "y_log", "u_log"):
        assert log_close(getattr(tr, key), ref[key]), key


def test_time_reversal_identity(rng):
    d, t = 3, 15
    Ms = rng.uniform(-1, 1, size=(t, d, d))
    Zs = rng.normal(size=(t, d))
    z0 = rng.normal(size=d)
    X = z0
    for M, Z in zip(Ms, Zs):
        X = M @ X + Z
    law = laws.law_constant(np.eye(d), np.zeros(d))
    cfg = S.RunConfig(law, t)
    rev = S.kernels.trajectory(Ms[::-1].copy(), Zs[::-1].copy(), z0, False)
    tail = linalg.apply(linalg.product_of(Ms[::-1]), z0).materialize()
    assert np.allclose(rev["v"][-1] + tail, X, rtol=1e-12, atol=1e-12)
    assert cfg.T == t


def test_term_equals_apply(rng):
    tr = S.run_trajectory(S.RunConfig(laws.law_gaussian_entries(3, 0.7, 1.0), 25, seed=11))
    P = linalg.product_identity(3)
    for i in range(tr.T):
        assert tr.w_log[i] == linalg.apply(P, tr.Zs[i]).log_magnitude
        P = linalg.product_extend(P, tr.Ms[i])


# ensembles


def test_ensemble_streams_and_shapes():
    cfg = S.RunConfig(laws.law_gaussian_entries(2, 0.5, 1.0), 12, R=4, seed=5)
    ens = S.run_ensemble(cfg, threads=1, keep_trajectories=True)
    assert ens.w_log.shape == (4, 12) and ens.x.shape == (4, 12, 2)
    for r in range(4):
        assert np.array_equal(ens.x[r], S.run_trajectory(cfg, r).x)
    assert not np.array_equal(ens.x[0], ens.x[1])


def test_ensemble_threads_identical():
    cfg = S.RunConfig(laws.law_gaussian_entries(3, 0.5, 1.0), 50, R=9, seed=2)
    a = S.run_ensemble(cfg, threads=1)
    b = S.run_ensemble(cfg, threads=4)
    for key in ("x", "v", "w_log", "prod_exp2", "prod_frac", "y_log", "u_log", "overflow"):
        assert np.array_equal(getattr(a, key), getattr(b, key)), key


def test_threads_from_env(monkeypatch):
    monkeypatch.setenv("PERPETUA_THREADS", "3")
    assert S.resolve_threads() == 3
    assert S.resolve_threads(2) == 2
    with pytest.raises(ConfigError):
        S.resolve_threads(0)


def test_single_replication_summary():
    cfg = S.RunConfig(laws.law_gaussian_entries(2, 0.5, 1.0), 10, R=1, seed=4)
    summ = S.run_ensemble(cfg).summary()
    tr = S.run_trajectory(cfg, 0)
    for row in summ.w_log_quantiles:
        assert np.array_equal(row, tr.w_log)
    assert np.allclose(summ.w_mean_log, tr.w_log, rtol=1e-15)
    assert np.array_equal(summ.prod_log_mean, tr.prod_log)
    assert np.array_equal(summ.p_exceed[3], (tr.y_log > 0.0).astype(float))


def test_p_exceed_constant_one():
    # M = 0.5 v1 v1^T + v2 v2^T, Z = v2: every term has length one
    law = laws.law_frame_diagonal(
        np.eye(2), [laws.scalar_finite([0.5]), laws.scalar_finite([1.0])], laws.vector_constant([0.0, 1.0])
    )
    ens = S.run_ensemble(S.RunConfig(law, 30, R=3))
    p = ens.p_exceed([0.5])
    assert np.all(p[0, 1:] == 1.0)


def test_p_exceed_geometric_zero():
    alpha = 0.5
    ens = S.run_ensemble(S.RunConfig(e31_law(alpha), 10, R=2))
    p = ens.p_exceed([alpha])
    assert np.all(p[0, 2:] == 0.0)
    # exact Y_t from closed-form products
    for t in range(2, 11):
        Ms = [np.diag([alpha, 1.0])] * (t - 1)
        y = min(np.linalg.norm(prod(Ms[k:], 2) @ [1.0, 0.0]) for k in range(t - 1))
        assert ens.y_log[0, t - 1] == pytest.approx(math.log(y), rel=1e-14)


def test_p_exceed_requires_suffix():
    ens = S.run_ensemble(S.RunConfig(e31_law(), 10, R=2, suffix_stats=False))
    with pytest.raises(ConfigError):
        ens.p_exceed()
    assert ens.summary().p_exceed is None


# trace


def test_write_trace():
    tr = S.run_trajectory(S.RunConfig(e31_law(), 3))
    buf = io.StringIO()
    S.write_trace(tr, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,x_1,x_2,v_1,v_2,wTermLog,prodNormLog,yLog,uLog"
    assert lines[1].split(",")[-2:] == ["inf", "inf"]
    assert len(lines) == 4
    assert float(lines[3].split(",")[3]) == 1.75


def test_format_float():
    assert S.format_float(math.inf) == "inf"
    assert S.format_float(-math.inf) == "-inf"
    assert S.format_float(math.nan) == "nan"
    assert float(S.format_float(0.1)) == 0.1
