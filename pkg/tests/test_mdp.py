import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emql.mdp import (
    MdpSpec,
    SparseTabularModel,
    TabularModel,
    TrueMdp,
    greedy_action,
    make_model,
    random_mdp,
)


def fresh(S=4, A=2, gamma=0.9):
    return TabularModel(MdpSpec(S, A, gamma))


def chain_model():
    """s0 -> s1 -> s1 deterministically, rewards (0, 1), gamma 0.5."""
    m = TabularModel(MdpSpec(2, 1, 0.5))
    m.record_transition(0, 0, 1, 0.0)
    m.record_transition(1, 0, 1, 1.0)
    return m.refresh_estimates()


def test_spec_rejects_bad_discount():
    with pytest.raises(ValueError):
        MdpSpec(2, 2, gamma=1.0)
    with pytest.raises(ValueError):
        MdpSpec(0, 2)


def test_record_single_increment():
    m = fresh()
    m.record_transition(0, 1, 2, 0.5)
    assert m.visit_counts[0, 1] == 1
    assert m.transition_counts[0, 1, 2] == 1
    assert m.reward_sums[0, 1] == 0.5
    assert m.visit_counts.sum() == 1 and m.transition_counts.sum() == 1


def test_record_twice_adds():
    m = fresh()
    m.record_transition(0, 1, 2, 0.5)
    m.record_transition(0, 1, 2, 0.5)
    assert m.visit_counts[0, 1] == 2
    assert m.transition_counts[0, 1, 2] == 2
    assert m.reward_sums[0, 1] == 1.0


def test_record_splits_counts():
    m = fresh()
    m.record_transition(0, 1, 2, 1.0)
    m.record_transition(0, 1, 3, 0.0)
    assert m.transition_counts[0, 1, 2] == 1
    assert m.transition_counts[0, 1, 3] == 1
    assert m.visit_counts[0, 1] == 2


@pytest.mark.parametrize("bad", [(4, 0, 0), (0, 2, 0), (0, 0, -1)])
def test_record_out_of_range(bad):
    s, a, s2 = bad
    with pytest.raises(IndexError):
        fresh().record_transition(s, a, s2, 0.0)


def test_refresh_unvisited_is_zero():
    m = fresh().refresh_estimates()
    assert not m.p_hat.any() and not m.r_hat.any()


def test_refresh_arithmetic():
    m = TabularModel(MdpSpec(3, 2))
    for s2, r in ((0, 0.5), (0, 0.5), (1, 0.5)):
        m.record_transition(0, 1, s2, r)
    m.refresh_estimates()
    np.testing.assert_allclose(m.p_hat[0, 1], [2 / 3, 1 / 3, 0])
    assert m.r_hat[0, 1] == pytest.approx(0.5)


def test_q_sweep_zero_fixed_point():
    m = fresh().refresh_estimates().q_sweep()
    assert not m.q.any()


def test_self_loop_geometric_series():
    m = TabularModel(MdpSpec(1, 1, 0.9))
    m.record_transition(0, 0, 0, 1.0)
    m.refresh_estimates()
    for _ in range(2000):
        m.q_sweep()
    assert m.q[0, 0] == pytest.approx(10.0, abs=1e-9)


def test_chain_fixed_point_by_hand():
    # v(s1) = 1 / (1 - 0.5) = 2, v(s0) = 0 + 0.5 * 2 = 1
    m = chain_model()
    for _ in range(100):
        m.q_sweep()
    np.testing.assert_allclose(m.v, [1.0, 2.0], atol=1e-12)


def test_value_iteration_myopic_single_sweep():
    m = TabularModel(MdpSpec(3, 2, 0.0))
    rng = np.random.default_rng(1)
    for _ in range(30):
        m.record_transition(int(rng.integers(3)), int(rng.integers(2)), int(rng.integers(3)), float(rng.random()))
    m.refresh_estimates()
    res = m.value_iteration(tol=1e-10, max_sweeps=50)
    assert res.sweeps == 1 and res.converged
    np.testing.assert_array_equal(m.q, m.r_hat)


def test_value_iteration_self_loop():
    m = TabularModel(MdpSpec(1, 1, 0.9))
    m.record_transition(0, 0, 0, 1.0)
    m.refresh_estimates()
    res = m.value_iteration(tol=1e-10, max_sweeps=10_000)
    assert res.converged
    assert abs(m.q[0, 0] - 10) < 1e-9


def _random_counted(rng, S=5, A=3, gamma=0.9, n=400):
    m = TabularModel(MdpSpec(S, A, gamma))
    for _ in range(n):
        m.record_transition(int(rng.integers(S)), int(rng.integers(A)), int(rng.integers(S)), float(rng.random()))
    return m.refresh_estimates()


def test_value_iteration_matches_long_sweeps():
    tol = 1e-8
    m = _random_counted(np.random.default_rng(7))
    oracle = _random_counted(np.random.default_rng(7))
    for _ in range(10_000):
        oracle.q_sweep()
    res = m.value_iteration(tol=tol, max_sweeps=10_000)
    assert res.converged
    assert np.max(np.abs(m.q - oracle.q)) < 10 * tol


def test_value_iteration_flags_non_convergence():
    m = _random_counted(np.random.default_rng(3))
    res = m.value_iteration(tol=1e-12, max_sweeps=3)
    assert res.sweeps == 3 and not res.converged


def test_converged_q_is_bellman_consistent():
    tol = 1e-9
    m = _random_counted(np.random.default_rng(11))
    m.value_iteration(tol=tol, max_sweeps=10_000)
    backed = m.r_hat + m.spec.gamma * (m.p_hat @ m.q.max(axis=1))
    assert np.max(np.abs(backed - m.q)) < tol


@pytest.mark.parametrize(
    "row, expected",
    [((0, 1, 0), 1), ((1, 1, 0), 0), ((2, 2, 2), 0)],
)
def test_greedy_action_lowest_index(row, expected):
    q = np.array([[5.0, 0, 0], row])
    assert greedy_action(q, 1) == expected


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_p_hat_rows_stochastic_or_empty(seed):
    rng = np.random.default_rng(seed)
    S, A = int(rng.integers(1, 6)), int(rng.integers(1, 4))
    m = TabularModel(MdpSpec(S, A))
    for _ in range(int(rng.integers(0, 40))):
        m.record_transition(int(rng.integers(S)), int(rng.integers(A)), int(rng.integers(S)), 0.0)
    m.refresh_estimates()
    sums = m.p_hat.sum(axis=2)
    visited = m.visit_counts > 0
    np.testing.assert_allclose(sums[visited], 1.0, atol=1e-12)
    assert not sums[~visited].any()
    assert np.all(m.transition_counts.sum(axis=2) == m.visit_counts)
    assert np.all((m.p_hat >= 0) & (m.p_hat <= 1))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_q_sweep_is_gamma_contraction(seed):
    rng = np.random.default_rng(seed)
    m = _random_counted(rng, S=4, A=2, gamma=float(rng.uniform(0, 0.99)), n=60)
    q1, q2 = rng.normal(size=(2, 4, 2)) * 5
    m.q = q1
    out1 = m.q_sweep().q
    m.q = q2
    out2 = m.q_sweep().q
    assert np.max(np.abs(out1 - out2)) <= m.spec.gamma * np.max(np.abs(q1 - q2)) + 1e-12


def test_v_bounded_by_rmax_horizon():
    rng = np.random.default_rng(5)
    m = TabularModel(MdpSpec(4, 2, 0.9, r_max=2.0))
    for _ in range(200):
        m.record_transition(int(rng.integers(4)), int(rng.integers(2)), int(rng.integers(4)), float(rng.uniform(0, 2)))
    m.refresh_estimates()
    tol = 1e-9
    m.value_iteration(tol=tol, max_sweeps=10_000)
    assert np.all(m.v <= 2.0 / (1 - 0.9) + tol)
    np.testing.assert_array_equal(m.v, m.q.max(axis=1))


def test_estimates_converge_to_true_model():
    rng = np.random.default_rng(0)
    true = random_mdp(rng, 3, 2)
    m = TabularModel(true.spec)
    for s in range(3):
        for a in range(2):
            nxt = rng.choice(3, size=10_000, p=true.transition[s, a])
            for s2 in nxt:
                m.record_transition(s, a, int(s2), true.reward[s, a])
    m.refresh_estimates()
    assert np.max(np.abs(m.p_hat - true.transition)) < 0.05


def test_true_mdp_terminal_rows_absorbing():
    p = np.full((2, 1, 2), 0.5)
    mdp = TrueMdp(MdpSpec(2, 1), p, [[0.3], [0.7]], terminal=[False, True])
    np.testing.assert_array_equal(mdp.transition[1, 0], [0, 1])
    assert mdp.reward[1, 0] == 0


def test_true_mdp_validates_rows():
    with pytest.raises(ValueError):
        TrueMdp(MdpSpec(2, 1), np.full((2, 1, 2), 0.6), np.zeros((2, 1)))


def test_checkpoint_round_trip(tmp_path):
    m = _random_counted(np.random.default_rng(2), S=3, A=2)
    m.value_iteration(tol=1e-6)
    path = tmp_path / "model.txt"
    m.save(path)
    back = TabularModel.load(path)
    assert back.spec == m.spec
    for name in ("visit_counts", "transition_counts", "reward_sums", "p_hat", "r_hat", "q", "v"):
        np.testing.assert_array_equal(getattr(back, name), getattr(m, name))
    assert path.read_text().startswith("tabular-model v1\n3 2 0.9 1.0\n")


def test_checkpoint_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("tabular-model v9\n1 1 0.5 1.0\n")
    with pytest.raises(ValueError):
        TabularModel.load(path)


def test_sparse_model_matches_dense():
    rng = np.random.default_rng(4)
    spec = MdpSpec(6, 3, 0.8)
    dense, sp = TabularModel(spec), SparseTabularModel(spec)
    for _ in range(3000):
        args = (int(rng.integers(6)), int(rng.integers(3)), int(rng.integers(6)), float(rng.random()))
        dense.record_transition(*args)
        sp.record_transition(*args)
    for m in (dense, sp):
        m.refresh_estimates()
        for _ in range(20):
            m.q_sweep()
    np.testing.assert_array_equal(sp.transition_counts, dense.transition_counts)
    np.testing.assert_allclose(sp.p_hat, dense.p_hat, atol=1e-15)
    np.testing.assert_allclose(sp.q, dense.q, atol=1e-12)
    for a in range(3):
        np.testing.assert_allclose(sp.transition_matrix(a).toarray(), dense.transition_matrix(a), atol=1e-15)


def test_make_model_picks_storage():
    assert isinstance(make_model(MdpSpec(64, 4)), TabularModel)
    assert isinstance(make_model(MdpSpec(5185, 2)), SparseTabularModel)


def test_plan_modes():
    m = chain_model()
    m.plan("converge")
    np.testing.assert_allclose(m.v, [1.0, 2.0], atol=1e-7)
    with pytest.raises(ValueError):
        m.plan("bogus")
