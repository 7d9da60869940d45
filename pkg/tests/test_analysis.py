import itertools
import json

import numpy as np
import pytest

from emql import analysis
from emql.analysis import (
    AugmentedSizeError,
    build_augmented,
    bellman_residual,
    check_lemma3,
    check_theorem1,
    conditional_distribution,
    conditional_table,
    enumerated_augmented_reward,
    evaluate_policy_on_augmented,
    optimal_values,
    oracle_policy,
    policy_residual,
    theorem1_bound_term,
)
from emql.mdp import MdpSpec, TrueMdp, random_mdp


def two_state():
    """Action 0 stays, action 1 swaps; reward 1 only for staying in state 1."""
    p = np.zeros((2, 2, 2))
    p[0, 0, 0] = p[1, 0, 1] = 1
    p[0, 1, 1] = p[1, 1, 0] = 1
    r = np.array([[0.0, 0.0], [1.0, 0.0]])
    return TrueMdp(MdpSpec(2, 2, 0.5), p, r)


def test_optimal_values_two_state_by_hand():
    q, v = optimal_values(two_state(), tol=1e-12)
    # V*(1) = 1 / (1 - 0.5) = 2 ; V*(0) = 0.5 * 2 = 1
    np.testing.assert_allclose(v, [1.0, 2.0], atol=1e-10)
    np.testing.assert_allclose(q, [[0.5, 1.0], [2.0, 0.5]], atol=1e-10)
    assert bellman_residual(two_state(), q) < 1e-10


def test_conditional_distribution_deterministic():
    m = two_state()
    np.testing.assert_array_equal(conditional_distribution(m, 0, [1, 1, 1]), [0, 1])
    np.testing.assert_array_equal(conditional_distribution(m, 1, []), [0, 1])
    with pytest.raises(ValueError):
        conditional_distribution(m, 0, [0] * 7)


def test_augmented_structure_two_state_d1():
    am = build_augmented(two_state(), 1)
    assert am.spec.num_states == 4
    np.testing.assert_allclose(am.transition.sum(axis=2), 1.0)
    # code (s=0, tail=(1,)) = 1: base swaps to 1, tail becomes (a,)
    assert am.transition[1, 0, 2] == 1.0 and am.transition[1, 1, 3] == 1.0
    np.testing.assert_array_equal(am.conditionals[1], [0, 1])
    assert am.reward[1, 0] == 1.0
    assert am.decode(3) == (1, (1,))


def test_zero_delay_augmented_is_base():
    m = random_mdp(np.random.default_rng(0), 4, 3)
    am = build_augmented(m, 0)
    np.testing.assert_allclose(am.transition, m.transition)
    np.testing.assert_allclose(am.reward, m.reward)
    np.testing.assert_array_equal(conditional_table(m, 0), np.eye(4))


def test_size_cap():
    m = random_mdp(np.random.default_rng(0), 10, 4)
    with pytest.raises(AugmentedSizeError):
        build_augmented(m, 6)


@pytest.mark.parametrize("seed", range(10))
def test_recursion_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = random_mdp(rng, 3, 2)
    d = int(rng.integers(0, 4))
    am = build_augmented(m, d)
    np.testing.assert_allclose(am.reward, enumerated_augmented_reward(m, d), atol=1e-12)
    np.testing.assert_allclose(am.conditionals.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("kind", analysis.ORACLE_POLICIES)
def test_oracle_policies_have_valid_actions(kind):
    m = random_mdp(np.random.default_rng(1), 3, 2)
    am = build_augmented(m, 2)
    q, _ = optimal_values(m)
    pol = oracle_policy(am, q, kind)
    assert pol.shape == (12,) and set(pol) <= {0, 1}
    with pytest.raises(ValueError):
        oracle_policy(am, q, "nope")


def test_emql_oracle_is_optimal_without_delay():
    m = random_mdp(np.random.default_rng(2), 5, 3, gamma=0.9)
    am = build_augmented(m, 0)
    q, v = optimal_values(m, 1e-12)
    pol = oracle_policy(am, q, "emql")
    v_pi = evaluate_policy_on_augmented(am, pol, 1e-12)
    np.testing.assert_allclose(v_pi, v, atol=1e-9)
    assert policy_residual(am, pol, v_pi) < 1e-11


@pytest.mark.parametrize("seed", range(4))
def test_policy_values_against_enumeration_of_all_policies(seed):
    rng = np.random.default_rng(seed)
    m = random_mdp(rng, 2, 2, gamma=0.8)
    am = build_augmented(m, 2)  # 8 states x 2 actions: 256 deterministic policies
    assert am.spec.num_states * am.spec.num_actions <= 64
    best = np.full(am.spec.num_states, -np.inf)
    for pol in itertools.product(range(2), repeat=am.spec.num_states):
        best = np.maximum(best, evaluate_policy_on_augmented(am, pol, 1e-12))
    _, v_aug = optimal_values(am.as_true_mdp(), 1e-12)
    np.testing.assert_allclose(best, v_aug, atol=1e-8)
    q, _ = optimal_values(m, 1e-12)
    v_emql = evaluate_policy_on_augmented(am, oracle_policy(am, q, "emql"), 1e-12)
    assert np.all(v_emql <= best + 1e-9)


def test_evaluate_rejects_bad_policy_shape():
    am = build_augmented(two_state(), 1)
    with pytest.raises(ValueError):
        evaluate_policy_on_augmented(am, [0, 1])


def test_lemma3_examples():
    q = np.array([[1.0, 0.0], [0.0, 3.0]])
    v = q.max(axis=1)
    rep = check_lemma3(q, v, [0.5, 0.5])
    assert rep.lhs == 1.5 and rep.rhs == 1.0 and rep.ok
    # one-hot mu: lhs = V*(s) >= V*(s) / |A|
    rep = check_lemma3(q, v, [0.0, 1.0])
    assert rep.slack == pytest.approx(1.5)
    with pytest.raises(ValueError):
        check_lemma3(q, v, [0.7, 0.7])


def test_theorem1_bound_term_examples():
    assert theorem1_bound_term(MdpSpec(3, 2, 0.5)) == pytest.approx(2.0)
    assert theorem1_bound_term(MdpSpec(3, 1, 0.9)) == 0.0
    assert theorem1_bound_term(MdpSpec(3, 4, 0.9, r_max=2.0)) == pytest.approx(150.0)


def test_theorem1_on_small_instances():
    for seed in range(5):
        m = random_mdp(np.random.default_rng(seed), 3, 2, gamma=0.9)
        rep = check_theorem1(m, 2)
        assert rep.ok and rep.num_augmented == 12 and rep.violations == 0


@pytest.mark.parametrize("name", ["belief", "lemma1", "lemma3", "theorem1"])
def test_small_suites_pass(name):
    rows = analysis.SUITES[name](n=20, seed=3)
    assert len(rows) == 20 and all(r["ok"] for r in rows)


def test_write_report(tmp_path):
    results = {"belief": analysis.belief_suite(n=5), "lemma1": analysis.lemma1_suite(n=3)}
    summary = analysis.write_report(results, tmp_path / "sub" / "v.json")
    assert summary == {"belief": {"instances": 5, "failures": 0}, "lemma1": {"instances": 3, "failures": 0}}
    data = json.loads((tmp_path / "sub" / "v.json").read_text())
    assert data["summary"] == summary and len(data["instances"]["belief"]) == 5
