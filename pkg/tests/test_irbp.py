import math

import numpy as np
import pytest

from lpball import (
    CONVERGED,
    InvariantViolation,
    ProblemInstance,
    SolverOptions,
    TRIVIAL_INSIDE_BALL,
    compute_weights,
    csum,
    init_state,
    relaxed_residuals,
    solve,
    split_signs,
    step,
    subproblem_radius,
    update_epsilon,
)

REPLAY_Y = [0.5, 0.45]
REPLAY_EPS0 = np.array([0.072, 0.463])


def replay_instance():
    return ProblemInstance(y=REPLAY_Y, p=0.5, gamma=1.0)


# ---------------------------------------------------------------- init_state


def test_init_eps_pnorm_identity():
    # sum eps_i^p = 0.9^p * gamma by construction, for any p and gamma
    for p, gamma, n in [(0.3, 1.0, 7), (0.5, 2.5, 100), (0.85, 0.2, 13)]:
        inst = ProblemInstance(y=np.full(n, 10.0), p=p, gamma=gamma)
        state = init_state(split_signs(inst), SolverOptions(seed=4))
        assert csum(state.eps**p) == pytest.approx(0.9**p * gamma, rel=1e-12)
        assert np.all(state.x == 0.0)
        assert csum((state.x + state.eps) ** p) <= gamma


def test_init_state_deterministic_for_seed():
    inst = ProblemInstance(y=np.arange(1.0, 21.0), p=0.4, gamma=1.0)
    red = split_signs(inst)
    a = init_state(red, SolverOptions(seed=123))
    b = init_state(red, SolverOptions(seed=123))
    c = init_state(red, SolverOptions(seed=124))
    assert np.array_equal(a.eps, b.eps)
    assert not np.array_equal(a.eps, c.eps)


def test_init_state_accepts_injected_eps():
    red = split_signs(replay_instance())
    state = init_state(red, SolverOptions(), eps0=REPLAY_EPS0)
    assert np.array_equal(state.eps, REPLAY_EPS0)
    with pytest.raises(ValueError):
        init_state(red, SolverOptions(), eps0=np.array([0.072]))
    with pytest.raises(ValueError):
        init_state(red, SolverOptions(), eps0=np.array([-0.1, 0.2]))
    with pytest.raises(ValueError):
        init_state(red, SolverOptions(), eps0=np.array([3.0, 3.0]))


# ----------------------------------------------------------- compute_weights


def test_weights_uniform_at_zero():
    p, e = 0.35, 0.02
    w = compute_weights(np.zeros(5), np.full(5, e), p)
    assert np.allclose(w, p * e ** (p - 1.0), rtol=1e-15)


def test_weights_pointwise_value():
    w = compute_weights(np.array([0.21]), np.array([0.04]), 0.5)
    assert w[0] == pytest.approx(1.0, rel=1e-15)  # 0.5 * 0.25**-0.5


def test_weights_decrease_in_x():
    p, e = 0.5, 0.1
    w1 = compute_weights(np.array([0.2]), np.array([e]), p)
    w2 = compute_weights(np.array([0.3]), np.array([e]), p)
    assert w2[0] < w1[0]


# -------------------------------------------------------- subproblem_radius


def test_radius_at_zero_iterate():
    eps = np.array([0.1, 0.2])
    p, gamma = 0.5, 1.0
    w = compute_weights(np.zeros(2), eps, p)
    expected = gamma - csum(eps**p)
    assert subproblem_radius(np.zeros(2), eps, w, p, gamma) == pytest.approx(expected, rel=1e-15)


def test_radius_replay_first_iteration():
    p, gamma = 0.5, 1.0
    w = compute_weights(np.zeros(2), REPLAY_EPS0, p)
    r = subproblem_radius(np.zeros(2), REPLAY_EPS0, w, p, gamma)
    assert r == pytest.approx(1.0 - (math.sqrt(0.072) + math.sqrt(0.463)), rel=1e-12)
    assert r == pytest.approx(0.0512, abs=5e-5)


def test_radius_positive_across_runs():
    rng = np.random.default_rng(17)
    for p in (0.3, 0.7):
        y = rng.normal(0.0, 0.3, 50)
        inst = ProblemInstance(y=y, p=p, gamma=1.0)
        gammas = []
        solve(inst, SolverOptions(seed=1), collect=lambda s: gammas.append(s.gamma_k))
        assert all(g > 0.0 for g in gammas)


def test_radius_rejects_broken_schedule():
    # eps so large the smoothed point leaves the ball
    eps = np.array([4.0, 4.0])
    w = compute_weights(np.zeros(2), eps, 0.5)
    with pytest.raises(InvariantViolation):
        subproblem_radius(np.zeros(2), eps, w, 0.5, 1.0)


# ----------------------------------------------------------- update_epsilon


def _mk_state(x, eps, w, k=3):
    from lpball import IterateState

    return IterateState(
        k=k, x=x, eps=eps, w=w, lam=0.1, gamma_k=0.5, alpha_res=0.0, beta_res=0.5, triggered=False
    )


def test_update_triggers_on_no_movement():
    x = np.array([0.3, 0.1])
    st = _mk_state(x, np.array([0.2, 0.2]), np.array([1.0, 1.0]))
    sched = update_epsilon(st, x.copy(), beta_next=0.25, p=0.5, opts=SolverOptions())
    assert sched.trigger_log == (3,)
    assert np.all(sched.eps < st.eps)


def test_update_skips_on_huge_weighted_movement():
    st = _mk_state(np.zeros(2), np.array([0.2, 0.2]), np.array([1e9, 1e9]))
    sched = update_epsilon(st, np.array([5.0, 5.0]), beta_next=0.25, p=0.5, opts=SolverOptions())
    assert sched.trigger_log == ()
    assert np.array_equal(sched.eps, st.eps)


def test_update_theta_formula_and_clamps():
    opts = SolverOptions()
    x = np.array([0.4])
    st = _mk_state(x, np.array([0.5]), np.array([1.0]), k=4)
    beta = 0.09
    sched = update_epsilon(st, x.copy(), beta_next=beta, p=0.5, opts=opts)
    theta = min(beta, 1.0 / math.sqrt(4)) ** 2.0
    assert sched.theta_last == pytest.approx(theta, rel=1e-15)
    # beta = 0 clamps at the floor instead of annihilating eps
    sched0 = update_epsilon(st, x.copy(), beta_next=0.0, p=0.5, opts=opts)
    assert sched0.theta_last == opts.theta_floor
    assert np.all(sched0.eps > 0.0)


def test_update_frozen_epsilon():
    opts = SolverOptions(freeze_epsilon=True)
    x = np.array([0.4])
    st = _mk_state(x, np.array([0.5]), np.array([1.0]))
    sched = update_epsilon(st, x.copy(), beta_next=0.2, p=0.5, opts=opts)
    assert sched.trigger_log == (3,)
    assert np.array_equal(sched.eps, st.eps)


# ----------------------------------------------------------------- step


def test_step_replay_matches_hand_projection():
    # first iteration of the 2-d replay, against the closed-form two-variable
    # projection onto the weighted ball built at x0 = 0
    red = split_signs(replay_instance())
    opts = SolverOptions()
    s0 = init_state(red, opts, eps0=REPLAY_EPS0)
    s1 = step(s0, red, opts)

    p, gamma = 0.5, 1.0
    w = 0.5 * REPLAY_EPS0 ** (-0.5)
    r = gamma - (math.sqrt(0.072) + math.sqrt(0.463))
    # both-active candidate pushes x1 negative, so only coordinate 2 is active
    lam_both = (w[0] * 0.5 + w[1] * 0.45 - r) / (w[0] ** 2 + w[1] ** 2)
    assert 0.5 - lam_both * w[0] < 0.0
    lam = (w[1] * 0.45 - r) / w[1] ** 2
    x_hand = np.array([0.0, 0.45 - lam * w[1]])
    assert np.max(np.abs(s1.x - x_hand)) <= 1e-12
    assert s1.lam == pytest.approx(lam, rel=1e-12)


def test_step_descent_holds_on_random_problem():
    rng = np.random.default_rng(23)
    y = rng.normal(0.0, 0.5, 50)
    inst = ProblemInstance(y=y, p=0.5, gamma=1.0)
    red = split_signs(inst)
    opts = SolverOptions(seed=2)
    state = init_state(red, opts)
    for _ in range(40):
        nxt = step(state, red, opts)
        lhs = csum((state.x - red.y_bar) ** 2) - csum((nxt.x - red.y_bar) ** 2)
        rhs = csum((state.x - nxt.x) ** 2)
        assert lhs >= rhs - 1e-12
        state = nxt


def test_step_fixed_point_has_zero_relaxed_alpha():
    # a point solving the subproblem built at itself: y_bar = x + lam * w(x, eps)
    # on the support, dominated off it; alpha_eps vanishes there exactly
    rng = np.random.default_rng(14)
    for _ in range(20):
        n = int(rng.integers(2, 40))
        p = float(rng.uniform(0.15, 0.9))
        x = rng.uniform(0.05, 1.0, n)
        x[rng.uniform(size=n) < 0.4] = 0.0
        eps = rng.uniform(0.01, 0.3, n)
        lam = float(rng.uniform(0.05, 1.5))
        w = compute_weights(x, eps, p)
        y_bar = np.where(x != 0.0, x + lam * w, 0.5 * lam * w)
        alpha_eps, _ = relaxed_residuals(x, lam, eps, y_bar, p, gamma=1.0)
        # zero up to the rounding of y_bar = x + lam*w itself
        assert alpha_eps <= 8 * n * np.finfo(float).eps * max(1.0, lam)


# ----------------------------------------------------------------- solve


def test_solve_replay_golden():
    rep = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0)
    assert rep.status == CONVERGED
    assert rep.iterations <= 100
    assert abs(rep.x_final[0] - 0.2972) <= 5e-3
    assert abs(rep.x_final[1] - 0.2069) <= 5e-3
    assert rep.wall_time < 1.0


def test_solve_inside_ball_returns_input():
    inst = ProblemInstance(y=[0.1, 0.1], p=0.5, gamma=1.0)
    rep = solve(inst)
    assert rep.status == TRIVIAL_INSIDE_BALL
    assert rep.iterations == 0
    assert np.array_equal(rep.x_final, inst.y)


def test_solve_termination_test_holds_at_final_point():
    rep = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0)
    baseline = max(1.0, 1.0)  # beta at x0=0 equals gamma=1
    assert max(rep.alpha_bar_final, rep.beta_final) <= 1e-8 * baseline


def test_solve_orthant_symmetry():
    # flipping a sign of y flips the matching coordinate of the solution
    rep_pos = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0)
    inst_neg = ProblemInstance(y=[-0.5, 0.45], p=0.5, gamma=1.0)
    rep_neg = solve(inst_neg, SolverOptions(), eps0=REPLAY_EPS0)
    assert np.allclose(rep_neg.x_final, rep_pos.x_final * np.array([-1.0, 1.0]), atol=1e-14)


def test_solve_zero_coordinates_stay_zero():
    inst = ProblemInstance(y=[0.5, 0.0, -0.45, 0.0], p=0.5, gamma=0.9)
    rep = solve(inst, SolverOptions(seed=3))
    assert rep.status == CONVERGED
    assert rep.x_final[1] == 0.0 and rep.x_final[3] == 0.0
    assert rep.x_final[2] <= 0.0  # sign follows y


def test_solve_batch_small_instances_converges():
    rng = np.random.default_rng(6)
    for p in (0.4, 0.8):
        for _ in range(10):
            y = rng.normal(0.01, 0.3, 100)
            inst = ProblemInstance(y=y, p=p, gamma=1.0)
            rep = solve(inst, SolverOptions(seed=int(rng.integers(1 << 31))))
            assert rep.status == CONVERGED


def test_solve_trigger_set_cofinal_on_replay():
    rep = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0)
    # after the first few iterations every step fires the update
    trailing = [s.triggered for s in rep.history[5:]]
    assert all(trailing)
    assert rep.trigger_count >= rep.iterations - 4


def test_solve_epsilon_monotone_and_feasible_path():
    red = split_signs(replay_instance())
    states = []
    rep = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0, collect=states.append)
    for prev, cur in zip(states, states[1:]):
        assert np.all(cur.eps <= prev.eps)
        assert csum((cur.x + cur.eps) ** 0.5) <= 1.0 * (1 + 1e-12)
        # every iterate stays inside the lp ball
        assert csum(np.abs(cur.x) ** 0.5) <= 1.0


def test_solve_report_histories_match_flags():
    rep = solve(replay_instance(), SolverOptions(), eps0=REPLAY_EPS0)
    fired = [s.k - 1 for s in rep.history if s.triggered]
    assert tuple(fired) == rep.trigger_log
